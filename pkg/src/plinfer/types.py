"""The type language: type terms, union types, definition sets, contexts.

Type terms are variables, constants, base types, functor applications
(with the reserved functor ``.`` for list cells) and applications of
defined type symbols.  A definition set maps symbol names to their
union-type right-hand sides; entries created by binding a type variable
during constraint solving are marked ``from_var`` and later promoted to
ordinary symbols.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from plinfer import syntax
from plinfer.syntax import AtomC, Compound, Cons, FloatC, IntC, NilT, StrC, Term

LIST_FUNCTOR = "."
BASE_NAMES = ("int", "float", "string", "atom")


class TypeError_(Exception):
    """Ill-formed type construction or unknown symbol lookup."""


# ---------------------------------------------------------------------------
# Type terms


class TypeTerm:
    __slots__ = ()


@dataclass(frozen=True)
class TVar(TypeTerm):
    name: str


@dataclass(frozen=True)
class TConst(TypeTerm):
    value: Term  # AtomC | IntC | FloatC | StrC | NilT, always ground

    def __post_init__(self):
        assert syntax.is_constant(self.value)


@dataclass(frozen=True)
class TBase(TypeTerm):
    which: str

    def __post_init__(self):
        assert self.which in BASE_NAMES


@dataclass(frozen=True)
class TFunc(TypeTerm):
    functor: str
    args: tuple[TypeTerm, ...]

    def __post_init__(self):
        assert len(self.args) >= 1


@dataclass(frozen=True)
class TSymbApp(TypeTerm):
    symbol: str
    args: tuple[TypeTerm, ...] = ()


@dataclass(frozen=True)
class UnionType:
    summands: tuple[TypeTerm, ...]

    def __post_init__(self):
        assert len(self.summands) >= 1


NIL_TYPE = TConst(syntax.NIL)
INT = TBase("int")
FLOAT = TBase("float")
STRING = TBase("string")
ATOM = TBase("atom")
NUM = UnionType((INT, FLOAT))


def cons_type(head: TypeTerm, tail: TypeTerm) -> TFunc:
    return TFunc(LIST_FUNCTOR, (head, tail))


def sym(name: str, *args: TypeTerm) -> TSymbApp:
    return TSymbApp(name, tuple(args))


def union_of(summands: list[TypeTerm] | tuple[TypeTerm, ...]) -> UnionType:
    return UnionType(tuple(summands))


def base_of_constant(c: Term) -> str | None:
    """Base type of a constant; Nil has none (it stays ``[]``)."""
    if isinstance(c, AtomC):
        return "atom"
    if isinstance(c, IntC):
        return "int"
    if isinstance(c, FloatC):
        return "float"
    if isinstance(c, StrC):
        return "string"
    return None


# ---------------------------------------------------------------------------
# Definitions


@dataclass(frozen=True)
class TypeDefinition:
    symbol: str
    params: tuple[str, ...]
    rhs: UnionType
    declared: bool = False
    from_var: bool = False


class DefSet:
    """Insertion-ordered map from symbol name to its definition."""

    def __init__(self, defs: dict[str, TypeDefinition] | None = None):
        self._defs: dict[str, TypeDefinition] = dict(defs) if defs else {}

    def __contains__(self, name: str) -> bool:
        return name in self._defs

    def __len__(self) -> int:
        return len(self._defs)

    def __iter__(self):
        return iter(self._defs.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, DefSet) and self._defs == other._defs

    def get(self, name: str) -> TypeDefinition | None:
        return self._defs.get(name)

    def names(self) -> list[str]:
        return list(self._defs)

    def define(self, defn: TypeDefinition) -> None:
        self._defs[defn.symbol] = defn

    def remove(self, name: str) -> None:
        del self._defs[name]

    def copy(self) -> "DefSet":
        return DefSet(self._defs)

    def merged_with(self, other: "DefSet") -> "DefSet":
        out = self.copy()
        for d in other:
            out.define(d)
        return out

    def __repr__(self) -> str:
        inner = ", ".join(f"{d.symbol}={render_union(d.rhs)}" for d in self)
        return f"DefSet({inner})"


def def_of(name: str, defs: DefSet) -> UnionType:
    """Right-hand side of a symbol's definition, without unfolding."""
    d = defs.get(name)
    if d is None:
        raise TypeError_(f"unknown type symbol {name!r}")
    return d.rhs


def instantiate(defn: TypeDefinition, args: tuple[TypeTerm, ...]) -> UnionType:
    if len(args) != len(defn.params):
        raise TypeError_(
            f"{defn.symbol!r} expects {len(defn.params)} arguments, got {len(args)}"
        )
    mapping = dict(zip(defn.params, args))
    return subst_union(defn.rhs, mapping)


def unfold_app(app: TSymbApp, defs: DefSet) -> UnionType:
    return instantiate_or_fail(app, defs)


def instantiate_or_fail(app: TSymbApp, defs: DefSet) -> UnionType:
    d = defs.get(app.symbol)
    if d is None:
        raise TypeError_(f"unknown type symbol {app.symbol!r}")
    return instantiate(d, app.args)


# ---------------------------------------------------------------------------
# Substitution and traversal


def subst_term(t: TypeTerm, mapping: dict[str, TypeTerm]) -> TypeTerm:
    if isinstance(t, TVar):
        return mapping.get(t.name, t)
    if isinstance(t, TFunc):
        return TFunc(t.functor, tuple(subst_term(a, mapping) for a in t.args))
    if isinstance(t, TSymbApp) and t.args:
        return TSymbApp(t.symbol, tuple(subst_term(a, mapping) for a in t.args))
    return t


def subst_union(u: UnionType, mapping: dict[str, TypeTerm]) -> UnionType:
    return UnionType(tuple(subst_term(s, mapping) for s in u.summands))


def subst_symbols_term(t: TypeTerm, mapping: dict[str, TypeTerm]) -> TypeTerm:
    """Replace 0-ary symbol applications by type terms."""
    if isinstance(t, TSymbApp):
        if not t.args and t.symbol in mapping:
            return mapping[t.symbol]
        return TSymbApp(t.symbol, tuple(subst_symbols_term(a, mapping) for a in t.args))
    if isinstance(t, TFunc):
        return TFunc(t.functor, tuple(subst_symbols_term(a, mapping) for a in t.args))
    return t


def free_tvars_term(t: TypeTerm) -> set[str]:
    if isinstance(t, TVar):
        return {t.name}
    if isinstance(t, (TFunc, TSymbApp)):
        out: set[str] = set()
        for a in t.args:
            out |= free_tvars_term(a)
        return out
    return set()


def free_tvars_union(u: UnionType) -> set[str]:
    out: set[str] = set()
    for s in u.summands:
        out |= free_tvars_term(s)
    return out


def symbols_in_term(t: TypeTerm) -> set[str]:
    if isinstance(t, TSymbApp):
        out = {t.symbol}
        for a in t.args:
            out |= symbols_in_term(a)
        return out
    if isinstance(t, TFunc):
        out = set()
        for a in t.args:
            out |= symbols_in_term(a)
        return out
    return set()


def symbols_in_union(u: UnionType) -> set[str]:
    out: set[str] = set()
    for s in u.summands:
        out |= symbols_in_term(s)
    return out


def term_size(t: TypeTerm) -> int:
    if isinstance(t, (TFunc, TSymbApp)):
        return 1 + sum(term_size(a) for a in t.args)
    return 1


def union_size(u: UnionType) -> int:
    return 1 + sum(term_size(s) for s in u.summands)


# ---------------------------------------------------------------------------
# Fresh names

VAR_PREFIX = "@"
SYM_PREFIX = "#"


class NameSupply:
    """Fresh type variable and type symbol ids for one inference run."""

    def __init__(self):
        self._vars = 0
        self._syms = 0

    def fresh_var(self) -> TVar:
        self._vars += 1
        return TVar(f"{VAR_PREFIX}{self._vars}")

    def fresh_sym(self) -> str:
        self._syms += 1
        return f"{SYM_PREFIX}{self._syms}"


# ---------------------------------------------------------------------------
# Contexts and their combination

Context = dict[str, str]  # program variable -> type symbol name


def _single_summand(name: str, defs: DefSet) -> TypeTerm:
    rhs = def_of(name, defs)
    assert len(rhs.summands) == 1, (
        f"context symbol {name!r} must have a single-summand definition inside a query"
    )
    return rhs.summands[0]


def oplus(contexts: list[Context], defs: DefSet, supply: NameSupply) -> tuple[Context, DefSet]:
    """Combine the contexts of disjunctive alternatives.

    A variable appearing in two or more alternatives gets a fresh symbol
    defined as the sum of its per-alternative symbols; a variable in a
    single alternative keeps its symbol.  Existing definitions are
    preserved.
    """
    out_defs = defs.copy()
    ctx: Context = {}
    order: list[str] = []
    holders: dict[str, list[str]] = {}
    for g in contexts:
        for v, s in g.items():
            if v not in holders:
                holders[v] = []
                order.append(v)
            holders[v].append(s)
    for v in order:
        syms = holders[v]
        if len(syms) == 1:
            ctx[v] = syms[0]
        else:
            fresh = supply.fresh_sym()
            out_defs.define(
                TypeDefinition(fresh, (), UnionType(tuple(TSymbApp(s) for s in syms)))
            )
            ctx[v] = fresh
    return ctx, out_defs


def otimes(
    contexts: list[Context], defs: DefSet
) -> tuple[Context, DefSet, list[tuple[TypeTerm, TypeTerm]]]:
    """Combine the contexts of conjoined goals.

    A variable shared between goals keeps the symbol of its first
    occurrence; the definitions of all its symbols are equated pairwise
    against the first, which yields the returned equality constraints.
    """
    ctx: Context = {}
    eqs: list[tuple[TypeTerm, TypeTerm]] = []
    for g in contexts:
        for v, s in g.items():
            if v not in ctx:
                ctx[v] = s
            elif ctx[v] != s:
                eqs.append((_single_summand(ctx[v], defs), _single_summand(s, defs)))
    return ctx, defs, eqs


# ---------------------------------------------------------------------------
# Simplification


def _inline_uses(defs: DefSet, name: str, value: TypeTerm) -> bool:
    """Replace symbol occurrences at argument positions; True if any use."""
    used = False
    for d in list(defs):
        new_summands = []
        changed = False
        for s in d.rhs.summands:
            ns = subst_symbols_term(s, {name: value})
            if ns != s:
                changed = True
            new_summands.append(ns)
        if changed:
            used = True
            defs.define(replace(d, rhs=UnionType(tuple(new_summands))))
    return used


def simplify(defs: DefSet, keep: frozenset[str] = frozenset()) -> DefSet:
    """Normalise a definition set.

    Applied to fixpoint: alias definitions (single variable or symbol
    right-hand side) are inlined at their uses; symbol summands whose
    definition is known are flattened into the enclosing sum; duplicate
    summands are removed; a summand equal to the defined symbol itself
    is dropped when other summands remain.  Definitions that were never
    referenced are kept even when trivial; declared types and ``keep``
    symbols are never inlined away.
    """
    out = defs.copy()
    referenced_in_input: set[str] = set(keep)
    for d in out:
        referenced_in_input |= symbols_in_union(d.rhs)

    for _ in range(10000):
        changed = False

        # (b) flatten symbol summands with known, non-declared definitions
        for d in list(out):
            new_summands: list[TypeTerm] = []
            flat_changed = False
            for s in d.rhs.summands:
                target = None
                if isinstance(s, TSymbApp) and not s.args:
                    t = out.get(s.symbol)
                    if t is not None and not t.declared and s.symbol != d.symbol:
                        inner = t.rhs.summands
                        # self-recursive sums are handled by rule (d) first
                        if not any(
                            isinstance(x, TSymbApp) and x.symbol == s.symbol and not x.args
                            for x in inner
                        ):
                            target = inner
                if target is None:
                    new_summands.append(s)
                else:
                    flat_changed = True
                    new_summands.extend(target)
            if flat_changed:
                out.define(replace(d, rhs=UnionType(tuple(new_summands))))
                changed = True

        # (a) inline alias definitions at argument positions
        for d in list(out):
            if d.declared or d.symbol in keep or d.params:
                continue
            rhs = out.get(d.symbol).rhs  # may have changed above
            if len(rhs.summands) != 1:
                continue
            body = rhs.summands[0]
            if not isinstance(body, (TVar, TSymbApp)):
                continue
            if isinstance(body, TSymbApp) and body.symbol == d.symbol:
                continue
            if _inline_uses(out, d.symbol, body):
                changed = True

        # (c) duplicate summands, (d) self summand
        for d in list(out):
            rhs = out.get(d.symbol).rhs
            seen: list[TypeTerm] = []
            for s in rhs.summands:
                if isinstance(s, TSymbApp) and s.symbol == d.symbol and not s.args:
                    continue
                if s not in seen:
                    seen.append(s)
            if not seen:
                seen = [TSymbApp(d.symbol)]
            if tuple(seen) != rhs.summands:
                out.define(replace(d, rhs=UnionType(tuple(seen))))
                changed = True

        if not changed:
            break
    else:
        raise AssertionError("simplify did not reach a fixpoint")

    # prune definitions whose references were all consumed
    still_referenced: set[str] = set(keep)
    for d in out:
        still_referenced |= symbols_in_union(d.rhs)
    for d in list(out):
        if d.declared or d.symbol in keep:
            continue
        if d.symbol in referenced_in_input and d.symbol not in still_referenced:
            out.remove(d.symbol)
    return out


def promote_var_entries(defs: DefSet) -> DefSet:
    """Turn type-variable bindings recorded as definitions into symbols."""
    var_names = [d.symbol for d in defs if d.from_var]
    if not var_names:
        return defs
    mapping = {name: TSymbApp(name) for name in var_names}

    def promote_term(t: TypeTerm) -> TypeTerm:
        if isinstance(t, TVar):
            return mapping.get(t.name, t)
        if isinstance(t, TFunc):
            return TFunc(t.functor, tuple(promote_term(a) for a in t.args))
        if isinstance(t, TSymbApp) and t.args:
            return TSymbApp(t.symbol, tuple(promote_term(a) for a in t.args))
        return t

    out = DefSet()
    for d in defs:
        rhs = UnionType(tuple(promote_term(s) for s in d.rhs.summands))
        out.define(replace(d, rhs=rhs, from_var=False))
    return out


# ---------------------------------------------------------------------------
# Ground membership oracle


class Tri(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "out-of-fuel"


def _tri_any(values) -> Tri:
    saw_unknown = False
    for v in values:
        if v is Tri.YES:
            return Tri.YES
        if v is Tri.UNKNOWN:
            saw_unknown = True
    return Tri.UNKNOWN if saw_unknown else Tri.NO


def _tri_all(values) -> Tri:
    saw_unknown = False
    for v in values:
        if v is Tri.NO:
            return Tri.NO
        if v is Tri.UNKNOWN:
            saw_unknown = True
    return Tri.UNKNOWN if saw_unknown else Tri.YES


def member(t: Term, tau: TypeTerm | UnionType, defs: DefSet, fuel: int) -> Tri:
    """Structural membership of a ground term in a type's denotation.

    Symbol applications unfold their definitions, consuming fuel; an
    unconstrained type variable contains every term.
    """
    if isinstance(tau, UnionType):
        return _tri_any(member(t, s, defs, fuel) for s in tau.summands)
    if isinstance(tau, TVar):
        d = defs.get(tau.name)
        if d is not None:
            if fuel <= 0:
                return Tri.UNKNOWN
            return member(t, d.rhs, defs, fuel - 1)
        return Tri.YES
    if isinstance(tau, TBase):
        matches = {
            "int": IntC,
            "float": FloatC,
            "string": StrC,
            "atom": AtomC,
        }[tau.which]
        return Tri.YES if isinstance(t, matches) else Tri.NO
    if isinstance(tau, TConst):
        return Tri.YES if t == tau.value else Tri.NO
    if isinstance(tau, TFunc):
        if tau.functor == LIST_FUNCTOR:
            if not isinstance(t, Cons):
                return Tri.NO
            sub = (t.head, t.tail)
        else:
            if not (isinstance(t, Compound) and t.functor == tau.functor
                    and len(t.args) == len(tau.args)):
                return Tri.NO
            sub = t.args
        return _tri_all(member(x, a, defs, fuel) for x, a in zip(sub, tau.args))
    assert isinstance(tau, TSymbApp)
    if fuel <= 0:
        return Tri.UNKNOWN
    return member(t, instantiate_or_fail(tau, defs), defs, fuel - 1)


# ---------------------------------------------------------------------------
# Declaration resolution


def resolve_declarations(decls: tuple[syntax.Declaration, ...]) -> DefSet:
    """Convert ``:- type`` directives into declared type definitions."""
    arities = {d.symbol: len(d.params) for d in decls}
    defs = DefSet()

    def conv(t: Term, params: tuple[str, ...]) -> TypeTerm:
        if isinstance(t, syntax.Var):
            return TVar(t.name)
        if isinstance(t, NilT):
            return NIL_TYPE
        if isinstance(t, AtomC):
            if t.name in arities and arities[t.name] == 0:
                return TSymbApp(t.name)
            if t.name in BASE_NAMES:
                return TBase(t.name)
            return TConst(t)
        if isinstance(t, (IntC, FloatC, StrC)):
            return TConst(t)
        if isinstance(t, Cons):
            return cons_type(conv(t.head, params), conv(t.tail, params))
        assert isinstance(t, Compound)
        if t.functor in arities and arities[t.functor] == len(t.args):
            return TSymbApp(t.functor, tuple(conv(a, params) for a in t.args))
        return TFunc(t.functor, tuple(conv(a, params) for a in t.args))

    for d in decls:
        summands = tuple(conv(s, d.params) for s in d.summands)
        defs.define(TypeDefinition(d.symbol, d.params, UnionType(summands), declared=True))
    return defs


LIST_DECLARATION = syntax.Declaration(
    "list", ("A",),
    (syntax.NIL, syntax.Cons(syntax.Var("A"), syntax.Compound("list", (syntax.Var("A"),)))),
)


def constructor_index(declared: DefSet) -> dict[tuple, tuple[str, tuple[str, ...], TypeTerm]]:
    """Map constructor heads to (declared symbol, params, summand)."""
    index: dict[tuple, tuple[str, tuple[str, ...], TypeTerm]] = {}
    for d in declared:
        if not d.declared:
            continue
        for s in d.rhs.summands:
            key = None
            if isinstance(s, TConst):
                key = ("const", s.value)
            elif isinstance(s, TFunc):
                key = ("func", s.functor, len(s.args))
            if key is not None:
                index[key] = (d.symbol, d.params, s)
    return index


# ---------------------------------------------------------------------------
# Rendering of internal states (debugging and error messages)


def render_type(t: TypeTerm | UnionType) -> str:
    if isinstance(t, UnionType):
        return " + ".join(render_type(s) for s in t.summands)
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TConst):
        return syntax.render_term(t.value)
    if isinstance(t, TBase):
        return t.which
    if isinstance(t, TFunc):
        if t.functor == LIST_FUNCTOR:
            return f"[ {render_type(t.args[0])} | {render_type(t.args[1])} ]"
        return f"{t.functor}({', '.join(render_type(a) for a in t.args)})"
    assert isinstance(t, TSymbApp)
    if not t.args:
        return t.symbol
    return f"{t.symbol}({', '.join(render_type(a) for a in t.args)})"


def render_union(u: UnionType) -> str:
    return render_type(u)
