"""Type constraint generation over kernel predicates.

Generation walks a kernel predicate bottom-up, producing equality and
subtyping constraints plus a definition set.  Calls to already-inferred
predicates instantiate a fresh copy of the callee's cached signature;
recursive calls constrain fresh variables against the head symbols of
the predicate under inference, which are patched in once the final
context is known.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from plinfer import syntax, types
from plinfer.kernel import FlagSet, KernelPredicate, PredKey, Query
from plinfer.syntax import Arith, Call, Goal, Term, Unif
from plinfer.types import (
    Context, DefSet, NameSupply, NUM, TConst, TFunc, TSymbApp, TVar, TypeDefinition,
    TypeTerm, UnionType,
)


class GenError(Exception):
    pass


@dataclass(frozen=True)
class EqConstraint:
    lhs: TypeTerm
    rhs: TypeTerm

    def __post_init__(self):
        assert isinstance(self.lhs, TypeTerm) and isinstance(self.rhs, TypeTerm)


@dataclass(frozen=True)
class IneqConstraint:
    lhs: TypeTerm | UnionType
    rhs: TypeTerm | UnionType


@dataclass
class GenResult:
    ctx: Context
    eq: list[EqConstraint]
    ineq: list[IneqConstraint]
    defs: DefSet


@dataclass(frozen=True)
class CachedSignature:
    arg_syms: tuple[str, ...]
    defs: DefSet


@dataclass
class InferEnv:
    flags: FlagSet
    declared: DefSet
    supply: NameSupply
    signatures: dict[PredKey, CachedSignature] = field(default_factory=dict)
    current: PredKey | None = None
    head_refs: tuple[str, ...] = ()


def _ordered_tvars_term(t: TypeTerm, out: list[str]):
    if isinstance(t, TVar):
        if t.name not in out:
            out.append(t.name)
    elif isinstance(t, (TFunc, TSymbApp)):
        for a in t.args:
            _ordered_tvars_term(a, out)


def _ordered_tvars_defs(defs: DefSet) -> list[str]:
    out: list[str] = []
    for d in defs:
        for s in d.rhs.summands:
            _ordered_tvars_term(s, out)
    return out


# ---------------------------------------------------------------------------
# Base typing of constants and functors


def constant_type(
    c: Term, env: InferEnv, ctor_index: dict
) -> tuple[TypeTerm, list[EqConstraint]]:
    key = ("const", c)
    hit = ctor_index.get(key)
    if hit is not None:
        decl_sym, params, _summand = hit
        fresh = {p: env.supply.fresh_var() for p in params}
        return TSymbApp(decl_sym, tuple(fresh[p] for p in params)), []
    if isinstance(c, syntax.NilT):
        return types.NIL_TYPE, []
    if env.flags.basetype:
        base = types.base_of_constant(c)
        assert base is not None
        return types.TBase(base), []
    return TConst(c), []


def functor_type(
    functor: str, arg_types: tuple[TypeTerm, ...], env: InferEnv, ctor_index: dict
) -> tuple[TypeTerm, list[EqConstraint]]:
    key = ("func", functor, len(arg_types))
    hit = ctor_index.get(key)
    if hit is not None:
        decl_sym, params, summand = hit
        fresh = {p: env.supply.fresh_var() for p in params}
        inst = types.subst_term(summand, fresh)
        assert isinstance(inst, TFunc)
        eqs = [EqConstraint(t, s) for t, s in zip(arg_types, inst.args)]
        return TSymbApp(decl_sym, tuple(fresh[p] for p in params)), eqs
    return TFunc(functor, arg_types), []


# ---------------------------------------------------------------------------
# Terms


def generate_term(
    t: Term, env: InferEnv, ctor_index: dict, defs: DefSet
) -> tuple[TypeTerm, Context, list[EqConstraint]]:
    """Type a term; variable assumptions are added to ``defs`` in place."""
    if isinstance(t, syntax.Var):
        alpha = env.supply.fresh_var()
        sigma = env.supply.fresh_sym()
        defs.define(TypeDefinition(sigma, (), UnionType((alpha,))))
        return alpha, {t.name: sigma}, []
    if syntax.is_constant(t):
        tau, eqs = constant_type(t, env, ctor_index)
        return tau, {}, eqs
    if isinstance(t, syntax.Cons):
        functor, args = types.LIST_FUNCTOR, (t.head, t.tail)
    else:
        assert isinstance(t, syntax.Compound)
        functor, args = t.functor, t.args
    arg_types: list[TypeTerm] = []
    contexts: list[Context] = []
    eqs: list[EqConstraint] = []
    for a in args:
        tau_a, ctx_a, eq_a = generate_term(a, env, ctor_index, defs)
        arg_types.append(tau_a)
        contexts.append(ctx_a)
        eqs.extend(eq_a)
    ctx, _, glue = types.otimes(contexts, defs)
    eqs.extend(EqConstraint(l, r) for l, r in glue)
    tau, extra = functor_type(functor, tuple(arg_types), env, ctor_index)
    eqs.extend(extra)
    return tau, ctx, eqs


# ---------------------------------------------------------------------------
# Goals


def _call_positions(
    args: tuple[Term, ...], bounds: list[TypeTerm], env: InferEnv, defs: DefSet
) -> tuple[Context, list[EqConstraint], list[IneqConstraint]]:
    """Shared shape of call handling: one fresh (sigma, alpha) per position."""
    contexts: list[Context] = []
    ineqs: list[IneqConstraint] = []
    for arg, bound in zip(args, bounds):
        assert isinstance(arg, syntax.Var)
        alpha = env.supply.fresh_var()
        sigma = env.supply.fresh_sym()
        defs.define(TypeDefinition(sigma, (), UnionType((alpha,))))
        contexts.append({arg.name: sigma})
        ineqs.append(IneqConstraint(alpha, bound))
    ctx, _, glue = types.otimes(contexts, defs)
    return ctx, [EqConstraint(l, r) for l, r in glue], ineqs


def _instantiate_signature(
    cached: CachedSignature, env: InferEnv, defs: DefSet
) -> list[TypeTerm]:
    """Copy a cached signature with fresh symbols and type variables."""
    sym_map: dict[str, TypeTerm] = {}
    renamed_syms: dict[str, str] = {}
    for d in cached.defs:
        if d.declared:
            continue
        renamed_syms[d.symbol] = env.supply.fresh_sym()
        sym_map[d.symbol] = TSymbApp(renamed_syms[d.symbol])
    var_map = {v: env.supply.fresh_var() for v in _ordered_tvars_defs(cached.defs)}
    for d in cached.defs:
        if d.declared:
            continue
        rhs = UnionType(
            tuple(
                types.subst_term(types.subst_symbols_term(s, sym_map), var_map)
                for s in d.rhs.summands
            )
        )
        defs.define(TypeDefinition(renamed_syms[d.symbol], d.params, rhs))
    return [TSymbApp(renamed_syms[s]) for s in cached.arg_syms]


def generate_goal(g: Goal, env: InferEnv, ctor_index: dict, defs: DefSet) -> GenResult:
    if isinstance(g, Unif):
        t1, c1, e1 = generate_term(g.lhs, env, ctor_index, defs)
        t2, c2, e2 = generate_term(g.rhs, env, ctor_index, defs)
        ctx, _, glue = types.otimes([c1, c2], defs)
        eqs = e1 + e2 + [EqConstraint(t1, t2)] + [EqConstraint(l, r) for l, r in glue]
        return GenResult(ctx, eqs, [], defs)

    if isinstance(g, Arith):
        seen: list[str] = []
        for name in sorted(
            syntax.term_vars(g.lhs) | syntax.term_vars(g.rhs),
            key=lambda n: _first_pos(g, n),
        ):
            seen.append(name)
        ctx: Context = {}
        ineqs: list[IneqConstraint] = []
        for name in seen:
            alpha = env.supply.fresh_var()
            sigma = env.supply.fresh_sym()
            defs.define(TypeDefinition(sigma, (), UnionType((alpha,))))
            ctx[name] = sigma
            ineqs.append(IneqConstraint(alpha, NUM))
        return GenResult(ctx, [], ineqs, defs)

    assert isinstance(g, Call)
    key = (g.pred, g.arity)
    if key == env.current:
        bounds: list[TypeTerm] = [TSymbApp(h) for h in env.head_refs]
    else:
        cached = env.signatures.get(key)
        if cached is None:
            raise GenError(f"no cached signature for {g.pred}/{g.arity}; strata order broken")
        bounds = _instantiate_signature(cached, env, defs)
    ctx, eqs, ineqs = _call_positions(g.args, bounds, env, defs)
    return GenResult(ctx, eqs, ineqs, defs)


def _first_pos(g: Arith, name: str) -> int:
    order: list[str] = []

    def walk(t: Term):
        if isinstance(t, syntax.Var):
            if t.name not in order:
                order.append(t.name)
        elif isinstance(t, syntax.Cons):
            walk(t.head)
            walk(t.tail)
        elif isinstance(t, syntax.Compound):
            for a in t.args:
                walk(a)

    walk(g.lhs)
    walk(g.rhs)
    return order.index(name)


def generate_query(q: Query, env: InferEnv, ctor_index: dict, defs: DefSet) -> GenResult:
    contexts: list[Context] = []
    eqs: list[EqConstraint] = []
    ineqs: list[IneqConstraint] = []
    for g in q:
        r = generate_goal(g, env, ctor_index, defs)
        contexts.append(r.ctx)
        eqs.extend(r.eq)
        ineqs.extend(r.ineq)
    ctx, _, glue = types.otimes(contexts, defs)
    eqs.extend(EqConstraint(l, r) for l, r in glue)
    return GenResult(ctx, eqs, ineqs, defs)


# ---------------------------------------------------------------------------
# Predicates


def generate_predicate(pred: KernelPredicate, env: InferEnv) -> GenResult:
    """Generate constraints for one kernel predicate.

    The returned context maps every variable of the predicate to its
    symbol; head variable symbols are the signature roots.
    """
    ctor_index = types.constructor_index(env.declared)
    env.current = (pred.name, pred.arity)
    env.head_refs = tuple(env.supply.fresh_sym() for _ in pred.head_vars)

    defs = DefSet()
    for d in env.declared:
        defs.define(d)

    contexts: list[Context] = []
    eqs: list[EqConstraint] = []
    ineqs: list[IneqConstraint] = []
    for q in pred.queries:
        r = generate_query(q, env, ctor_index, defs)
        contexts.append(r.ctx)
        eqs.extend(r.eq)
        ineqs.extend(r.ineq)
    ctx, defs, _ = (None, defs, None) and (None, None, None) or (None, None, None)  # placeholder
    raise NotImplementedError
