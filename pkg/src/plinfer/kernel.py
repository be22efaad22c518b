"""Compilation of source programs into kernel form.

Each predicate becomes a single virtual clause: a head with distinct
fresh variables and a body that is a disjunction of queries.  A query
is a flat sequence of primitive goals: unifications with a variable on
the left, calls whose arguments are all variables, and arithmetic
comparisons.  Distinct queries share head variables only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from plinfer import syntax
from plinfer.syntax import (
    Arith, Call, Clause, Compound, Conj, Disj, Goal, SourceProgram, Term, Unif, Var,
)

ARITH_BUILTINS = {("=<", 2), ("<", 2), (">=", 2), (">", 2), ("is", 2)}


class KernelError(Exception):
    pass


@dataclass(frozen=True)
class FlagSet:
    """Inference switches; defaults follow the reference behaviour."""

    basetype: bool = True
    list: bool = False
    closure: bool = False


Query = tuple[Goal, ...]
PredKey = tuple[str, int]


@dataclass(frozen=True)
class KernelPredicate:
    name: str
    arity: int
    head_vars: tuple[str, ...]
    queries: tuple[Query, ...]


@dataclass(frozen=True)
class KernelProgram:
    predicates: dict[PredKey, KernelPredicate]
    declarations: tuple[syntax.Declaration, ...]
    flags: FlagSet

    def order(self) -> list[PredKey]:
        return list(self.predicates)


# ---------------------------------------------------------------------------


def _dnf(g: Goal) -> list[list[Goal]]:
    """Disjunctive normal form of a body as lists of primitive goals."""
    if isinstance(g, (Unif, Arith)):
        return [[g]]
    if isinstance(g, Call):
        if g.pred == "true" and g.arity == 0:
            return [[]]
        return [[g]]
    if isinstance(g, Conj):
        queries: list[list[Goal]] = [[]]
        for item in g.items:
            queries = [q + alt for q in queries for alt in _dnf(item)]
        return queries
    assert isinstance(g, Disj)
    out: list[list[Goal]] = []
    for item in g.items:
        out.extend(_dnf(item))
    return out


class _Kernelizer:
    def __init__(self, program: SourceProgram):
        self.program = program
        self.counter = 0
        self.defined: set[PredKey] = set()
        for c in program.clauses:
            self.defined.add(self._head_key(c.head))

    @staticmethod
    def _head_key(head: Term) -> PredKey:
        if isinstance(head, syntax.AtomC):
            return (head.name, 0)
        assert isinstance(head, Compound)
        return (head.functor, len(head.args))

    def fresh(self) -> str:
        self.counter += 1
        return f"V{self.counter}"

    def _rename_term(self, t: Term, ren: dict[str, str]) -> Term:
        if isinstance(t, Var):
            if t.name not in ren:
                ren[t.name] = self.fresh()
            return Var(ren[t.name])
        if isinstance(t, syntax.Cons):
            return syntax.Cons(self._rename_term(t.head, ren), self._rename_term(t.tail, ren))
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(self._rename_term(a, ren) for a in t.args))
        return t

    def _normalize_goal(self, g: Goal, ren: dict[str, str], out: list[Goal]):
        if isinstance(g, Unif):
            lhs = self._rename_term(g.lhs, ren)
            rhs = self._rename_term(g.rhs, ren)
            if isinstance(lhs, Var):
                out.append(Unif(lhs, rhs))
            elif isinstance(rhs, Var):
                out.append(Unif(rhs, lhs))
            else:
                v = Var(self.fresh())
                out.append(Unif(v, lhs))
                out.append(Unif(v, rhs))
            return
        if isinstance(g, Arith):
            out.append(Arith(g.op, self._rename_term(g.lhs, ren), self._rename_term(g.rhs, ren)))
            return
        assert isinstance(g, Call)
        key = (g.pred, g.arity)
        if key not in self.defined:
            raise KernelError(f"call to undefined predicate {g.pred}/{g.arity}")
        args: list[Term] = []
        for a in g.args:
            a = self._rename_term(a, ren)
            if isinstance(a, Var):
                args.append(a)
            else:
                v = Var(self.fresh())
                out.append(Unif(v, a))
                args.append(v)
        out.append(Call(g.pred, g.arity, tuple(args)))

    def compile_predicate(self, key: PredKey, clauses: list[Clause]) -> KernelPredicate:
        name, arity = key
        head_vars = tuple(f"H{i + 1}" for i in range(arity))
        queries: list[Query] = []
        for clause in clauses:
            head_args = clause.head.args if isinstance(clause.head, Compound) else ()
            # head variables appearing directly as distinct head arguments
            # keep their position's name instead of an extra unification
            head_binding: dict[str, str] = {}
            deferred: list[tuple[str, Term]] = []
            for hv, arg in zip(head_vars, head_args):
                if isinstance(arg, Var) and arg.name not in head_binding:
                    head_binding[arg.name] = hv
                else:
                    deferred.append((hv, arg))
            body_queries = _dnf(clause.body) if clause.body is not None else [[]]
            for q in body_queries:
                ren = dict(head_binding)
                goals: list[Goal] = []
                for hv, arg in deferred:
                    goals.append(Unif(Var(hv), self._rename_term(arg, ren)))
                for g in q:
                    self._normalize_goal(g, ren, goals)
                queries.append(tuple(goals))
        pred = KernelPredicate(name, arity, head_vars, tuple(queries))
        check_invariants(pred)
        return pred


def to_kernel(program: SourceProgram, flags: FlagSet) -> KernelProgram:
    k = _Kernelizer(program)
    grouped: dict[PredKey, list[Clause]] = {}
    for c in program.clauses:
        grouped.setdefault(k._head_key(c.head), []).append(c)
    preds = {key: k.compile_predicate(key, cls) for key, cls in grouped.items()}
    return KernelProgram(preds, program.declarations, flags)


def check_invariants(pred: KernelPredicate):
    assert len(set(pred.head_vars)) == len(pred.head_vars), "head variables must be distinct"
    head = set(pred.head_vars)
    seen_elsewhere: set[str] = set()
    for q in pred.queries:
        qvars: set[str] = set()
        for g in q:
            if isinstance(g, Call):
                assert all(isinstance(a, Var) for a in g.args), "call arguments must be variables"
            if isinstance(g, Unif):
                assert isinstance(g.lhs, Var), "unification left side must be a variable"
            qvars |= syntax.goal_vars(g)
        overlap = (qvars & seen_elsewhere) - head
        assert not overlap, f"queries share non-head variables {sorted(overlap)}"
        seen_elsewhere |= qvars


# ---------------------------------------------------------------------------
# Rendering and alpha-equivalence, used by tests and diagnostics


def render_kernel(kp: KernelProgram) -> str:
    lines = []
    for pred in kp.predicates.values():
        head = pred.name
        if pred.arity:
            head += "(" + ",".join(pred.head_vars) + ")"
        if not pred.queries or all(len(q) == 0 for q in pred.queries):
            lines.append(head + ".")
            continue
        rendered = []
        for q in pred.queries:
            rendered.append(", ".join(syntax.render_goal(g) for g in q) if q else "true")
        lines.append(f"{head} :- {' ; '.join(rendered)}.")
    return "\n".join(lines) + "\n"


def alpha_equal_preds(a: KernelPredicate, b: KernelPredicate) -> bool:
    if (a.name, a.arity, len(a.queries)) != (b.name, b.arity, len(b.queries)):
        return False
    if any(len(qa) != len(qb) for qa, qb in zip(a.queries, b.queries)):
        return False
    mapping = dict(zip(a.head_vars, b.head_vars))

    def terms_match(ta: Term, tb: Term, m: dict[str, str]) -> bool:
        if isinstance(ta, Var) or isinstance(tb, Var):
            if not (isinstance(ta, Var) and isinstance(tb, Var)):
                return False
            if ta.name in m:
                return m[ta.name] == tb.name
            if tb.name in m.values():
                return False
            m[ta.name] = tb.name
            return True
        if isinstance(ta, syntax.Cons) and isinstance(tb, syntax.Cons):
            return terms_match(ta.head, tb.head, m) and terms_match(ta.tail, tb.tail, m)
        if isinstance(ta, Compound) and isinstance(tb, Compound):
            return (
                ta.functor == tb.functor
                and len(ta.args) == len(tb.args)
                and all(terms_match(x, y, m) for x, y in zip(ta.args, tb.args))
            )
        return ta == tb

    for qa, qb in zip(a.queries, b.queries):
        m = dict(mapping)
        for ga, gb in zip(qa, qb):
            if type(ga) is not type(gb):
                return False
            if isinstance(ga, Unif):
                if not (terms_match(ga.lhs, gb.lhs, m) and terms_match(ga.rhs, gb.rhs, m)):
                    return False
            elif isinstance(ga, Arith):
                if ga.op != gb.op:
                    return False
                if not (terms_match(ga.lhs, gb.lhs, m) and terms_match(ga.rhs, gb.rhs, m)):
                    return False
            else:
                assert isinstance(ga, Call) and isinstance(gb, Call)
                if (ga.pred, ga.arity) != (gb.pred, gb.arity):
                    return False
                if not all(terms_match(x, y, m) for x, y in zip(ga.args, gb.args)):
                    return False
    return True
