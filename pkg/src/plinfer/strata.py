"""Predicate dependency analysis and stratification."""

from __future__ import annotations

from dataclasses import dataclass

from plinfer.kernel import KernelProgram, PredKey
from plinfer.syntax import Call


class StratificationError(Exception):
    def __init__(self, cycle: list[PredKey]):
        names = ", ".join(f"{n}/{a}" for n, a in cycle)
        super().__init__(f"mutually recursive predicates: {names}")
        self.cycle = cycle


@dataclass(frozen=True)
class DepGraph:
    """Nodes in definition order; an edge (q, p) for each call from p to q."""

    nodes: tuple[PredKey, ...]
    edges: frozenset[tuple[PredKey, PredKey]]


def dependency_graph(kp: KernelProgram) -> DepGraph:
    nodes = tuple(kp.predicates)
    edges: set[tuple[PredKey, PredKey]] = set()
    for key, pred in kp.predicates.items():
        for q in pred.queries:
            for g in q:
                if isinstance(g, Call):
                    edges.add(((g.pred, g.arity), key))
    return DepGraph(nodes, frozenset(edges))


def _sccs(graph: DepGraph) -> list[list[PredKey]]:
    """Tarjan's algorithm, iterative, components in completion order."""
    succ: dict[PredKey, list[PredKey]] = {n: [] for n in graph.nodes}
    for src, dst in sorted(graph.edges, key=lambda e: (graph.nodes.index(e[0]), graph.nodes.index(e[1]))):
        succ[src].append(dst)
    index: dict[PredKey, int] = {}
    lowlink: dict[PredKey, int] = {}
    on_stack: set[PredKey] = set()
    stack: list[PredKey] = []
    components: list[list[PredKey]] = []
    counter = 0

    for root in graph.nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = lowlink[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                comp = []
                while True:
                    member = stack.pop()
                    on_stack.remove(member)
                    comp.append(member)
                    if member == node:
                        break
                components.append(comp)
    return components


def check_stratified(graph: DepGraph) -> list[PredKey]:
    """Topological order with callees first; self loops are permitted.

    Ties among independent predicates break by definition order.
    """
    order_index = {n: i for i, n in enumerate(graph.nodes)}
    for comp in _sccs(graph):
        if len(comp) > 1:
            raise StratificationError(sorted(comp, key=order_index.get))

    indegree = {n: 0 for n in graph.nodes}
    succ: dict[PredKey, list[PredKey]] = {n: [] for n in graph.nodes}
    for callee, caller in graph.edges:
        if callee == caller:
            continue
        succ[callee].append(caller)
        indegree[caller] += 1
    ready = sorted((n for n in graph.nodes if indegree[n] == 0), key=order_index.get)
    out: list[PredKey] = []
    while ready:
        node = ready.pop(0)
        out.append(node)
        changed = False
        for nxt in succ[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
                changed = True
        if changed:
            ready.sort(key=order_index.get)
    assert len(out) == len(graph.nodes)
    return out
