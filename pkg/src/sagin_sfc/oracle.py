"""Exact maximum of Q on tiny instances, by exhaustive enumeration.

Per task, every completed deployment is an admissible attach vertex, a
simple path from it to a copy of the destination, and a chain-ordered
assignment of the VNFs to aerial vertices on that path.  Each such option
has a resource vector (link capacity, compute, energy per vertex).  The
search picks at most one option per task so that the summed vectors fit.

Two exact reductions keep it small:

* a resource is dropped when even the worst-case sum over all tasks fits
  its capacity (it can never bind);
* after projecting onto the remaining resources, equal vectors collapse to
  the first option enumerated and dominated vectors are removed.

Partial deployments are never useful for the objective, so a task not
chosen uses nothing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .deploy import Deployment
from .energy import compute_energy_per_unit, energy_headroom, link_energy_terms
from .rteg import RtegGraph, build_rteg
from .scenario import Scenario

_EPS = 1e-9


@dataclass(frozen=True)
class OracleBudget:
    max_tasks: int = 3
    max_nodes: int = 4
    max_slots: int = 3
    max_enumerations: int = 10_000_000
    time_limit_s: float = 60.0


@dataclass
class OracleResult:
    optimal_q: int
    witness: Deployment
    enumerations: int = 0
    options: dict = field(default_factory=dict)     # task id -> options kept after reduction


@dataclass
class BudgetExceeded:
    reason: str
    enumerations: int = 0

    def __bool__(self):
        return False


class _Abort(Exception):
    def __init__(self, reason):
        self.reason = reason


class _Counter:
    def __init__(self, budget: OracleBudget):
        self.n = 0
        self.budget = budget
        self.t0 = time.perf_counter()

    def tick(self, k=1):
        self.n += k
        if self.n > self.budget.max_enumerations:
            raise _Abort(f"more than {self.budget.max_enumerations} enumerations")
        if self.n & 0x3FF == 0 and time.perf_counter() - self.t0 > self.budget.time_limit_s:
            raise _Abort(f"time limit {self.budget.time_limit_s} s")


def _capacities(scenario, graph):
    cap = {}
    for e in range(graph.n_links):
        cap[("L", e)] = float(graph.capacity[e])
    head = energy_headroom(scenario, graph)
    for v in range(graph.n_vertices):
        if graph.is_ground[v]:
            continue
        cap[("C", v)] = scenario.node(graph.vertices[v].node_id).compute_capacity
        cap[("E", v)] = float(head[v])
    return cap


def _fits(usage, cap, base=None):
    for r, amt in usage.items():
        have = cap[r] - (base.get(r, 0.0) if base else 0.0)
        if amt > have + _EPS * max(1.0, abs(cap[r])):
            return False
    return True


def _simple_paths(graph: RtegGraph, start, dest, link_ok, counter):
    """Link sequences of simple paths from ``start`` to any ``dest`` copy."""
    out = []
    stack = [(start, [], {start})]
    while stack:
        v, links, seen = stack.pop()
        for e in reversed(graph.out_links(v)):
            e = int(e)
            if not link_ok[e]:
                continue
            w = int(graph.link_to[e])
            if w in seen:
                continue
            counter.tick()
            if graph.is_ground[w]:
                if graph.vertices[w].node_id == dest:
                    out.append(links + [e])
                continue
            stack.append((w, links + [e], seen | {w}))
    out.sort(key=lambda p: (len(p), p))
    return out


def _placements(n_vnfs, n_slots):
    """Nondecreasing position tuples of length ``n_vnfs`` over ``range(n_slots)``."""
    if n_vnfs == 0:
        yield ()
        return

    def rec(prefix, lo):
        if len(prefix) == n_vnfs:
            yield tuple(prefix)
            return
        for p in range(lo, n_slots):
            yield from rec(prefix + [p], p)

    yield from rec([], 0)


def task_options(scenario: Scenario, graph: RtegGraph, task, cap, counter):
    """Every individually feasible completed deployment of ``task``.

    Returns ``[(usage, attach, links, placements)]`` in enumeration order;
    ``placements`` pairs 0-based VNF index with a vertex.
    """
    from .deploy import attach_admissible

    phi, delta = task.comm_demand, task.storage_demand
    link_ok = [cap[("L", e)] + _EPS >= (delta if graph.is_storage[e] else phi) for e in range(graph.n_links)]
    attaches = [graph.vertex(u.id, task.arrival_slot) for u in scenario.uavs
                if attach_admissible(scenario, graph, task, (u.id, task.arrival_slot))]
    out = []
    for a in attaches:
        for links in _simple_paths(graph, a, task.destination, link_ok, counter):
            verts = [a] + [int(graph.link_to[e]) for e in links]
            aerial = [v for v in verts if not graph.is_ground[v]]
            base = {}
            for e in links:
                r = ("L", e)
                base[r] = base.get(r, 0.0) + (delta if graph.is_storage[e] else phi)
                for v, _, j in link_energy_terms(scenario, graph, e, phi):
                    base[("E", v)] = base.get(("E", v), 0.0) + j
            if not _fits(base, cap):
                continue
            for pos in _placements(len(task.vnfs), len(aerial)):
                counter.tick()
                usage = dict(base)
                placed = []
                for f, p in enumerate(pos):
                    v = aerial[p]
                    c = task.vnfs[f].compute_demand
                    usage[("C", v)] = usage.get(("C", v), 0.0) + c
                    usage[("E", v)] = usage.get(("E", v), 0.0) + c * compute_energy_per_unit(
                        scenario, graph.vertex_class[v])
                    placed.append((f, v))
                if _fits(usage, cap):
                    out.append((usage, a, tuple(links), tuple(placed)))
    return out


def _reduce(options_by_task, cap):
    worst = {}
    for opts in options_by_task.values():
        peak = {}
        for usage, *_ in opts:
            for r, amt in usage.items():
                peak[r] = max(peak.get(r, 0.0), amt)
        for r, amt in peak.items():
            worst[r] = worst.get(r, 0.0) + amt
    binding = {r for r, amt in worst.items() if amt > cap[r] + _EPS * max(1.0, abs(cap[r]))}
    reduced = {}
    for k, opts in options_by_task.items():
        seen = {}
        for opt in opts:
            proj = tuple(sorted((r, round(a, 9)) for r, a in opt[0].items() if r in binding))
            if proj not in seen:
                seen[proj] = opt
        keys = list(seen)
        keep = []
        for i, p in enumerate(keys):
            pd = dict(p)
            dominated = False
            for j, q in enumerate(keys):
                if i == j:
                    continue
                qd = dict(q)
                if len(qd) <= len(pd) and all(r in pd and qd[r] <= pd[r] + _EPS for r in qd):
                    if qd != pd:
                        dominated = True
                        break
            if not dominated:
                keep.append((dict(p), seen[p]))
        reduced[k] = keep
    return reduced


def _witness(scenario, graph, chosen):
    d = Deployment()
    for t in sorted(scenario.tasks, key=lambda t: t.id):
        d.completed[t.id] = False
    for k, (_, a, links, placed) in chosen.items():
        d.attach[k] = graph.key(a)
        d.y.add((k, graph.key(a)))
        for e in links:
            src, dst = graph.link_key(e)
            d.z.add((k, (src, dst)))
            d.y.add((k, src))
            d.y.add((k, dst))
        for f, v in placed:
            d.x.add((k, f + 1, graph.key(v)))
        d.completed[k] = True
    return d


def check_budget(scenario: Scenario, budget: OracleBudget) -> Optional[str]:
    if len(scenario.tasks) > budget.max_tasks:
        return f"{len(scenario.tasks)} tasks > {budget.max_tasks}"
    if len(scenario.nodes) > budget.max_nodes:
        return f"{len(scenario.nodes)} nodes > {budget.max_nodes}"
    if scenario.slot_count > budget.max_slots:
        return f"{scenario.slot_count} slots > {budget.max_slots}"
    return None


def solve_exact(scenario: Scenario, graph: Optional[RtegGraph] = None, budget: OracleBudget = OracleBudget()):
    """``OracleResult`` with the maximum Q and a witness, or ``BudgetExceeded``.

    Tasks are searched in id order, each task's options in enumeration order
    before the "not completed" branch, so the witness is the first optimum
    met in that fixed order.
    """
    why = check_budget(scenario, budget)
    if why:
        return BudgetExceeded(why)
    graph = graph if graph is not None else build_rteg(scenario)
    cap = _capacities(scenario, graph)
    counter = _Counter(budget)
    try:
        tasks = sorted(scenario.tasks, key=lambda t: t.id)
        raw = {t.id: task_options(scenario, graph, t, cap, counter) for t in tasks}
        reduced = _reduce(raw, cap)
        order = [t.id for t in tasks]
        best = [-1, {}]
        used = {}
        chosen = {}

        def dfs(i, q):
            counter.tick()
            if q + (len(order) - i) <= best[0]:
                return
            if i == len(order):
                best[0], best[1] = q, dict(chosen)
                return
            k = order[i]
            for proj, opt in reduced[k]:
                if _fits(proj, cap, used):
                    for r, a in proj.items():
                        used[r] = used.get(r, 0.0) + a
                    chosen[k] = opt
                    dfs(i + 1, q + 1)
                    del chosen[k]
                    for r, a in proj.items():
                        used[r] -= a
                    if best[0] == len(order):
                        return
            dfs(i + 1, q)

        dfs(0, 0)
    except _Abort as exc:
        return BudgetExceeded(exc.reason, counter.n)
    return OracleResult(best[0], _witness(scenario, graph, best[1]), counter.n,
                        {k: len(v) for k, v in reduced.items()})
