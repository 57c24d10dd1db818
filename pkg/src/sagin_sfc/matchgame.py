"""MG-RTEG: multi-slot many-to-one deferred acceptance over the RTEG.

Tasks propose, UAV and satellite vertices receive.  Every slot:

1. each waiting task gets a residual-aware shortest route to its
   destination; if a UAV-only route can carry it (links and slot compute),
   its preference list is the UAVs on that route in path order, otherwise
   it is offloaded through the UAV nearest its source to the associated
   satellite and proposes to satellites instead;
2. deferred acceptance runs to a fixed point on the UAVs, tasks left with
   nothing placed are re-gated against the now-depleted UAV compute, and a
   second round runs on the satellites;
3. matches are committed in node-preference order: a task whose chain is
   fully placed on a route that reaches its destination completes; a task
   placed partially is stored at the last vertex that took a VNF; a task
   with nothing placed is stored at the first vertex of its list.  Storage
   uses the vertex's storage link into the next slot.

The acceptance policy (how a receiver ranks proposers, whether it may bump
a held proposal) is a :class:`Policy`; the baselines reuse this engine with
a different policy.
"""

from __future__ import annotations

import math
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rteg as rg
from .deploy import Deployment, check_feasibility, objective_q
from .energy import compute_energy_per_unit, energy_headroom, link_energy_terms
from .report import SimReport, SlotMetrics
from .rteg import LATENCY, RtegGraph, WeightRule, spatial_rate
from .scenario import GROUND, SATELLITE, UAV, Scenario, TaskSpec

_EPS = 1e-9

WAITING, ACTIVE, DONE, DROPPED = "waiting", "active", "done", "dropped"


class StateInconsistency(RuntimeError):
    """Engine bookkeeping went negative; a programming error, never expected."""


@dataclass(frozen=True)
class Policy:
    """How receivers rank proposers.

    ``node_key(task)`` sorts most-preferred first; it also fixes the commit
    order.  ``proposer_key`` fixes the order proposers enter the queue.
    """

    name: str
    node_key: Callable
    allow_bump: bool = True
    proposer_key: Callable = lambda t: t.id


MG_RTEG = Policy("mg-rteg", node_key=lambda t: (-t.data_size, t.id))


@dataclass
class TaskProgress:
    task: TaskSpec
    status: str = WAITING
    location: Optional[int] = None
    attach: Optional[int] = None
    placed: int = 0
    completed_slot: Optional[int] = None


@dataclass
class Route:
    branch: str                 # "uav" or "sat"
    path: rg.Path
    prefix: tuple               # slot-local vertex indices, path order
    prefix_links: tuple         # links joining ``prefix``
    reaches_destination: bool   # prefix ends at a destination copy
    storage_link: int           # storage link the path takes after the prefix, or -1
    candidates: tuple           # receivers on the prefix (preference list)


@dataclass
class PreferenceLists:
    task_lists: dict = field(default_factory=dict)     # task id -> tuple of vertex indices
    node_lists: dict = field(default_factory=dict)     # vertex index -> tuple of task ids
    routes: dict = field(default_factory=dict)         # task id -> Route or None

    def keyed(self, graph):
        """Same lists with vertex keys instead of indices (for display/tests)."""
        return ({k: tuple(graph.key(v) for v in vs) for k, vs in self.task_lists.items()},
                {graph.key(v): ts for v, ts in self.node_lists.items()})


class MatchState:
    """Mutable engine state for one run (single writer)."""

    def __init__(self, scenario: Scenario, graph: RtegGraph, policy: Policy = MG_RTEG,
                 weight: WeightRule = LATENCY, trace: Optional[list] = None):
        self.scenario = scenario
        self.graph = graph
        self.policy = policy
        self.weight = weight
        self.residual = graph.fresh_residuals(energy_headroom(scenario, graph))
        self.progress = {t.id: TaskProgress(t) for t in sorted(scenario.tasks, key=lambda t: t.id)}
        self.deployment = Deployment()
        for k in self.progress:
            self.deployment.completed[k] = False
        self.trace = trace
        self.proposals = {}          # slot -> proposal count
        self.proposal_bound = {}     # slot -> |proposers| * |receivers|
        self.blocking = {}           # slot -> blocking pairs found after each round
        self.bumps = 0
        self.metrics = []

    def log(self, line):
        if self.trace is not None:
            self.trace.append(line)

    def remaining(self, k, placed=None):
        p = self.progress[k]
        done = p.placed if placed is None else placed
        return p.task.vnfs[done:]

    def active_tasks(self, slot):
        out = []
        for k, p in self.progress.items():
            if p.status == WAITING and p.task.arrival_slot == slot:
                out.append(k)
            elif p.status == ACTIVE and self.graph.vertex_slot[p.location] == slot:
                out.append(k)
        return out


# -- routing ------------------------------------------------------------------

def attach_candidates(scenario: Scenario, graph: RtegGraph, task: TaskSpec, slot):
    """Admissible entry UAVs for a task at ``slot``, nearest first.

    A UAV admits the task through a virtual uplink when the source is within
    G2U range and the uplink carries the task's payload within one slot.
    """
    src = scenario.source_position(task, slot)
    out = []
    for u in scenario.uavs:
        pos = u.position(slot)
        d = math.dist(src, pos)
        if d <= 0 or d > scenario.connectivity.g2u_range_m:
            continue
        rate = spatial_rate(scenario, rg.G2U, src, pos, GROUND)
        if task.comm_demand <= rate * scenario.slot_length / 1e6 + _EPS:
            out.append((d, u.id))
    out.sort()
    return [graph.vertex(uid, slot) for _, uid in out]


def _edge_ok(graph, residual, task):
    need = np.where(graph.is_storage, task.storage_demand, task.comm_demand)
    return residual.link + _EPS >= need


_UAV_CLASSES = {rg._CLASS_CODE[c] for c in (rg.U2U, rg.G2U, rg.STORAGE)}
_SAT_CLASSES = {rg._CLASS_CODE[c] for c in (rg.U2S, rg.S2S, rg.S2G, rg.STORAGE)}


def _class_mask(graph, codes):
    return np.isin(graph.link_class, list(codes))


def _route_from_path(graph, path, slot, branch, receiver_mask):
    verts, links = path.vertices, path.links
    prefix = [verts[0]]
    prefix_links = []
    storage = -1
    for e in links:
        if graph.is_storage[e]:
            storage = e
            break
        prefix_links.append(e)
        prefix.append(int(graph.link_to[e]))
    reaches = storage < 0
    seen = set()
    cands = []
    for v in prefix:
        if receiver_mask[v] and v not in seen:
            seen.add(v)
            cands.append(v)
    return Route(branch, path, tuple(prefix), tuple(prefix_links), reaches, storage, tuple(cands))


def uav_route(state: MatchState, task, sources):
    g = state.graph
    ok = _edge_ok(g, state.residual, task) & _class_mask(g, _UAV_CLASSES)
    weights = state.weight.weights(g, task.comm_demand)
    path = rg.shortest_path(g, sources, task.destination, weights=weights, edge_ok=ok, vertex_ok=g.is_uav.copy())
    if path is None:
        return None
    return _route_from_path(g, path, None, "uav", g.is_uav)


def sat_route(state: MatchState, task, start):
    g = state.graph
    ok = _edge_ok(g, state.residual, task) & _class_mask(g, _SAT_CLASSES)
    vok = g.is_sat.copy()
    vok[start] = True
    weights = state.weight.weights(g, task.comm_demand)
    path = rg.shortest_path(g, [start], task.destination, weights=weights, edge_ok=ok, vertex_ok=vok)
    if path is None:
        return None
    return _route_from_path(g, path, None, "sat", g.is_sat)


def uav_only_feasible(task, graph, slot, residuals, *, sources, placed=0, weight: WeightRule = LATENCY,
                      route=None):
    """Whether the remaining chain can go entirely over UAVs from ``sources``.

    Requires a UAV-only route whose links all have residual >= the task's
    link (or storage) demand, and whose slot-``slot`` UAVs together hold at
    least the task's remaining compute demand.
    """
    if route is None:
        ok = _edge_ok(graph, residuals, task) & _class_mask(graph, _UAV_CLASSES)
        path = rg.shortest_path(graph, sources, task.destination, weights=weight.weights(graph, task.comm_demand),
                                edge_ok=ok, vertex_ok=graph.is_uav.copy())
        if path is None:
            return False
        route = _route_from_path(graph, path, slot, "uav", graph.is_uav)
    need = sum(v.compute_demand for v in task.vnfs[placed:])
    have = sum(residuals.compute[v] for v in route.candidates)
    return have + _EPS >= need


def _sources(state, k, slot):
    p = state.progress[k]
    if p.status == WAITING:
        return attach_candidates(state.scenario, state.graph, p.task, slot)
    return [p.location]


def _offload_start(state, k, slot):
    """Vertex the satellite branch leaves from: the current vertex, or for a
    fresh task the admissible UAV nearest its source."""
    p = state.progress[k]
    if p.status == WAITING:
        c = attach_candidates(state.scenario, state.graph, p.task, slot)
        return c[0] if c else None
    return p.location


def build_preferences(scenario: Scenario, graph: RtegGraph, slot, state: Optional[MatchState] = None,
                      policy: Policy = MG_RTEG) -> PreferenceLists:
    """Task lists from residual-aware shortest routes; node lists by policy."""
    if state is None:
        state = MatchState(scenario, graph, policy)
    prefs = PreferenceLists()
    for k in state.active_tasks(slot):
        p = state.progress[k]
        task = p.task
        srcs = _sources(state, k, slot)
        route = None
        if srcs and (p.status == WAITING or graph.is_uav[p.location]):
            r = uav_route(state, task, srcs)
            if r is not None and uav_only_feasible(task, graph, slot, state.residual, sources=srcs,
                                                   placed=p.placed, route=r):
                route = r
        if route is None and srcs:
            start = _offload_start(state, k, slot)
            if start is not None:
                route = sat_route(state, task, start)
        prefs.routes[k] = route
        prefs.task_lists[k] = route.candidates if route is not None else ()
    _fill_node_lists(prefs, state)
    return prefs


def _fill_node_lists(prefs, state):
    by_node = defaultdict(list)
    for k, lst in prefs.task_lists.items():
        for v in lst:
            by_node[v].append(state.progress[k].task)
    prefs.node_lists = {v: tuple(t.id for t in sorted(ts, key=state.policy.node_key))
                        for v, ts in sorted(by_node.items())}


# -- deferred acceptance ------------------------------------------------------

@dataclass
class _Tentative:
    segments: list = field(default_factory=list)   # [vertex, first_vnf (0-based), count, compute]
    placed: int = 0


def deferred_acceptance(state: MatchState, proposers, lists, slot, tentative):
    """Run proposals to a fixed point; mutates residual compute and ``tentative``.

    Returns the number of proposals made.
    """
    g = state.graph
    pol = state.policy
    res = state.residual.compute
    tasks = {k: state.progress[k].task for k in proposers}
    rank = {k: pol.node_key(tasks[k]) for k in proposers}
    held = defaultdict(dict)         # vertex -> {task: segment}
    for k in proposers:
        for seg in tentative[k].segments:
            held[seg[0]][k] = seg
    proposed = {k: set() for k in proposers}
    ptr = {k: 0 for k in proposers}
    queue = deque(sorted(proposers, key=lambda k: pol.proposer_key(tasks[k])))
    count = 0
    name = lambda v: g.vertices[v].node_id

    while queue:
        k = queue.popleft()
        tk = tasks[k]
        tent = tentative[k]
        rest = tk.vnfs[tent.placed:]
        if not rest:
            continue
        lst = lists[k]
        while ptr[k] < len(lst) and lst[ptr[k]] in proposed[k]:
            ptr[k] += 1
        if ptr[k] >= len(lst):
            continue
        n = lst[ptr[k]]
        ptr[k] += 1
        proposed[k].add(n)
        count += 1
        state.log(f"slot={slot} propose task={k} node={name(n)} vnf={rest[0].index}")
        evictable = []
        if pol.allow_bump:
            evictable = sorted((j for j in held[n] if rank[j] > rank[k]), key=lambda j: rank[j], reverse=True)
        avail = res[n] + sum(held[n][j][3] for j in evictable)
        cum = 0.0
        p = 0
        for v in rest:
            if cum + v.compute_demand > avail + _EPS:
                break
            cum += v.compute_demand
            p += 1
        if p == 0:
            state.log(f"slot={slot} reject task={k} node={name(n)}")
            queue.appendleft(k)
            continue
        while res[n] + _EPS < cum:
            j = evictable.pop(0)
            _evict(state, j, n, tentative[j], held, slot, by=k)
            queue.append(j)
        res[n] -= cum
        if res[n] < -_EPS:
            raise StateInconsistency(f"negative compute at {g.key(n)}")
        seg = [n, tent.placed, p, cum]
        tent.segments.append(seg)
        held[n][k] = seg
        first = tent.placed + 1
        tent.placed += p
        state.log(f"slot={slot} accept task={k} node={name(n)} vnfs={first}-{tent.placed}")
        if tent.placed < len(tk.vnfs):
            queue.appendleft(k)
    state.proposals[slot] = state.proposals.get(slot, 0) + count
    receivers = {v for k in proposers for v in lists[k]}
    state.proposal_bound[slot] = state.proposal_bound.get(slot, 0) + len(proposers) * len(receivers)
    state.blocking.setdefault(slot, []).extend(_blocking_pairs(state, proposers, lists, proposed, held, tentative))
    return count


def _evict(state, j, n, tent, held, slot, by):
    res = state.residual.compute
    idx = next(i for i, s in enumerate(tent.segments) if s[0] == n)
    for s in tent.segments[idx:]:
        res[s[0]] += s[3]
        held[s[0]].pop(j, None)
    tent.placed = tent.segments[idx][1]
    del tent.segments[idx:]
    state.bumps += 1
    state.log(f"slot={slot} bump task={j} node={state.graph.vertices[n].node_id} by={by}")


def _blocking_pairs(state, proposers, lists, proposed, held, tentative):
    """(task, vertex) pairs left unproposed where the task would still be admitted."""
    res = state.residual.compute
    pol = state.policy
    out = []
    for k in proposers:
        tk = state.progress[k].task
        rest = tk.vnfs[tentative[k].placed:]
        if not rest:
            continue
        need = rest[0].compute_demand
        for v in lists[k]:
            if v in proposed[k]:
                continue
            free = res[v]
            if pol.allow_bump:
                free += sum(s[3] for j, s in held[v].items() if pol.node_key(state.progress[j].task) > pol.node_key(tk))
            if free + _EPS >= need:
                out.append((k, v))
    return out


# -- commit -------------------------------------------------------------------

def _try_commit(state: MatchState, k, links, placements, attach):
    """Reserve link capacity and energy for ``links`` plus compute energy of
    ``placements`` (compute itself is already reserved).  All or nothing."""
    g = state.graph
    r = state.residual
    task = state.progress[k].task
    need_link = defaultdict(float)
    need_energy = defaultdict(float)
    for e in links:
        need_link[e] += task.storage_demand if g.is_storage[e] else task.comm_demand
        for v, _, j in link_energy_terms(state.scenario, g, e, task.comm_demand):
            need_energy[v] += j
    for v, f in placements:
        need_energy[v] += task.vnfs[f].compute_demand * compute_energy_per_unit(state.scenario, g.vertex_class[v])
    for e, amt in need_link.items():
        if r.link[e] + _EPS < amt:
            return False
    for v, amt in need_energy.items():
        if r.energy[v] + _EPS < amt:
            return False
    for e, amt in need_link.items():
        r.link[e] -= amt
    for v, amt in need_energy.items():
        r.energy[v] -= amt
    d = state.deployment
    p = state.progress[k]
    if attach is not None:
        p.attach = attach
        d.attach[k] = g.key(attach)
        d.y.add((k, g.key(attach)))
    for e in links:
        a, b = g.link_key(e)
        d.z.add((k, (a, b)))
        d.y.add((k, a))
        d.y.add((k, b))
    for v, f in placements:
        d.x.add((k, f + 1, g.key(v)))
        d.y.add((k, g.key(v)))
    return True


def _refund(state, tent):
    for s in tent.segments:
        state.residual.compute[s[0]] += s[3]
    tent.segments.clear()


def _prefix_to(route, v):
    i = route.prefix.index(v)
    return list(route.prefix_links[:i])


def _commit_task(state: MatchState, k, route: Optional[Route], tent: _Tentative, slot,
                 hold_route: Optional[Route] = None):
    """``hold_route`` is the route whose first receiver holds the task when
    nothing gets placed (defaults to ``route``).  A task re-gated to the
    satellites this slot keeps its UAV route here."""
    g = state.graph
    p = state.progress[k]
    task = p.task
    fresh = p.status == WAITING
    name = lambda v: g.vertices[v].node_id
    placements = [(s[0], f) for s in tent.segments for f in range(s[1], s[1] + s[2])]
    attach = route.prefix[0] if (fresh and route is not None) else None

    if route is not None and tent.segments:
        if tent.placed == len(task.vnfs) and route.reaches_destination:
            if _try_commit(state, k, list(route.prefix_links), placements, attach):
                p.placed = tent.placed
                p.status = DONE
                p.completed_slot = slot
                state.deployment.completed[k] = True
                state.log(f"slot={slot} complete task={k} node={name(route.prefix[-1])}")
                return
        else:
            if tent.placed == len(task.vnfs):
                at = route.prefix[-1]
            else:
                at = tent.segments[-1][0]
            st = int(g.storage_out[at])
            if st >= 0 and _try_commit(state, k, _prefix_to(route, at) + [st], placements, attach):
                p.placed = tent.placed
                p.status = ACTIVE
                p.location = int(g.link_to[st])
                state.log(f"slot={slot} store task={k} node={name(at)} vnfs_placed={p.placed}")
                return
        _refund(state, tent)
        tent.placed = p.placed

    # nothing placed this slot: hold at the first receiver on the list, else at the entry vertex
    options = []
    hold = hold_route if hold_route is not None else route
    if hold is not None:
        entry = hold.prefix[0]
        first = hold.candidates[0] if hold.candidates else entry
        options.append((first, _prefix_to(hold, first)))
        options.append((entry, []))
    elif fresh:
        cands = attach_candidates(state.scenario, g, task, slot)
        options.extend((v, []) for v in cands[:1])
    else:
        options.append((p.location, []))
    tried = set()
    for at, links in options:
        if at in tried:
            continue
        tried.add(at)
        st = int(g.storage_out[at])
        if st < 0:
            continue
        entry = (links and g.link_from[links[0]]) or at
        if _try_commit(state, k, links + [st], [], int(entry) if fresh else None):
            p.status = ACTIVE
            p.location = int(g.link_to[st])
            state.log(f"slot={slot} store task={k} node={name(at)} vnfs_placed={p.placed}")
            return
    p.status = DROPPED
    state.log(f"slot={slot} drop task={k}")


# -- slot loop ----------------------------------------------------------------

def run_slot(state: MatchState, prefs: PreferenceLists, slot) -> MatchState:
    g = state.graph
    tentative = {k: _Tentative(placed=state.progress[k].placed) for k in prefs.routes}
    routes = dict(prefs.routes)
    uav_ks = [k for k, r in routes.items() if r is not None and r.branch == "uav"]
    for k, r in routes.items():
        if r is not None and r.branch == "sat" and state.trace is not None:
            state.log(f"slot={slot} offload task={k} node={g.vertices[r.prefix[0]].node_id}")
    deferred_acceptance(state, uav_ks, {k: routes[k].candidates for k in uav_ks}, slot, tentative)

    regated = {}
    for k in uav_ks:
        if tentative[k].segments:
            continue
        r = routes[k]
        p = state.progress[k]
        if not uav_only_feasible(p.task, g, slot, state.residual, sources=_sources(state, k, slot),
                                 placed=p.placed, route=r):
            start = _offload_start(state, k, slot)
            sr = sat_route(state, p.task, start) if start is not None else None
            if sr is not None:
                regated[k] = r
                routes[k] = sr
                state.log(f"slot={slot} offload task={k} node={g.vertices[sr.prefix[0]].node_id}")
    sat_ks = sorted(k for k, r in routes.items() if r is not None and r.branch == "sat")
    if sat_ks:
        deferred_acceptance(state, sat_ks, {k: routes[k].candidates for k in sat_ks}, slot, tentative)

    pol = state.policy
    for k in sorted(routes, key=lambda k: pol.node_key(state.progress[k].task)):
        _commit_task(state, k, routes[k], tentative[k], slot, regated.get(k))
    if np.any(state.residual.compute < -_EPS) or np.any(state.residual.link < -_EPS):
        raise StateInconsistency("negative residual after commit")
    return state


def _slot_metrics(state: MatchState, slot, required):
    g = state.graph
    sc = state.scenario
    in_slot = g.vertex_slot == slot
    cap = np.array([sc.node(v.node_id).compute_capacity for v in g.vertices])
    used = cap - state.residual.compute

    def util(mask):
        c = cap[mask & in_slot].sum()
        return float(used[mask & in_slot].sum() / c) if c > 0 else 0.0

    done = sum(1 for p in state.progress.values() if p.status == DONE)
    placed = float(used[in_slot & (g.is_uav | g.is_sat)].sum())
    return SlotMetrics(slot, done, util(g.is_uav), util(g.is_sat), util(g.is_uav | g.is_sat),
                       placed, float(required))


def run_with_state(scenario: Scenario, graph: Optional[RtegGraph] = None, policy: Policy = MG_RTEG, *,
                   weight: WeightRule = LATENCY, trace: Optional[list] = None, check=True):
    """Run the engine over all slots.  Returns ``(Deployment, SimReport, MatchState)``."""
    t0 = time.perf_counter()
    graph = graph if graph is not None else rg.build_rteg(scenario)
    state = MatchState(scenario, graph, policy, weight, trace)
    for slot in range(1, scenario.slot_count + 1):
        required = 0.0
        for k in state.active_tasks(slot):
            required += sum(v.compute_demand for v in state.remaining(k))
        prefs = build_preferences(scenario, graph, slot, state, policy)
        run_slot(state, prefs, slot)
        state.metrics.append(_slot_metrics(state, slot, required))
    for p in state.progress.values():
        if p.status == ACTIVE:
            p.status = DROPPED
    dep = state.deployment
    violations = check_feasibility(scenario, graph, dep) if check else []
    rep = SimReport(policy.name, scenario.rng_seed, list(state.metrics), objective_q(dep), len(violations),
                    time.perf_counter() - t0)
    state.violations = violations
    return dep, rep, state


def run(scenario: Scenario, graph: Optional[RtegGraph] = None, policy: Policy = MG_RTEG, **kw):
    """Run the engine over all slots.  Returns ``(Deployment, SimReport)``."""
    dep, rep, _ = run_with_state(scenario, graph, policy, **kw)
    return dep, rep


def run_mg_rteg(scenario, graph=None, **kw):
    return run(scenario, graph, MG_RTEG, **kw)
