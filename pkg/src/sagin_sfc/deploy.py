"""Deployment representation, completion rule, and the feasibility checker.

A :class:`Deployment` holds the three indicator sets as sparse sets of the
entries that are 1:

* ``x``: ``(task, vnf_index, (node, slot))`` VNF placements,
* ``y``: ``(task, (node, slot))`` vertices a task's chain visits,
* ``z``: ``(task, ((node, slot), (node, slot)))`` link uses,

plus ``attach`` (the UAV vertex each task entered through its virtual
uplink) and the per-task ``completed`` flag.

A task is *completed* when, starting at its attach vertex and following its
unique outgoing link at every step, the walk reaches a copy of its
destination, and every VNF sits on that walk in chain order.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .energy import compute_energy_per_unit, energy_headroom, link_energy_terms
from .scenario import GROUND, UAV, Scenario

CONSTRAINTS = tuple(f"C{i}" for i in range(15, 26) if i != 20)
_EPS = 1e-9


class DeploymentReferenceError(ValueError):
    """A deployment names a task, vertex, or link that does not exist."""


@dataclass
class Deployment:
    x: set = field(default_factory=set)
    y: set = field(default_factory=set)
    z: set = field(default_factory=set)
    attach: dict = field(default_factory=dict)
    completed: dict = field(default_factory=dict)

    def copy(self):
        return Deployment(set(self.x), set(self.y), set(self.z), dict(self.attach), dict(self.completed))

    def for_task(self, k):
        return Deployment(
            {e for e in self.x if e[0] == k},
            {e for e in self.y if e[0] == k},
            {e for e in self.z if e[0] == k},
            {k: self.attach[k]} if k in self.attach else {},
            {k: self.completed[k]} if k in self.completed else {},
        )

    def merge(self, other: "Deployment"):
        self.x |= other.x
        self.y |= other.y
        self.z |= other.z
        self.attach.update(other.attach)
        self.completed.update(other.completed)

    def canonical(self):
        """Sorted tuples, for equality and deterministic output."""
        return (tuple(sorted(self.x)), tuple(sorted(self.y)), tuple(sorted(self.z)),
                tuple(sorted(self.attach.items())), tuple(sorted(self.completed.items())))

    def __eq__(self, other):
        if not isinstance(other, Deployment):
            return NotImplemented
        return self.canonical() == other.canonical()


@dataclass(frozen=True)
class Violation:
    constraint_id: str
    subject: tuple
    detail: str

    def line(self):
        subj = ",".join(str(s) for s in self.subject)
        return f"{self.constraint_id}\t{subj}\t{self.detail}"


def format_violations(violations) -> str:
    return "".join(v.line() + "\n" for v in violations)


def objective_q(deployment: Deployment) -> int:
    return sum(1 for done in deployment.completed.values() if done)


# -- completion ---------------------------------------------------------------

def _outgoing(deployment, k):
    out = defaultdict(list)
    for kk, (a, b) in deployment.z:
        if kk == k:
            out[tuple(a)].append(tuple(b))
    return out


def walk_chain(deployment: Deployment, task_id):
    """Vertices visited from the attach vertex following unique out-links.

    Stops at a vertex with no outgoing link; returns ``None`` on a branch or
    a revisit.
    """
    start = deployment.attach.get(task_id)
    if start is None:
        return None
    out = _outgoing(deployment, task_id)
    walk = [tuple(start)]
    seen = {walk[0]}
    while True:
        nxt = out.get(walk[-1], [])
        if not nxt:
            return walk
        if len(nxt) > 1 or nxt[0] in seen:
            return None
        walk.append(nxt[0])
        seen.add(nxt[0])


def completion_problems(deployment: Deployment, task, scenario: Scenario):
    """Reasons (constraint id, detail) why ``task`` does not meet the completion rule."""
    walk = walk_chain(deployment, task.id)
    if walk is None:
        if task.id not in deployment.attach:
            return [("C23", "no origin attachment")]
        return [("C17", "chain branches or revisits a vertex")]
    problems = []
    if walk[-1][0] != task.destination:
        problems.append(("C24", f"chain ends at {walk[-1]} not at destination {task.destination}"))
    pos = {v: i for i, v in enumerate(walk)}
    placed = defaultdict(list)
    for k, f, v in deployment.x:
        if k == task.id:
            placed[f].append(tuple(v))
    last = -1
    for vnf in task.vnfs:
        where = placed.get(vnf.index, [])
        if len(where) != 1:
            problems.append(("C15", f"vnf {vnf.index} placed {len(where)} times"))
            continue
        p = pos.get(where[0])
        if p is None:
            problems.append(("C16", f"vnf {vnf.index} at {where[0]} is off the chain"))
            continue
        if p < last:
            problems.append(("C17", f"vnf {vnf.index} precedes its predecessor along the chain"))
        last = max(last, p)
    return problems


def mark_completed(deployment: Deployment, task, scenario: Scenario) -> bool:
    if isinstance(task, str):
        task = scenario.task(task)
    return not completion_problems(deployment, task, scenario)


# -- feasibility --------------------------------------------------------------

def _check_refs(scenario, graph, d: Deployment):
    tasks = {t.id: t for t in scenario.tasks}
    for k, f, v in d.x:
        if k not in tasks:
            raise DeploymentReferenceError(f"x references unknown task {k!r}")
        if not 1 <= f <= len(tasks[k].vnfs):
            raise DeploymentReferenceError(f"x references unknown vnf {f} of task {k!r}")
        if tuple(v) not in graph.vindex:
            raise DeploymentReferenceError(f"x references unknown vertex {v}")
    for k, v in d.y:
        if k not in tasks:
            raise DeploymentReferenceError(f"y references unknown task {k!r}")
        if tuple(v) not in graph.vindex:
            raise DeploymentReferenceError(f"y references unknown vertex {v}")
    links = {}
    for k, (a, b) in d.z:
        if k not in tasks:
            raise DeploymentReferenceError(f"z references unknown task {k!r}")
        try:
            links[(tuple(a), tuple(b))] = graph.find_link(tuple(a), tuple(b))
        except KeyError:
            raise DeploymentReferenceError(f"z references unknown link {a}->{b}") from None
    for k, v in d.attach.items():
        if k not in tasks:
            raise DeploymentReferenceError(f"attach references unknown task {k!r}")
        if tuple(v) not in graph.vindex:
            raise DeploymentReferenceError(f"attach references unknown vertex {v}")
    for k in d.completed:
        if k not in tasks:
            raise DeploymentReferenceError(f"completion flag for unknown task {k!r}")
    return tasks, links


def _over(used, cap):
    return used > cap + _EPS * max(1.0, abs(cap))


def attach_admissible(scenario: Scenario, graph, task, vkey):
    """Whether ``task`` may enter the graph at UAV vertex ``vkey``."""
    from .rteg import G2U, spatial_rate

    node_id, slot = vkey
    if slot != task.arrival_slot:
        return False
    node = scenario.node(node_id)
    if node.node_class != UAV:
        return False
    src = scenario.source_position(task, slot)
    d = math.dist(src, node.position(slot))
    if d > scenario.connectivity.g2u_range_m or d <= 0:
        return False
    rate = spatial_rate(scenario, G2U, src, node.position(slot), GROUND)
    return task.comm_demand <= rate * scenario.slot_length / 1e6 + _EPS


def check_feasibility(scenario: Scenario, graph, deployment: Deployment):
    """Every violated constraint instance, in a deterministic order.

    Completed tasks must satisfy all constraints; incomplete tasks are exempt
    from single-placement and origin/destination flow, but their usage counts
    toward storage, compute, energy and link capacities, and they may not
    create flow from nothing.
    """
    tasks, links = _check_refs(scenario, graph, deployment)
    d = deployment
    out = []

    def flag(cid, subject, detail):
        out.append(Violation(cid, tuple(subject), detail))

    # C15 / C16: placement
    per_vnf = Counter((k, f) for k, f, _ in d.x)
    for (k, f), n in sorted(per_vnf.items()):
        if n > 1:
            flag("C15", (k, f), f"placed on {n} vertices")
    for k, t in sorted(tasks.items()):
        if d.completed.get(k):
            for vnf in t.vnfs:
                if per_vnf.get((k, vnf.index), 0) != 1:
                    flag("C15", (k, vnf.index), f"completed task has {per_vnf.get((k, vnf.index), 0)} placements")
    for k, f, v in sorted(d.x):
        if (k, tuple(v)) not in d.y:
            flag("C16", (k, f, tuple(v)), "placement on a vertex the chain does not visit")

    # C17: one-way chains
    outdeg = Counter((k, tuple(a)) for k, (a, _) in d.z)
    for (k, v), n in sorted(outdeg.items()):
        if n > 1:
            flag("C17", (k, v), f"{n} outgoing links from one vertex")
        if (k, v) not in d.y:
            flag("C17", (k, v), "outgoing link from an unvisited vertex")
        if graph.vertex_class[graph.vindex[v]] == GROUND:
            flag("C17", (k, v), "ground vertices are sink-only")

    # C18 / C22: link capacities
    load = defaultdict(float)
    for k, key in d.z:
        e = links[(tuple(key[0]), tuple(key[1]))]
        load[e] += tasks[k].storage_demand if graph.is_storage[e] else tasks[k].comm_demand
    for e in sorted(load):
        cap = float(graph.capacity[e])
        if _over(load[e], cap):
            cid = "C18" if graph.is_storage[e] else "C22"
            flag(cid, graph.link_key(e), f"load {load[e]:.6g} exceeds capacity {cap:.6g}")

    # C19: compute capacity
    comp = defaultdict(float)
    for k, f, v in d.x:
        comp[tuple(v)] += tasks[k].vnfs[f - 1].compute_demand
    for v in sorted(comp, key=lambda v: (v[1], v[0])):
        cap = scenario.node(v[0]).compute_capacity
        if graph.vertex_class[graph.vindex[v]] == GROUND:
            cap = 0.0
        if _over(comp[v], cap):
            flag("C19", v, f"compute {comp[v]:.6g} exceeds capacity {cap:.6g}")

    # C21: energy, at every aerial vertex the deployment touches
    headroom = energy_headroom(scenario, graph)
    spend = defaultdict(float)
    touched = set()
    for v, c in comp.items():
        vi = graph.vindex[v]
        spend[vi] += c * compute_energy_per_unit(scenario, graph.vertex_class[vi])
        touched.add(vi)
    for k, key in d.z:
        e = links[(tuple(key[0]), tuple(key[1]))]
        touched.update((int(graph.link_from[e]), int(graph.link_to[e])))
        for vi, _, j in link_energy_terms(scenario, graph, e, tasks[k].comm_demand):
            spend[vi] += j
    for k, v in d.y:
        touched.add(graph.vindex[tuple(v)])
    for vi in sorted(touched):
        if graph.is_ground[vi]:
            continue
        if spend[vi] > headroom[vi] + _EPS * max(1.0, abs(headroom[vi])) or headroom[vi] < -_EPS:
            flag("C21", graph.key(vi), f"energy exceeds budget by {spend[vi] - headroom[vi]:.6g} J")

    # C23 / C24 / C25: flow
    for k, t in sorted(tasks.items()):
        inflow, outflow = Counter(), Counter()
        for kk, (a, b) in d.z:
            if kk == k:
                outflow[tuple(a)] += 1
                inflow[tuple(b)] += 1
        att = d.attach.get(k)
        if att is not None:
            att = tuple(att)
            if not attach_admissible(scenario, graph, t, att):
                flag("C23", (k, att), "attachment is not an in-range UAV at the arrival slot")
            inflow[att] += 1
            if (k, att) not in d.y:
                flag("C23", (k, att), "attach vertex not marked visited")
        elif outflow or any(kk == k for kk, _, _ in d.x):
            flag("C23", (k,), "task uses resources without an origin attachment")
        into_dest = sum(n for v, n in inflow.items() if v[0] == t.destination)
        if d.completed.get(k):
            if att is None:
                flag("C23", (k,), "completed task never left its origin")
            if into_dest != 1:
                flag("C24", (k,), f"{into_dest} arrivals at the destination")
            for cid, detail in completion_problems(d, t, scenario):
                if cid in ("C24", "C23") and any(v.constraint_id == cid and v.subject[:1] == (k,) for v in out):
                    continue
                flag(cid, (k,), detail)
        sinks = 0
        for v in sorted(set(inflow) | set(outflow), key=lambda v: (v[1], v[0])):
            if v[0] == t.destination:
                if outflow[v]:
                    flag("C25", (k, v), "flow leaves the destination")
                continue
            if d.completed.get(k):
                if inflow[v] != outflow[v]:
                    flag("C25", (k, v), f"inflow {inflow[v]} != outflow {outflow[v]}")
            else:
                if outflow[v] > inflow[v]:
                    flag("C25", (k, v), f"outflow {outflow[v]} exceeds inflow {inflow[v]}")
                sinks += inflow[v] - outflow[v]
        if not d.completed.get(k) and sinks + into_dest > 1:
            flag("C25", (k,), f"partial chain ends at {sinks + into_dest} vertices")
    return out
