"""UAV and satellite energy models and the per-slot energy ledger."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .scenario import GROUND, SATELLITE, UAV, Environment, NodeSpec, Scenario, UavParams


class EnergyDomainError(ValueError):
    pass


class DeploymentInconsistency(ValueError):
    """A deployment references a link or vertex the graph does not have."""


def hover_delta(gravity, air_density):
    return math.sqrt(gravity ** 3 / (2.0 * math.pi * air_density))


def uav_hover_power(env: Environment, uav: UavParams):
    """Hover power sqrt(g^3/(2*pi*rho)) * sqrt(M^3/(r^2 * n))."""
    if not (uav.propeller_radius_m > 0 and uav.propeller_count > 0 and env.air_density_kg_m3 > 0):
        raise EnergyDomainError("propeller radius, propeller count and air density must be > 0")
    delta = hover_delta(env.gravity_m_s2, env.air_density_kg_m3)
    return delta * math.sqrt(uav.mass_kg ** 3 / (uav.propeller_radius_m ** 2 * uav.propeller_count))


def uav_move_power(v, uav: UavParams, p_hov):
    if v < 0 or v > uav.v_max_m_s:
        raise EnergyDomainError(f"speed {v} outside [0, v_max={uav.v_max_m_s}]")
    return v / uav.v_max_m_s * (uav.p_max_w - p_hov)


def uav_path_energy(pos_now, pos_next, speed, slot_length, *, p_move, p_hover):
    """Moving power times flight time plus hover power over the slot."""
    dist = math.dist(pos_now, pos_next)
    if dist == 0:
        return p_hover * slot_length
    if not speed > 0:
        raise EnergyDomainError("zero speed with nonzero displacement")
    return p_move * dist / speed + p_hover * slot_length


def uav_slot_path_energy(scenario: Scenario, node: NodeSpec, slot):
    """Path energy of ``node`` in ``slot`` for its scripted trajectory.

    The UAV flies from its slot position to its next-slot position at the
    uniform speed that covers the displacement in one slot; in the final slot
    it hovers.
    """
    u = node.uav_params
    p_hov = uav_hover_power(scenario.environment, u)
    t = scenario.slot_length
    here = node.position(slot)
    there = node.position(slot + 1) if slot < scenario.slot_count else here
    dist = math.dist(here, there)
    speed = min(dist / t, u.v_max_m_s)
    p_mov = uav_move_power(speed, u, p_hov)
    return uav_path_energy(here, there, speed, t, p_move=p_mov, p_hover=p_hov)


def standing_energy(scenario: Scenario, node: NodeSpec, slot):
    """Deployment-independent energy: UAV path energy, satellite operation energy."""
    if node.node_class == UAV:
        return uav_slot_path_energy(scenario, node, slot)
    if node.node_class == SATELLITE:
        return node.sat_params.op_energy_per_slot_j
    return 0.0


def energy_headroom(scenario: Scenario, graph) -> np.ndarray:
    """Per-vertex budget minus standing energy (ground vertices unbudgeted)."""
    out = np.empty(graph.n_vertices)
    for i, v in enumerate(graph.vertices):
        n = scenario.node(v.node_id)
        out[i] = math.inf if n.node_class == GROUND else n.energy_budget_j - standing_energy(scenario, n, v.slot)
    return out


def compute_energy_per_unit(scenario: Scenario, node_class):
    env = scenario.environment
    if node_class == UAV:
        return env.compute_energy_uav_j_per_unit
    if node_class == SATELLITE:
        return env.compute_energy_sat_j_per_unit
    return 0.0


def link_energy_terms(scenario: Scenario, graph, e, phi_mbit):
    """Energy charged for carrying ``phi_mbit`` over link ``e``.

    Returns ``[(vertex, kind, joules), ...]`` with kind in {"tx", "rx"}.
    Storage links cost nothing.
    """
    if graph.is_storage[e]:
        return []
    a, b = int(graph.link_from[e]), int(graph.link_to[e])
    ca, cb = graph.vertex_class[a], graph.vertex_class[b]
    secs = phi_mbit * 1e6 / graph.rate[e]
    out = []
    if ca == UAV:
        out.append((a, "tx", scenario.node(graph.vertices[a].node_id).uav_params.tx_power_w * secs))
    elif ca == SATELLITE:
        sp = scenario.node(graph.vertices[a].node_id).sat_params
        if cb == SATELLITE:
            out.append((a, "tx", sp.tx_power_ss_w * secs))
        elif cb == GROUND:
            out.append((a, "tx", sp.tx_power_sg_w * secs))
    if cb == SATELLITE:
        sp = scenario.node(graph.vertices[b].node_id).sat_params
        if ca == UAV:
            out.append((b, "rx", sp.rx_power_us_w * secs))
        elif ca == SATELLITE:
            out.append((b, "rx", sp.rx_power_ss_w * secs))
    return out


def _tasks(scenario):
    return {t.id: t for t in scenario.tasks}


def _resolve_link(graph, link_key):
    try:
        return graph.find_link(*link_key)
    except KeyError:
        raise DeploymentInconsistency(f"link {link_key} is not in the graph") from None


def comm_energy(node_id, slot, z, graph, scenario: Scenario):
    """Communication energy of ``node_id`` in ``slot`` for link uses ``z``.

    UAVs pay transmit energy on their outgoing links; satellites pay receive
    energy on inbound U2S/S2S and transmit energy on outbound S2S/S2G.
    """
    v = graph.vindex.get((node_id, slot))
    if v is None:
        raise DeploymentInconsistency(f"vertex {(node_id, slot)} is not in the graph")
    tasks = _tasks(scenario)
    total = 0.0
    for k, link_key in z:
        e = _resolve_link(graph, link_key)
        if int(graph.link_from[e]) != v and int(graph.link_to[e]) != v:
            continue
        for vert, _, joules in link_energy_terms(scenario, graph, e, tasks[k].comm_demand):
            if vert == v:
                total += joules
    return total


def compute_energy(node_id, slot, x, scenario: Scenario):
    """Sum of placed compute demand times the class energy-per-unit."""
    node = scenario.node(node_id)
    ec = compute_energy_per_unit(scenario, node.node_class)
    tasks = _tasks(scenario)
    total = 0.0
    for k, f, vkey in x:
        if tuple(vkey) == (node_id, slot):
            total += tasks[k].vnfs[f - 1].compute_demand * ec
    return total


@dataclass
class EnergyEntry:
    path: float = 0.0
    comm_rx: float = 0.0
    comm_tx: float = 0.0
    compute: float = 0.0
    op: float = 0.0

    @property
    def comm(self):
        return self.comm_rx + self.comm_tx

    @property
    def transmission_total(self):
        """UAV: path + comm; satellite: rx + tx + op."""
        return self.path + self.comm + self.op

    @property
    def total(self):
        return self.transmission_total + self.compute


@dataclass
class EnergyLedger:
    entries: dict = field(default_factory=dict)   # (node_id, slot) -> EnergyEntry
    budget: dict = field(default_factory=dict)    # node_id -> J per slot

    def total(self, node_id, slot):
        return self.entries[(node_id, slot)].total

    def spent(self, node_id):
        return sum(e.total for (n, _), e in self.entries.items() if n == node_id)

    def rows(self):
        for (n, tau), e in sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            yield {"node": n, "slot": tau, "path_j": e.path, "comm_rx_j": e.comm_rx, "comm_tx_j": e.comm_tx,
                   "compute_j": e.compute, "op_j": e.op, "total_j": e.total,
                   "budget_j": self.budget[n]}


def energy_ledger(scenario: Scenario, graph, deployment) -> EnergyLedger:
    """Full ledger over every aerial (node, slot) for a deployment."""
    led = EnergyLedger()
    for n in scenario.nodes:
        if n.node_class == GROUND:
            continue
        led.budget[n.id] = n.energy_budget_j
        for tau in range(1, scenario.slot_count + 1):
            e = EnergyEntry()
            if n.node_class == UAV:
                e.path = uav_slot_path_energy(scenario, n, tau)
            else:
                e.op = n.sat_params.op_energy_per_slot_j
            led.entries[(n.id, tau)] = e
    tasks = _tasks(scenario)
    for k, link_key in deployment.z:
        e = _resolve_link(graph, link_key)
        for vert, kind, joules in link_energy_terms(scenario, graph, e, tasks[k].comm_demand):
            entry = led.entries[graph.key(vert)]
            if kind == "tx":
                entry.comm_tx += joules
            else:
                entry.comm_rx += joules
    for k, f, vkey in deployment.x:
        vkey = tuple(vkey)
        if vkey in led.entries:
            node = scenario.node(vkey[0])
            led.entries[vkey].compute += tasks[k].vnfs[f - 1].compute_demand * compute_energy_per_unit(
                scenario, node.node_class)
    return led


def per_task_comm_energy(scenario, graph, deployment):
    """comm energy keyed by (task, vertex) -- additivity checks."""
    out = defaultdict(float)
    tasks = _tasks(scenario)
    for k, link_key in deployment.z:
        e = _resolve_link(graph, link_key)
        for vert, _, joules in link_energy_terms(scenario, graph, e, tasks[k].comm_demand):
            out[(k, vert)] += joules
    return dict(out)
