"""Reconfigurable time-expansion graph (RTEG).

One vertex per (node, slot).  Spatial links join vertices of the same slot
and carry the Shannon rate of the slot geometry; storage links join
consecutive copies of every UAV and satellite and carry that node's storage
capacity.  Topology is immutable once built; residual capacities live in a
separate :class:`ResidualLayer` owned by one deployment engine at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from . import channel as ch
from .kernels import dijkstra_csr, pairwise_distances
from .scenario import GROUND, SATELLITE, UAV, Scenario

G2U, U2U, U2S, S2S, S2G, STORAGE = "G2U", "U2U", "U2S", "S2S", "S2G", "STORAGE"
LINK_CLASSES = (G2U, U2U, U2S, S2S, S2G, STORAGE)
SPATIAL_CLASSES = LINK_CLASSES[:-1]
_CLASS_CODE = {c: i for i, c in enumerate(LINK_CLASSES)}

_PAIR_CLASS = {
    frozenset((GROUND, UAV)): G2U,
    frozenset((UAV,)): U2U,
    frozenset((UAV, SATELLITE)): U2S,
    frozenset((SATELLITE,)): S2S,
    frozenset((SATELLITE, GROUND)): S2G,
}


class TxNode(NamedTuple):
    node_id: str
    slot: int
    node_class: str
    position: tuple

    @property
    def key(self):
        return (self.node_id, self.slot)


@dataclass(frozen=True)
class LinkState:
    src: tuple
    dst: tuple
    link_class: str
    rate: Optional[float]
    capacity: float
    residual: float

    @property
    def key(self):
        return (self.src, self.dst)


class RtegGraph:
    """Time-expanded topology backed by flat numpy arrays.

    Vertices are indexed in ``(slot, node_id)`` order, which is also the
    deterministic tie-break order for path search.
    """

    def __init__(self, scenario: Scenario, vertices, link_from, link_to, link_class, rate, capacity):
        self.scenario = scenario
        self.slot_count = scenario.slot_count
        self.slot_length = scenario.slot_length
        self.vertices = tuple(vertices)
        self.vindex = {v.key: i for i, v in enumerate(self.vertices)}
        self.vertex_class = np.array([v.node_class for v in self.vertices], dtype=object)
        self.vertex_slot = np.array([v.slot for v in self.vertices], dtype=np.int64)
        self.is_ground = np.array([c == GROUND for c in self.vertex_class], dtype=bool)
        self.is_uav = np.array([c == UAV for c in self.vertex_class], dtype=bool)
        self.is_sat = np.array([c == SATELLITE for c in self.vertex_class], dtype=bool)

        order = np.lexsort((link_to, link_from))
        self.link_from = np.asarray(link_from, dtype=np.int64)[order]
        self.link_to = np.asarray(link_to, dtype=np.int64)[order]
        self.link_class = np.asarray(link_class, dtype=np.int64)[order]
        self.rate = np.asarray(rate, dtype=np.float64)[order]
        self.capacity = np.asarray(capacity, dtype=np.float64)[order]
        for a in (self.link_from, self.link_to, self.link_class, self.rate, self.capacity):
            a.setflags(write=False)
        self.is_storage = self.link_class == _CLASS_CODE[STORAGE]
        with np.errstate(divide="ignore"):
            self.inv_rate = np.where(self.is_storage, 0.0, 1.0 / np.where(self.is_storage, 1.0, self.rate))

        nv = len(self.vertices)
        self.indptr = np.zeros(nv + 1, dtype=np.int64)
        np.add.at(self.indptr, self.link_from + 1, 1)
        self.indptr = np.cumsum(self.indptr)
        self.adj_links = np.arange(len(self.link_from), dtype=np.int64)  # already sorted by source
        self.link_index = {(int(a), int(b)): e for e, (a, b) in enumerate(zip(self.link_from, self.link_to))}
        self.storage_out = np.full(nv, -1, dtype=np.int64)
        for e in np.flatnonzero(self.is_storage):
            self.storage_out[self.link_from[e]] = e

    # -- lookups --------------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_links(self):
        return len(self.link_from)

    def vertex(self, node_id, slot) -> int:
        return self.vindex[(node_id, slot)]

    def key(self, v) -> tuple:
        return self.vertices[v].key

    def link_key(self, e) -> tuple:
        return (self.vertices[self.link_from[e]].key, self.vertices[self.link_to[e]].key)

    def find_link(self, src_key, dst_key) -> int:
        return self.link_index[(self.vindex[src_key], self.vindex[dst_key])]

    def class_of(self, e) -> str:
        return LINK_CLASSES[self.link_class[e]]

    def out_links(self, v):
        return range(self.indptr[v], self.indptr[v + 1])

    def link_state(self, e, residual=None) -> LinkState:
        rate = None if self.is_storage[e] else float(self.rate[e])
        cap = float(self.capacity[e])
        return LinkState(*self.link_key(e), self.class_of(e), rate, cap,
                         cap if residual is None else float(residual[e]))

    def links(self, residual=None):
        return [self.link_state(e, residual) for e in range(self.n_links)]

    def copies(self, node_id):
        return [self.vindex[(node_id, tau)] for tau in range(1, self.slot_count + 1)]

    def fresh_residuals(self, energy_headroom=None) -> "ResidualLayer":
        compute = np.array([self.scenario.node(v.node_id).compute_capacity for v in self.vertices], dtype=float)
        if energy_headroom is None:
            energy_headroom = np.array([self.scenario.node(v.node_id).energy_budget_j for v in self.vertices])
        return ResidualLayer(self.capacity.copy(), compute, np.asarray(energy_headroom, dtype=float).copy())


@dataclass
class ResidualLayer:
    """Mutable capacities over an immutable graph (single-writer)."""

    link: np.ndarray
    compute: np.ndarray
    energy: np.ndarray

    def copy(self):
        return ResidualLayer(self.link.copy(), self.compute.copy(), self.energy.copy())


# -- construction -------------------------------------------------------------

def _link_class(a, b):
    return _PAIR_CLASS.get(frozenset((a, b)))


def _within(rule, cls, a_cls, d):
    if cls == G2U:
        return d <= rule.g2u_range_m
    if cls == U2U:
        return d <= rule.u2u_range_m
    if cls == S2S:
        return d <= rule.s2s_range_m
    if cls == S2G:
        return d <= rule.s2g_range_m
    if cls == U2S:
        return d <= rule.u2s_range_m
    return False


def spatial_rate(scenario: Scenario, cls, pos_a, pos_b, class_a=None):
    """Rate (bit/s) of a spatial link of class ``cls`` between two positions.

    For G2U the ground end is taken as transmitter and the UAV as the elevated
    receiver in both directions (reciprocal channel).
    """
    p = scenario.channel
    if cls == G2U:
        ground, air = (pos_a, pos_b) if class_a == GROUND else (pos_b, pos_a)
        snr = ch.snr_g2u(p.g2u, ground, air, p.g2u_model)
        return ch.link_rate(snr, p.g2u.bandwidth_hz)
    if cls in (U2U, U2S, S2S):
        snr = ch.snr_a2a(p.a2a, math.dist(pos_a, pos_b), p.a2a_law)
        return ch.link_rate(snr, p.a2a.bandwidth_hz)
    if cls == S2G:
        return ch.link_rate(ch.snr_s2g(p.s2g), p.s2g.bandwidth_hz)
    raise ValueError(f"not a spatial class: {cls}")


def build_rteg(scenario: Scenario, connectivity=None) -> RtegGraph:
    rule = connectivity or scenario.connectivity
    T, t = scenario.slot_count, scenario.slot_length
    nodes = sorted(scenario.nodes, key=lambda n: n.id)
    vertices = [TxNode(n.id, tau, n.node_class, n.position(tau)) for tau in range(1, T + 1) for n in nodes]
    vidx = {v.key: i for i, v in enumerate(vertices)}
    sats = [n for n in nodes if n.node_class == SATELLITE]
    lf, lt, lc, lr, lcap = [], [], [], [], []

    def add(a, b, cls, rate, cap):
        lf.append(a)
        lt.append(b)
        lc.append(_CLASS_CODE[cls])
        lr.append(rate)
        lcap.append(cap)

    for tau in range(1, T + 1):
        pts = np.array([n.position(tau) for n in nodes], dtype=np.float64).reshape(-1, 3)
        dist = pairwise_distances(pts)
        nearest_sat = {}
        if rule.uav_satellite == "nearest" and sats:
            for i, n in enumerate(nodes):
                if n.node_class == UAV:
                    best = min(sats, key=lambda s: (dist[i, nodes.index(s)], s.id))
                    nearest_sat[n.id] = best.id
        for i, a in enumerate(nodes):
            for j, b in enumerate(nodes):
                if i == j:
                    continue
                cls = _link_class(a.node_class, b.node_class)
                if cls is None:
                    continue
                if cls == U2S and rule.uav_satellite == "nearest":
                    uav, sat = (a, b) if a.node_class == UAV else (b, a)
                    ok = nearest_sat.get(uav.id) == sat.id
                else:
                    ok = _within(rule, cls, a.node_class, dist[i, j])
                if not ok:
                    continue
                rate = spatial_rate(scenario, cls, a.position(tau), b.position(tau), a.node_class)
                add(vidx[(a.id, tau)], vidx[(b.id, tau)], cls, rate, rate * t / 1e6)
        if tau < T:
            for n in nodes:
                if n.node_class in (UAV, SATELLITE):
                    add(vidx[(n.id, tau)], vidx[(n.id, tau + 1)], STORAGE, math.nan, n.storage_capacity)
    return RtegGraph(scenario, vertices, lf, lt, lc, lr, lcap)


# -- views --------------------------------------------------------------------

@dataclass(frozen=True)
class Snapshot:
    slot: int
    vertices: tuple
    links: tuple


def snapshot(graph: RtegGraph, slot) -> Snapshot:
    """Slot-``slot`` vertices, their spatial links, and the storage links leaving them."""
    if not 1 <= slot <= graph.slot_count:
        raise ValueError(f"slot {slot} outside [1, {graph.slot_count}]")
    vs = tuple(v for v in graph.vertices if v.slot == slot)
    es = tuple(graph.link_state(e) for e in range(graph.n_links)
               if graph.vertex_slot[graph.link_from[e]] == slot)
    return Snapshot(slot, vs, es)


def dump_edges(graph: RtegGraph, residual=None) -> str:
    """One link per line: ``from to class rate capacity`` (storage rate is ``-``)."""
    lines = ["# from to class rate_bps capacity"]
    for e in range(graph.n_links):
        (a, ta), (b, tb) = graph.link_key(e)
        rate = "-" if graph.is_storage[e] else repr(float(graph.rate[e]))
        cap = graph.capacity[e] if residual is None else residual[e]
        lines.append(f"{a}@{ta} {b}@{tb} {graph.class_of(e)} {rate} {float(cap)!r}")
    return "\n".join(lines) + "\n"


# -- shortest paths -----------------------------------------------------------

@dataclass(frozen=True)
class WeightRule:
    """``latency``: payload/rate seconds per spatial link, slot length per
    storage link; ``hops``: one per link."""

    kind: str = "latency"

    def weights(self, graph: RtegGraph, phi_mbit):
        if self.kind == "hops":
            return np.ones(graph.n_links)
        if self.kind != "latency":
            raise ValueError(f"unknown weight rule {self.kind!r}")
        return np.where(graph.is_storage, graph.slot_length, phi_mbit * 1e6 * graph.inv_rate)


LATENCY = WeightRule("latency")
HOPS = WeightRule("hops")


@dataclass(frozen=True)
class Path:
    links: tuple
    vertices: tuple
    weight: float

    def __len__(self):
        return len(self.links)


def shortest_path(graph: RtegGraph, from_, to, weight: WeightRule = LATENCY, *, phi_mbit=1.0,
                  edge_ok=None, vertex_ok=None, weights=None) -> Optional[Path]:
    """Minimum-weight path from ``from_`` to any copy of node ``to``.

    ``from_`` is a vertex index, a ``(node_id, slot)`` key, a :class:`TxNode`,
    or an iterable of vertex indices (multi-source, all at distance 0).
    Ground vertices other than the target copies are never relayed through.
    Returns ``None`` when no copy of ``to`` is reachable.
    """
    sources = _as_sources(graph, from_)
    targets = [graph.vindex[(to, tau)] for tau in range(1, graph.slot_count + 1) if (to, tau) in graph.vindex]
    for s in sources:
        if s in targets:
            return Path((), (s,), 0.0)
    if weights is None:
        weights = weight.weights(graph, phi_mbit)
    if edge_ok is None:
        edge_ok = np.ones(graph.n_links, dtype=bool)
    vok = ~graph.is_ground if vertex_ok is None else vertex_ok.copy()
    vok[targets] = True
    src = np.asarray(sources, dtype=np.int64)
    vok[src] = True
    from_ground = graph.is_ground[graph.link_from]
    if from_ground.any():
        from_ground &= ~np.isin(graph.link_from, src)
        edge_ok = edge_ok & ~from_ground
    dist, pred = dijkstra_csr(graph.indptr, graph.adj_links, graph.link_to, weights, edge_ok, vok,
                              src, np.zeros(len(src)))
    best = None
    for v in targets:
        if math.isfinite(dist[v]) and (best is None or dist[v] < dist[best]):
            best = v
    if best is None:
        return None
    links = []
    v = best
    while pred[v] >= 0:
        e = int(pred[v])
        links.append(e)
        v = int(graph.link_from[e])
    links.reverse()
    verts = [v] + [int(graph.link_to[e]) for e in links]
    return Path(tuple(links), tuple(verts), float(dist[best]))


def _as_sources(graph, from_):
    if isinstance(from_, (int, np.integer)):
        return [int(from_)]
    if isinstance(from_, TxNode):
        return [graph.vindex[from_.key]]
    if isinstance(from_, tuple) and len(from_) == 2 and isinstance(from_[0], str):
        return [graph.vindex[from_]]
    return [int(v) for v in from_]


def path_weight(graph: RtegGraph, links: Iterable[int], weights) -> float:
    return float(sum(weights[e] for e in links))
