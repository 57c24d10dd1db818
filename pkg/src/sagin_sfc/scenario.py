"""Scenario model, file format, and seeded task generation.

A scenario is a JSON document whose field names carry their units
(``data_size_mbit``, ``positions_m`` ...).  See ``docs/scenario_format.md``
and ``data/scenario.schema.json``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import A2AParams, ChannelParams, G2UParams, S2GParams

FORMAT_TAG = "sagin-sfc-scenario/1"

GROUND = "ground"
UAV = "uav"
SATELLITE = "satellite"
NODE_CLASSES = (GROUND, UAV, SATELLITE)

DATA_DIR = Path(__file__).with_name("data")
BUNDLED = ("paper_default", "tiny_oracle")


class ScenarioError(ValueError):
    """A scenario failed validation.  ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ScenarioParseError(ScenarioError):
    pass


@dataclass(frozen=True)
class UavParams:
    mass_kg: float
    propeller_radius_m: float
    propeller_count: int
    v_max_m_s: float
    p_max_w: float
    tx_power_w: float


@dataclass(frozen=True)
class SatParams:
    op_energy_per_slot_j: float
    rx_power_us_w: float
    rx_power_ss_w: float
    tx_power_ss_w: float
    tx_power_sg_w: float


@dataclass(frozen=True)
class NodeSpec:
    id: str
    node_class: str
    positions: tuple
    compute_capacity: float = 0.0
    storage_capacity: float = 0.0
    energy_budget_j: float = math.inf
    uav_params: Optional[UavParams] = None
    sat_params: Optional[SatParams] = None

    @property
    def aerial(self):
        return self.node_class != GROUND

    def position(self, slot):
        return self.positions[slot - 1]


@dataclass(frozen=True)
class VnfRequirement:
    index: int
    compute_demand: float


@dataclass(frozen=True)
class TaskSpec:
    id: str
    source: str
    destination: str
    arrival_slot: int
    data_size: float
    comm_demand: float
    storage_demand: float
    vnfs: tuple
    source_position: Optional[tuple] = None

    @property
    def total_compute(self):
        return sum(v.compute_demand for v in self.vnfs)


@dataclass(frozen=True)
class Environment:
    gravity_m_s2: float = 9.8
    air_density_kg_m3: float = 1.225
    compute_energy_uav_j_per_unit: float = 1.0
    compute_energy_sat_j_per_unit: float = 1.0


@dataclass(frozen=True)
class ConnectivityRule:
    """Class-specific maximum ranges (meters) that admit a spatial link.

    ``uav_satellite="nearest"`` links every UAV to its nearest satellite only;
    ``"range"`` uses ``u2s_range_m`` instead.
    """

    g2u_range_m: float = 1000.0
    u2u_range_m: float = 2000.0
    s2s_range_m: float = 5.0e6
    s2g_range_m: float = 3.0e6
    uav_satellite: str = "nearest"
    u2s_range_m: float = math.inf


@dataclass(frozen=True)
class TaskGenerator:
    count: int
    min_mbit: float
    max_mbit: float
    coverage_radius_m: float
    destination: str
    vnfs_per_task: int = 1
    staggered: bool = False


@dataclass(frozen=True)
class Scenario:
    name: str
    nodes: tuple
    tasks: tuple
    slot_count: int
    slot_length: float
    channel: ChannelParams
    rng_seed: int = 0
    environment: Environment = field(default_factory=Environment)
    connectivity: ConnectivityRule = field(default_factory=ConnectivityRule)
    generator: Optional[TaskGenerator] = None

    def __post_init__(self):
        validate(self)

    def node(self, node_id) -> NodeSpec:
        return self._index()[node_id]

    def _index(self):
        idx = self.__dict__.get("_node_index")
        if idx is None:
            idx = {n.id: n for n in self.nodes}
            object.__setattr__(self, "_node_index", idx)
        return idx

    def nodes_of(self, node_class):
        return tuple(n for n in self.nodes if n.node_class == node_class)

    @property
    def uavs(self):
        return self.nodes_of(UAV)

    @property
    def satellites(self):
        return self.nodes_of(SATELLITE)

    @property
    def grounds(self):
        return self.nodes_of(GROUND)

    def task(self, task_id) -> TaskSpec:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def source_position(self, task: TaskSpec, slot):
        if task.source_position is not None:
            return task.source_position
        return self.node(task.source).position(slot)

    def with_tasks(self, tasks):
        return replace(self, tasks=tuple(tasks))

    def with_seed(self, seed):
        """Same network, tasks regenerated from ``seed`` (if a generator is configured)."""
        if self.generator is None:
            return replace(self, rng_seed=seed)
        return replace(self, rng_seed=seed, tasks=tuple(tasks_from_generator(self, seed)))


# -- validation ---------------------------------------------------------------

def validate(s: Scenario):
    if not isinstance(s.slot_count, int) or s.slot_count < 1:
        raise ScenarioError("must be an integer >= 1", "slot_count")
    if not s.slot_length > 0:
        raise ScenarioError("must be > 0", "slot_length_s")
    seen = set()
    for n in s.nodes:
        _validate_node(n, s.slot_count)
        if n.id in seen:
            raise ScenarioError("duplicate node id", f"nodes[{n.id}]")
        seen.add(n.id)
    grounds = {n.id for n in s.nodes if n.node_class == GROUND}
    task_ids = set()
    for t in s.tasks:
        _validate_task(t, s.slot_count, grounds)
        if t.id in task_ids:
            raise ScenarioError("duplicate task id", f"tasks[{t.id}]")
        if t.id in seen:
            raise ScenarioError("task id collides with a node id", f"tasks[{t.id}]")
        task_ids.add(t.id)
    if s.generator is not None and s.generator.destination not in grounds:
        raise ScenarioError("destination must be a ground node", "task_generator.destination")
    for n in s.uavs:
        v = n.uav_params.v_max_m_s
        for tau in range(1, s.slot_count):
            step = math.dist(n.position(tau), n.position(tau + 1))
            if step / s.slot_length > v * (1 + 1e-9):
                raise ScenarioError(f"speed {step / s.slot_length:.3f} m/s exceeds v_max {v} "
                                    f"between slots {tau} and {tau + 1}", f"nodes[{n.id}]")


def _validate_node(n: NodeSpec, T):
    where = f"nodes[{n.id}]"
    if n.node_class not in NODE_CLASSES:
        raise ScenarioError(f"unknown class {n.node_class!r}", where)
    if len(n.positions) != T:
        raise ScenarioError(f"has {len(n.positions)} positions, expected slot_count={T}", where)
    for p in n.positions:
        if len(p) != 3 or not all(math.isfinite(c) for c in p):
            raise ScenarioError("positions must be finite 3D points", where)
    for name in ("compute_capacity", "storage_capacity", "energy_budget_j"):
        if not getattr(n, name) >= 0:
            raise ScenarioError(f"{name} must be >= 0", where)
    if (n.uav_params is not None) != (n.node_class == UAV):
        raise ScenarioError("uav parameters are required for, and only for, class uav", where)
    if (n.sat_params is not None) != (n.node_class == SATELLITE):
        raise ScenarioError("satellite parameters are required for, and only for, class satellite", where)
    if n.uav_params is not None:
        u = n.uav_params
        if not u.v_max_m_s > 0:
            raise ScenarioError("uav.v_max_m_s must be > 0", where)
        for name in ("mass_kg", "propeller_radius_m", "propeller_count"):
            if not getattr(u, name) > 0:
                raise ScenarioError(f"uav.{name} must be > 0", where)
        for name in ("p_max_w", "tx_power_w"):
            if not getattr(u, name) >= 0:
                raise ScenarioError(f"uav.{name} must be >= 0", where)
    if n.sat_params is not None:
        for name, v in vars(n.sat_params).items():
            if not v >= 0:
                raise ScenarioError(f"satellite.{name} must be >= 0", where)


def _validate_task(t: TaskSpec, T, grounds):
    where = f"tasks[{t.id}]"
    if not t.data_size > 0:
        raise ScenarioError("data_size_mbit must be > 0", where)
    if not t.vnfs:
        raise ScenarioError("vnfs must be nonempty", where)
    for i, v in enumerate(t.vnfs, start=1):
        if v.index != i:
            raise ScenarioError("vnf indices must be contiguous from 1", where)
        if not v.compute_demand > 0:
            raise ScenarioError("vnf compute demand must be > 0", where)
    if not (isinstance(t.arrival_slot, int) and 1 <= t.arrival_slot <= T):
        raise ScenarioError(f"arrival_slot must lie in [1, {T}]", where)
    if t.source == t.destination:
        raise ScenarioError("source equals destination", where)
    if t.destination not in grounds:
        raise ScenarioError(f"destination {t.destination!r} is not a ground node", where)
    if t.source_position is None and t.source not in grounds:
        raise ScenarioError(f"source {t.source!r} is neither a ground node nor positioned", where)
    if t.comm_demand < 0 or t.storage_demand < 0:
        raise ScenarioError("demands must be >= 0", where)


# -- task generation ----------------------------------------------------------

def generate_tasks(count, seed, bounds, *, footprints=((0.0, 0.0),), coverage_radius_m=500.0,
                   destination="gs", slot_count=1, staggered=False, vnfs_per_task=1,
                   id_prefix="t"):
    """Random task set, a pure function of its arguments.

    Data sizes are uniform in ``bounds``; each VNF needs ``ceil(d/10)`` compute
    units; sources are uniform over the union of the coverage disks centred on
    ``footprints``.  Link demand defaults to the data size and storage demand
    to a tenth of it.
    """
    lo, hi = bounds
    if count < 0:
        raise ValueError("count must be >= 0")
    if lo > hi:
        raise ValueError("min_mbit must be <= max_mbit")
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    sizes = rng.uniform(lo, hi, size=count)
    if staggered:
        arrivals = rng.integers(1, slot_count + 1, size=count)
    else:
        arrivals = np.ones(count, dtype=np.int64)
    centres = np.asarray(footprints, dtype=float).reshape(-1, 2)
    r = float(coverage_radius_m)
    box_lo = centres.min(axis=0) - r
    box_hi = centres.max(axis=0) + r
    width = len(str(count - 1))
    tasks = []
    for i in range(count):
        while True:
            p = rng.uniform(box_lo, box_hi)
            if np.any(np.hypot(*(centres - p).T) <= r):
                break
        d = float(sizes[i])
        demand = float(math.ceil(d / 10.0))
        tid = f"{id_prefix}{i:0{width}d}"
        tasks.append(TaskSpec(
            id=tid,
            source=f"src-{tid}",
            destination=destination,
            arrival_slot=int(arrivals[i]),
            data_size=d,
            comm_demand=d,
            storage_demand=d / 10.0,
            vnfs=tuple(VnfRequirement(j, demand) for j in range(1, vnfs_per_task + 1)),
            source_position=(float(p[0]), float(p[1]), 0.0),
        ))
    return tasks


def tasks_from_generator(s: Scenario, seed):
    g = s.generator
    footprints = [(u.position(1)[0], u.position(1)[1]) for u in s.uavs]
    return generate_tasks(g.count, seed, (g.min_mbit, g.max_mbit), footprints=footprints or [(0.0, 0.0)],
                          coverage_radius_m=g.coverage_radius_m, destination=g.destination,
                          slot_count=s.slot_count, staggered=g.staggered, vnfs_per_task=g.vnfs_per_task)


# -- file format --------------------------------------------------------------

_UAV_KEYS = {"mass_kg": "mass_kg", "propeller_radius_m": "propeller_radius_m",
             "propeller_count": "propeller_count", "v_max_m_s": "v_max_m_s",
             "p_max_w": "p_max_w", "tx_power_w": "tx_power_w"}
_SAT_KEYS = {"op_energy_per_slot_j": "op_energy_per_slot_j", "rx_power_us_w": "rx_power_us_w",
             "rx_power_ss_w": "rx_power_ss_w", "tx_power_ss_w": "tx_power_ss_w",
             "tx_power_sg_w": "tx_power_sg_w"}


def _get(d, key, where, default=..., kind=None):
    if key not in d:
        if default is ...:
            raise ScenarioError(f"missing field {key!r}", where)
        return default
    v = d[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioError(f"{key} must be a number", where)
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ScenarioError(f"{key} must be an integer", where)
    return v


def _params(cls, d, where):
    try:
        return cls(**d)
    except TypeError as exc:
        raise ScenarioError(str(exc), where) from None
    except ValueError as exc:
        raise ScenarioError(str(exc), where) from None


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioParseError("top level must be an object")
    tag = doc.get("format", FORMAT_TAG)
    if tag != FORMAT_TAG:
        raise ScenarioParseError(f"unsupported format {tag!r}", "format")
    T = _get(doc, "slot_count", "scenario", kind=int)
    if T < 1:
        raise ScenarioError("must be an integer >= 1", "slot_count")
    t = _get(doc, "slot_length_s", "scenario", kind=float)

    ch = _get(doc, "channel", "scenario")
    channel = ChannelParams(
        g2u=_params(G2UParams, _get(ch, "g2u", "channel"), "channel.g2u"),
        a2a=_params(A2AParams, _get(ch, "a2a", "channel"), "channel.a2a"),
        s2g=_params(S2GParams, _get(ch, "s2g", "channel"), "channel.s2g"),
        g2u_model=ch.get("g2u_model", "db_bracket"),
        a2a_law=ch.get("a2a_law", "linear"),
    )
    env = _params(Environment, doc.get("environment", {}), "environment")
    conn = _params(ConnectivityRule, doc.get("connectivity", {}), "connectivity")

    nodes = []
    for i, nd in enumerate(_get(doc, "nodes", "scenario")):
        where = f"nodes[{nd.get('id', i)}]"
        cls = _get(nd, "class", where)
        uav = sat = None
        if "uav" in nd:
            uav = _params(UavParams, nd["uav"], where)
        if "satellite" in nd:
            sat = _params(SatParams, nd["satellite"], where)
        nodes.append(NodeSpec(
            id=str(_get(nd, "id", where)),
            node_class=cls,
            positions=tuple(tuple(float(c) for c in p) for p in _get(nd, "positions_m", where)),
            compute_capacity=_get(nd, "compute_units", where, 0.0, float),
            storage_capacity=_get(nd, "storage_units", where, 0.0, float),
            energy_budget_j=_get(nd, "energy_budget_j_per_slot", where, math.inf, float),
            uav_params=uav,
            sat_params=sat,
        ))

    gen = None
    if doc.get("task_generator") is not None:
        gen = _params(TaskGenerator, doc["task_generator"], "task_generator")

    tasks = []
    for i, td in enumerate(doc.get("tasks", [])):
        where = f"tasks[{td.get('id', i)}]"
        size = _get(td, "data_size_mbit", where, kind=float)
        vnfs = tuple(VnfRequirement(_get(v, "index", where, kind=int), _get(v, "compute_units", where, kind=float))
                     for v in _get(td, "vnfs", where))
        pos = td.get("source_position_m")
        tasks.append(TaskSpec(
            id=str(_get(td, "id", where)),
            source=str(_get(td, "source", where)),
            destination=str(_get(td, "destination", where)),
            arrival_slot=_get(td, "arrival_slot", where, 1, int),
            data_size=size,
            comm_demand=_get(td, "comm_demand_mbit", where, size, float),
            storage_demand=_get(td, "storage_demand_units", where, size / 10.0, float),
            vnfs=vnfs,
            source_position=None if pos is None else tuple(float(c) for c in pos),
        ))

    s = Scenario(
        name=str(doc.get("name", "scenario")),
        nodes=tuple(nodes),
        tasks=tuple(tasks),
        slot_count=T,
        slot_length=t,
        channel=channel,
        rng_seed=_get(doc, "rng_seed", "scenario", 0, int),
        environment=env,
        connectivity=conn,
        generator=gen,
    )
    if gen is not None and "tasks" not in doc:
        s = s.with_seed(s.rng_seed)
    return s


def scenario_to_dict(s: Scenario, include_tasks=True) -> dict:
    """JSON-ready document.  With a generator and ``include_tasks=False`` the
    task list is left out and regenerated from ``rng_seed`` on load."""
    def node(n: NodeSpec):
        d = {"id": n.id, "class": n.node_class, "positions_m": [list(p) for p in n.positions],
             "compute_units": n.compute_capacity, "storage_units": n.storage_capacity}
        if math.isfinite(n.energy_budget_j):
            d["energy_budget_j_per_slot"] = n.energy_budget_j
        if n.uav_params is not None:
            d["uav"] = dict(vars(n.uav_params))
        if n.sat_params is not None:
            d["satellite"] = dict(vars(n.sat_params))
        return d

    def task(t: TaskSpec):
        d = {"id": t.id, "source": t.source, "destination": t.destination, "arrival_slot": t.arrival_slot,
             "data_size_mbit": t.data_size, "comm_demand_mbit": t.comm_demand,
             "storage_demand_units": t.storage_demand,
             "vnfs": [{"index": v.index, "compute_units": v.compute_demand} for v in t.vnfs]}
        if t.source_position is not None:
            d["source_position_m"] = list(t.source_position)
        return d

    conn = dict(vars(s.connectivity))
    if not math.isfinite(conn["u2s_range_m"]):
        del conn["u2s_range_m"]
    doc = {
        "format": FORMAT_TAG,
        "name": s.name,
        "slot_count": s.slot_count,
        "slot_length_s": s.slot_length,
        "rng_seed": s.rng_seed,
        "environment": dict(vars(s.environment)),
        "connectivity": conn,
        "channel": {"g2u_model": s.channel.g2u_model, "a2a_law": s.channel.a2a_law,
                    "g2u": dict(vars(s.channel.g2u)), "a2a": dict(vars(s.channel.a2a)),
                    "s2g": dict(vars(s.channel.s2g))},
        "nodes": [node(n) for n in s.nodes],
    }
    if s.generator is not None:
        doc["task_generator"] = dict(vars(s.generator))
    if include_tasks or s.generator is None:
        doc["tasks"] = [task(t) for t in s.tasks]
    return doc


def resolve_scenario_path(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    if str(name_or_path) in BUNDLED:
        return DATA_DIR / f"{name_or_path}.json"
    raise FileNotFoundError(f"no scenario file or bundled scenario named {name_or_path!r}")


def load_scenario(path) -> Scenario:
    path = resolve_scenario_path(path)
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from None
    try:
        return scenario_from_dict(doc)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ScenarioParseError(f"{path}: malformed document ({exc})") from None


def save_scenario(s: Scenario, path, include_tasks=True):
    Path(path).write_text(json.dumps(scenario_to_dict(s, include_tasks), indent=1) + "\n")
