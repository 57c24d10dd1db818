"""Bundled scenarios and the random tiny-instance generator.

``paper_default()`` rebuilds ``data/paper_default.json``: six UAVs and one
LEO satellite over a 2.4 km x 1.6 km area, UAV compute 8 units, satellite
compute 50 units, 300 tasks of 10-50 Mbit with one VNF each.  Geometry,
channel constants, storage and energy budgets are plausible choices, not
measured values.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import A2AParams, ChannelParams, G2UParams, S2GParams
from .scenario import (GROUND, SATELLITE, UAV, ConnectivityRule, Environment, NodeSpec, SatParams,
                       Scenario, TaskGenerator, TaskSpec, UavParams, VnfRequirement)

DEFAULT_CHANNEL = ChannelParams(
    g2u=G2UParams(tx_power_w=1.0, noise_power_w=1e-13, eta_los_db=1.0, eta_nlos_db=20.0,
                  alpha=9.61, beta=0.16, carrier_mhz=2000.0, bandwidth_hz=2e6),
    a2a=A2AParams(tx_power_w=5.0, gain_tx=100.0, gain_rx=100.0, carrier_hz=20e9,
                  noise_temp_k=300.0, bandwidth_hz=10e6),
    s2g=S2GParams(tx_power_w=10.0, gain_tx=1000.0, gain_rx=1000.0, free_space_loss=2.2e-18,
                  rain_attenuation=0.8, noise_density_w_per_hz=4e-21, bandwidth_hz=20e6),
)

DEFAULT_UAV = UavParams(mass_kg=2.0, propeller_radius_m=0.2, propeller_count=4, v_max_m_s=20.0,
                      p_max_w=150.0, tx_power_w=1.0)
DEFAULT_SAT = SatParams(op_energy_per_slot_j=500.0, rx_power_us_w=2.0, rx_power_ss_w=2.0,
                      tx_power_ss_w=10.0, tx_power_sg_w=10.0)


def paper_default(slot_count=10, slot_length=10.0, task_count=300, seed=0) -> Scenario:
    T = slot_count
    uavs = []
    centres = [(x, y) for y in (-400.0, 400.0) for x in (-800.0, 0.0, 800.0)]
    for i, (cx, cy) in enumerate(centres, start=1):
        phase = i * math.pi / 3
        pos = tuple((round(cx + 50.0 * math.cos(phase + 0.2 * tau), 6),
                     round(cy + 50.0 * math.sin(phase + 0.2 * tau), 6), 200.0) for tau in range(T))
        uavs.append(NodeSpec(f"u{i}", UAV, pos, compute_capacity=8.0, storage_capacity=400.0,
                             energy_budget_j=3000.0, uav_params=DEFAULT_UAV))
    sat = NodeSpec("s1", SATELLITE,
                   tuple((-337.5e3 + 75e3 * tau, 0.0, 550e3) for tau in range(T)),
                   compute_capacity=50.0, storage_capacity=1000.0, energy_budget_j=1e5,
                   sat_params=DEFAULT_SAT)
    dc = NodeSpec("gs", GROUND, tuple((0.0, 0.0, 0.0) for _ in range(T)))
    gen = TaskGenerator(count=task_count, min_mbit=10.0, max_mbit=50.0, coverage_radius_m=500.0,
                        destination="gs", vnfs_per_task=1, staggered=False)
    s = Scenario(
        name="paper_default",
        nodes=tuple([dc] + uavs + [sat]),
        tasks=(),
        slot_count=T,
        slot_length=slot_length,
        channel=DEFAULT_CHANNEL,
        rng_seed=seed,
        environment=Environment(),
        connectivity=ConnectivityRule(g2u_range_m=700.0, u2u_range_m=1000.0, s2s_range_m=5e6,
                                      s2g_range_m=2.5e6, uav_satellite="nearest"),
        generator=gen,
    )
    return s.with_seed(seed)


def _task(tid, pos, size, demands, dest="gs", arrival=1):
    return TaskSpec(tid, f"src-{tid}", dest, arrival, size, size, size / 10.0,
                    tuple(VnfRequirement(i, float(c)) for i, c in enumerate(demands, start=1)),
                    source_position=tuple(float(c) for c in pos))


def tiny_oracle() -> Scenario:
    """Two UAVs, one satellite, one ground destination, two slots, three tasks."""
    T = 2
    u1 = NodeSpec("u1", UAV, ((-300.0, 0.0, 200.0), (-300.0, 0.0, 200.0)), compute_capacity=4.0,
                  storage_capacity=8.0, energy_budget_j=3000.0, uav_params=DEFAULT_UAV)
    u2 = NodeSpec("u2", UAV, ((300.0, 0.0, 200.0), (300.0, 0.0, 200.0)), compute_capacity=3.0,
                  storage_capacity=8.0, energy_budget_j=3000.0, uav_params=DEFAULT_UAV)
    s1 = NodeSpec("s1", SATELLITE, ((0.0, 0.0, 550e3), (75e3, 0.0, 550e3)), compute_capacity=2.0,
                  storage_capacity=10.0, energy_budget_j=1e5, sat_params=DEFAULT_SAT)
    gs = NodeSpec("gs", GROUND, ((600.0, 0.0, 0.0), (600.0, 0.0, 0.0)))
    tasks = (
        _task("k1", (-400.0, 100.0, 0.0), 40.0, [4]),
        _task("k2", (-250.0, -100.0, 0.0), 30.0, [3]),
        _task("k3", (350.0, 50.0, 0.0), 20.0, [2]),
    )
    return Scenario(
        name="tiny_oracle",
        nodes=(gs, u1, u2, s1),
        tasks=tasks,
        slot_count=T,
        slot_length=10.0,
        channel=DEFAULT_CHANNEL,
        rng_seed=0,
        connectivity=ConnectivityRule(g2u_range_m=700.0, u2u_range_m=1000.0, s2g_range_m=2.5e6),
    )


def random_tiny(seed, *, max_tasks=3, max_slots=3) -> Scenario:
    """Random instance inside the oracle's default budget.

    One ground destination plus two or three aerial nodes (at most one
    satellite), one to three slots, one to three tasks of one or two VNFs.
    Capacities are drawn small so that compute, storage and link limits all
    bind in some instances.
    """
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, max_slots + 1))
    n_uav = int(rng.integers(1, 3))
    has_sat = bool(rng.integers(0, 2)) or n_uav == 1
    t = float(rng.choice([2.0, 3.0, 5.0]))
    nodes = [NodeSpec("gs", GROUND, tuple((float(rng.uniform(-300, 300)), 0.0, 0.0) for _ in range(1)) * T)]
    for i in range(1, n_uav + 1):
        start = np.array([rng.uniform(-600, 600), rng.uniform(-200, 200), 200.0])
        pos = []
        for tau in range(T):
            pos.append(tuple(float(c) for c in start + np.array([20.0 * tau * (i - 1.5), 0.0, 0.0])))
        nodes.append(NodeSpec(f"u{i}", UAV, tuple(pos), compute_capacity=float(rng.integers(1, 6)),
                              storage_capacity=float(rng.choice([0.0, 3.0, 6.0])), energy_budget_j=3000.0,
                              uav_params=DEFAULT_UAV))
    if has_sat:
        nodes.append(NodeSpec("s1", SATELLITE, tuple((75e3 * tau, 0.0, 550e3) for tau in range(T)),
                              compute_capacity=float(rng.integers(0, 6)),
                              storage_capacity=float(rng.choice([0.0, 4.0, 10.0])), energy_budget_j=1e5,
                              sat_params=DEFAULT_SAT))
    tasks = []
    for k in range(1, int(rng.integers(1, max_tasks + 1)) + 1):
        size = float(rng.choice([10.0, 20.0, 30.0, 40.0]))
        n_vnf = int(rng.integers(1, 3))
        demands = [int(rng.integers(1, 4)) for _ in range(n_vnf)]
        pos = (float(rng.uniform(-700, 700)), float(rng.uniform(-200, 200)), 0.0)
        tasks.append(_task(f"k{k}", pos, size, demands, arrival=int(rng.integers(1, T + 1))))
    return Scenario(
        name=f"tiny-{seed}",
        nodes=tuple(nodes),
        tasks=tuple(tasks),
        slot_count=T,
        slot_length=t,
        channel=DEFAULT_CHANNEL,
        rng_seed=int(seed),
        connectivity=ConnectivityRule(g2u_range_m=700.0, u2u_range_m=900.0, s2g_range_m=2.5e6),
    )
