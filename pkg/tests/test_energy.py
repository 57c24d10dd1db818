import math

import pytest
from hypothesis import given, strategies as st

from sagin_sfc import energy as en
from sagin_sfc.deploy import Deployment
from sagin_sfc.fixtures import DEFAULT_UAV, paper_default, tiny_oracle
from sagin_sfc.rteg import build_rteg
from sagin_sfc.scenario import Environment

# 50-digit mpmath evaluations
REF_DELTA = 11.058115837536023224
REF_P_HOV = 78.192686958680804876
REF_P_MOV_5 = 17.951828260329798781
REF_PATH_5 = 961.44515219010603657

ENV = Environment()


def rel(a, b):
    return abs(a - b) / abs(b)


def test_hover_spot_values():
    assert rel(en.hover_delta(ENV.gravity_m_s2, ENV.air_density_kg_m3), REF_DELTA) < 1e-9
    assert rel(en.uav_hover_power(ENV, DEFAULT_UAV), REF_P_HOV) < 1e-9


def test_move_power_identities():
    ph = en.uav_hover_power(ENV, DEFAULT_UAV)
    assert en.uav_move_power(0.0, DEFAULT_UAV, ph) == 0.0
    assert en.uav_move_power(DEFAULT_UAV.v_max_m_s, DEFAULT_UAV, ph) == pytest.approx(DEFAULT_UAV.p_max_w - ph, rel=1e-12)
    assert rel(en.uav_move_power(5.0, DEFAULT_UAV, ph), REF_P_MOV_5) < 1e-9
    with pytest.raises(en.EnergyDomainError):
        en.uav_move_power(DEFAULT_UAV.v_max_m_s * 1.01, DEFAULT_UAV, ph)


def test_path_energy_spot_and_stationary():
    ph = en.uav_hover_power(ENV, DEFAULT_UAV)
    pm = en.uav_move_power(5.0, DEFAULT_UAV, ph)
    e = en.uav_path_energy((0, 0, 200.0), (30.0, 40.0, 200.0), 5.0, 10.0, p_move=pm, p_hover=ph)
    assert rel(e, REF_PATH_5) < 1e-9
    assert en.uav_path_energy((1, 2, 3), (1, 2, 3), 0.0, 10.0, p_move=0.0, p_hover=ph) == pytest.approx(ph * 10.0)
    with pytest.raises(en.EnergyDomainError):
        en.uav_path_energy((0, 0, 0), (1, 0, 0), 0.0, 10.0, p_move=1.0, p_hover=ph)


def test_hover_domain_error():
    from dataclasses import replace
    with pytest.raises(en.EnergyDomainError):
        en.uav_hover_power(ENV, replace(DEFAULT_UAV, propeller_radius_m=0.0))


def test_empty_deployment_spends_nothing():
    s = tiny_oracle()
    g = build_rteg(s)
    led = en.energy_ledger(s, g, Deployment())
    for v, row in led.entries.items():
        assert row.comm_rx == row.comm_tx == row.compute == 0.0


def test_comm_energy_matches_hand_sum():
    s = tiny_oracle()
    g = build_rteg(s)
    e = next(i for i in range(g.n_links) if g.class_of(i) == "U2S" and g.is_uav[g.link_from[i]])
    a, b = g.link_key(e)
    task = s.tasks[0]
    z = {(task.id, (a, b))}
    secs = task.comm_demand * 1e6 / g.rate[e]
    uav = s.node(a[0]).uav_params
    sat = s.node(b[0]).sat_params
    assert en.comm_energy(a[0], a[1], z, g, s) == pytest.approx(uav.tx_power_w * secs, rel=1e-12)
    assert en.comm_energy(b[0], b[1], z, g, s) == pytest.approx(sat.rx_power_us_w * secs, rel=1e-12)


def test_compute_energy():
    s = tiny_oracle()
    t = s.tasks[0]
    x = {(t.id, 1, ("u1", 1))}
    assert en.compute_energy("u1", 1, x, s) == pytest.approx(t.vnfs[0].compute_demand * ENV.compute_energy_uav_j_per_unit)
    assert en.compute_energy("u1", 2, x, s) == 0.0


def test_standing_energy_paper_default():
    s = paper_default(task_count=1)
    ph = en.uav_hover_power(s.environment, DEFAULT_UAV)
    u = s.uavs[0]
    assert en.standing_energy(s, u, s.slot_count) == pytest.approx(ph * s.slot_length, rel=1e-12)
    step = math.dist(u.position(1), u.position(2))
    v = step / s.slot_length
    pm = en.uav_move_power(v, DEFAULT_UAV, ph)
    assert en.standing_energy(s, u, 1) == pytest.approx(pm * s.slot_length + ph * s.slot_length, rel=1e-12)
    sat = s.satellites[0]
    assert en.standing_energy(s, sat, 1) == sat.sat_params.op_energy_per_slot_j


@given(st.floats(0.0, 20.0), st.floats(0.0, 200.0))
def test_path_energy_nonnegative(v, dist):
    ph = en.uav_hover_power(ENV, DEFAULT_UAV)
    pm = en.uav_move_power(v, DEFAULT_UAV, ph)
    if dist > 0 and v == 0:
        return
    e = en.uav_path_energy((0, 0, 0), (dist, 0, 0), v, 10.0, p_move=pm, p_hover=ph)
    assert e >= ph * 10.0 - 1e-9
