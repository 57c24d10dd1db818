from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sagin_sfc.baselines import AASO, FCFS
from sagin_sfc.fixtures import DEFAULT_CHANNEL, DEFAULT_UAV, _task, paper_default, random_tiny, tiny_oracle
from sagin_sfc.matchgame import (MG_RTEG, MatchState, build_preferences, run, run_with_state)
from sagin_sfc.report import reports_to_csv
from sagin_sfc.rteg import build_rteg
from sagin_sfc.scenario import GROUND, UAV, ConnectivityRule, NodeSpec, Scenario, load_scenario

FIX = Path(__file__).parent / "fixtures"


def _single_uav(tasks, compute=3.0, T=2):
    u = NodeSpec("u1", UAV, ((0.0, 0.0, 200.0),) * T, compute_capacity=compute, storage_capacity=20.0,
                 energy_budget_j=3000.0, uav_params=DEFAULT_UAV)
    g = NodeSpec("gs", GROUND, ((200.0, 0.0, 0.0),) * T)
    return Scenario("single", (g, u), tuple(tasks), T, 10.0, DEFAULT_CHANNEL,
                    connectivity=ConnectivityRule(g2u_range_m=600.0))


def test_two_tasks_contend_for_one_vnf_slot():
    s = _single_uav([_task("a", (50.0, 0.0, 0.0), 25.0, [3]), _task("b", (-50.0, 0.0, 0.0), 30.0, [3])])
    trace = []
    dep, rep, st_ = run_with_state(s, trace=trace)
    assert rep.violations == 0
    assert [m.completed_cumulative for m in rep.slots] == [1, 2]
    assert st_.progress["b"].completed_slot == 1
    assert st_.progress["a"].completed_slot == 2
    assert "slot=1 store task=a node=u1 vnfs_placed=0" in trace


def test_zero_tasks():
    s = _single_uav([])
    g = build_rteg(s)
    dep, rep, st_ = run_with_state(s, g)
    assert rep.q == 0
    fresh = g.fresh_residuals()
    assert np.array_equal(st_.residual.compute, fresh.compute)
    assert np.array_equal(st_.residual.link, fresh.link)


def test_preference_lists_paper_default():
    s = paper_default(task_count=40)
    g = build_rteg(s)
    prefs = build_preferences(s, g, 1)
    sizes = {t.id: t.data_size for t in s.tasks}
    for v, ts in prefs.node_lists.items():
        ds = [sizes[k] for k in ts]
        assert ds == sorted(ds, reverse=True)
    for k, lst in prefs.task_lists.items():
        r = prefs.routes[k]
        # receivers appear in path order
        pos = [r.path.vertices.index(v) for v in lst]
        assert pos == sorted(pos)
        if r.branch == "uav":
            assert all(g.is_uav[v] for v in lst)
        else:
            assert all(g.is_sat[v] for v in lst)


def test_golden_three_task_trace():
    s = load_scenario(FIX / "golden_three.json")
    trace = []
    dep, rep = run(s, trace=trace)
    expected = (FIX / "golden_three.trace").read_text()
    assert "\n".join(trace) + "\n" == expected
    assert rep.q == 3 and rep.violations == 0


def _check_matching(s):
    for pol in (MG_RTEG, AASO, FCFS):
        dep, rep, st_ = run_with_state(s, None, pol, trace=[])
        assert rep.violations == 0
        for slot, pairs in st_.blocking.items():
            assert pairs == [], (pol.name, slot, pairs)
        for slot, n in st_.proposals.items():
            assert n <= st_.proposal_bound[slot]
        c = [m.completed_cumulative for m in rep.slots]
        assert c == sorted(c)
        for m in rep.slots:
            assert 0.0 <= m.util_uav <= 1.0 and 0.0 <= m.util_satellite <= 1.0 and 0.0 <= m.util_all <= 1.0


@pytest.mark.parametrize("name", ["tiny_oracle", "paper_default"])
def test_stability_and_bound_bundled(name):
    _check_matching(load_scenario(name))


def test_stability_golden():
    _check_matching(load_scenario(FIX / "golden_three.json"))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000))
def test_stability_random(seed):
    _check_matching(random_tiny(seed))


def test_determinism():
    s = paper_default(seed=3)
    a = reports_to_csv([run(s)[1]])
    b = reports_to_csv([run(paper_default(seed=3))[1]])
    assert a == b
    t1, t2 = [], []
    run(s, trace=t1)
    run(s, trace=t2)
    assert t1 == t2


def test_completed_counts_match_deployment():
    s = paper_default(seed=1)
    dep, rep = run(s)
    assert rep.slots[-1].completed_cumulative == rep.q == sum(dep.completed.values())


def test_bumped_task_loses_later_segments():
    # k1's two VNFs split over u1 then u2; k2 (larger) bumps it at u1, which
    # also releases the later u2 segment
    base = load_scenario(FIX / "golden_three.json")
    nodes = tuple(n if n.node_class == GROUND else NodeSpec(n.id, n.node_class, n.positions, 2.0,
                                                            n.storage_capacity, n.energy_budget_j, n.uav_params)
                  for n in base.nodes)
    tasks = (_task("k1", (-300.0, 50.0, 0.0), 10.0, [2, 2]), _task("k2", (-320.0, -40.0, 0.0), 30.0, [2]))
    s = Scenario("bump", nodes, tasks, 2, 10.0, DEFAULT_CHANNEL, connectivity=base.connectivity)
    trace = []
    dep, rep, st_ = run_with_state(s, trace=trace)
    slot1 = [l for l in trace if l.startswith("slot=1 ")]
    assert slot1 == [
        "slot=1 propose task=k1 node=u1 vnf=1",
        "slot=1 accept task=k1 node=u1 vnfs=1-1",
        "slot=1 propose task=k1 node=u2 vnf=2",
        "slot=1 accept task=k1 node=u2 vnfs=2-2",
        "slot=1 propose task=k2 node=u1 vnf=1",
        "slot=1 bump task=k1 node=u1 by=k2",
        "slot=1 accept task=k2 node=u1 vnfs=1-1",
        "slot=1 complete task=k2 node=gs",
        "slot=1 store task=k1 node=u1 vnfs_placed=0",
    ]
    g = st_.graph
    assert g.vertices[g.vertex("u2", 1)].node_id == "u2"
    assert st_.residual.compute[g.vertex("u2", 1)] == 2.0
    assert rep.violations == 0
