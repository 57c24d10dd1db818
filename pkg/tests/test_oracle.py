import itertools
from dataclasses import replace

import pytest

from sagin_sfc.deploy import check_feasibility, objective_q
from sagin_sfc.fixtures import DEFAULT_CHANNEL, DEFAULT_UAV, _task, random_tiny, tiny_oracle
from sagin_sfc.matchgame import MG_RTEG, run
from sagin_sfc.oracle import (BudgetExceeded, OracleBudget, OracleResult, _capacities, _Counter, _witness,
                              solve_exact, task_options)
from sagin_sfc.rteg import build_rteg
from sagin_sfc.scenario import GROUND, UAV, ConnectivityRule, NodeSpec, Scenario


def _single(tasks, compute, T=1):
    u = NodeSpec("u1", UAV, ((0.0, 0.0, 200.0),) * T, compute_capacity=compute, storage_capacity=20.0,
                 energy_budget_j=3000.0, uav_params=DEFAULT_UAV)
    g = NodeSpec("gs", GROUND, ((200.0, 0.0, 0.0),) * T)
    return Scenario("single", (g, u), tuple(tasks), T, 10.0, DEFAULT_CHANNEL,
                    connectivity=ConnectivityRule(g2u_range_m=600.0))


def test_infeasible_placement():
    r = solve_exact(_single([_task("a", (50.0, 0, 0), 30.0, [3])], compute=2.0))
    assert isinstance(r, OracleResult) and r.optimal_q == 0


def test_forced_single():
    s = _single([_task("a", (50.0, 0, 0), 30.0, [3])], compute=5.0)
    r = solve_exact(s)
    assert r.optimal_q == 1
    assert check_feasibility(s, build_rteg(s), r.witness) == []


def test_two_tasks_one_slot_one_vnf_capacity():
    # frozen from the brute-force product below
    s = _single([_task("a", (50.0, 0, 0), 30.0, [3]), _task("b", (-50.0, 0, 0), 30.0, [3])], compute=3.0)
    assert solve_exact(s).optimal_q == 1
    assert _brute(s) == 1


def test_tiny_oracle_fixture():
    s = tiny_oracle()
    r = solve_exact(s)
    assert r.optimal_q == 3
    assert _brute(s) == 3
    assert check_feasibility(s, build_rteg(s), r.witness) == []


def test_budget_exceeded():
    s = random_tiny(3)
    r = solve_exact(s, budget=OracleBudget(max_enumerations=5))
    assert isinstance(r, BudgetExceeded) and not r
    r = solve_exact(s, budget=OracleBudget(max_tasks=0))
    assert isinstance(r, BudgetExceeded)


def _brute(s):
    """Product over per-task options (plus "skip"), every combination
    re-checked through the feasibility checker."""
    g = build_rteg(s)
    cap = _capacities(s, g)
    counter = _Counter(OracleBudget())
    tasks = sorted(s.tasks, key=lambda t: t.id)
    opts = [[None] + task_options(s, g, t, cap, counter) for t in tasks]
    best = 0
    for combo in itertools.product(*opts):
        chosen = {t.id: o for t, o in zip(tasks, combo) if o is not None}
        if len(chosen) <= best:
            continue
        if not check_feasibility(s, g, _witness(s, g, chosen)):
            best = len(chosen)
    return best


@pytest.mark.parametrize("seed", range(0, 40))
def test_matches_brute_force(seed):
    s = random_tiny(seed)
    g = build_rteg(s)
    r = solve_exact(s, g)
    assert r.optimal_q == _brute(s)
    assert check_feasibility(s, g, r.witness) == []
    assert objective_q(r.witness) == r.optimal_q


@pytest.mark.parametrize("seed", range(0, 30))
def test_label_invariance(seed):
    s = random_tiny(seed)
    renamed = s.with_tasks(replace(t, id=f"z{len(s.tasks) - i}", source=f"src-z{len(s.tasks) - i}")
                           for i, t in enumerate(s.tasks))
    assert solve_exact(s).optimal_q == solve_exact(renamed).optimal_q


def test_heuristic_never_beats_oracle_on_fixture():
    s = tiny_oracle()
    assert run(s, None, MG_RTEG)[1].q <= solve_exact(s).optimal_q


def test_witness_deterministic():
    s = random_tiny(17)
    assert solve_exact(s).witness == solve_exact(s).witness
