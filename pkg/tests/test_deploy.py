from collections import defaultdict
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sagin_sfc.deploy import (Deployment, DeploymentReferenceError, check_feasibility, completion_problems,
                              format_violations, mark_completed, objective_q, walk_chain)
from sagin_sfc.fixtures import random_tiny, tiny_oracle
from sagin_sfc.oracle import solve_exact
from sagin_sfc.rteg import build_rteg


@pytest.fixture(scope="module")
def base():
    s = tiny_oracle()
    g = build_rteg(s)
    res = solve_exact(s, g)
    assert res.optimal_q == 3
    return s, g, res.witness


def ids(violations):
    return {v.constraint_id for v in violations}


def test_witness_is_feasible(base):
    s, g, d = base
    assert check_feasibility(s, g, d) == []
    assert objective_q(d) == 3
    for t in s.tasks:
        assert mark_completed(d, t, s)
        assert walk_chain(d, t.id)[-1][0] == t.destination


def test_empty_deployment_is_feasible(base):
    s, g, _ = base
    assert check_feasibility(s, g, Deployment()) == []
    assert objective_q(Deployment()) == 0


def test_c15_vnf_on_two_vertices(base):
    s, g, d = base
    d = d.copy()
    k, f, v = sorted(d.x)[0]
    other = next(y for kk, y in sorted(d.y) if kk == k and y != v and y[0] != "gs")
    d.x.add((k, f, other))
    assert "C15" in ids(check_feasibility(s, g, d))


def test_c15_missing_vnf_on_completed(base):
    s, g, d = base
    d = d.copy()
    d.x.remove(sorted(d.x)[0])
    assert "C15" in ids(check_feasibility(s, g, d))


def test_c16_placement_off_chain(base):
    s, g, d = base
    d = d.copy()
    k, f, v = sorted(d.x)[0]
    d.x.remove((k, f, v))
    visited = {y for kk, y in d.y if kk == k}
    off = next(key for key in (g.key(i) for i in range(g.n_vertices))
               if key not in visited and not g.is_ground[g.vindex[key]])
    d.x.add((k, f, off))
    assert "C16" in ids(check_feasibility(s, g, d))


def test_c17_branching(base):
    s, g, d = base
    d = d.copy()
    k, (a, b) = sorted(d.z)[0]
    extra = next(g.link_key(e) for e in g.out_links(g.vindex[a]) if g.link_key(e)[1] != b)
    d.z.add((k, extra))
    d.y.add((k, extra[1]))
    assert "C17" in ids(check_feasibility(s, g, d))


def test_c18_storage_overload():
    s = tiny_oracle()
    nodes = tuple(replace(n, storage_capacity=1.0) if n.id == "u1" else n for n in s.nodes)
    s2 = replace(s, nodes=nodes)
    g = build_rteg(s2)
    t = s2.task("k1")
    d = Deployment(attach={"k1": ("u1", 1)}, y={("k1", ("u1", 1)), ("k1", ("u1", 2))},
                   z={("k1", (("u1", 1), ("u1", 2)))}, completed={"k1": False})
    assert t.storage_demand > 1.0
    assert ids(check_feasibility(s2, g, d)) == {"C18"}


def test_c19_compute_overload(base):
    s, g, d = base
    d = d.copy()
    # put every VNF on one UAV vertex that some chain visits
    k, f, v = sorted(d.x)[0]
    assert "C19" not in ids(check_feasibility(s, g, d))
    s_small = replace(s, nodes=tuple(replace(n, compute_capacity=0.5) if n.id == v[0] else n for n in s.nodes))
    assert "C19" in ids(check_feasibility(s_small, build_rteg(s_small), d))


def test_c21_energy(base):
    s, g, d = base
    v = sorted(d.x)[0][2]
    s_poor = replace(s, nodes=tuple(replace(n, energy_budget_j=1.0) if n.id == v[0] else n for n in s.nodes))
    assert "C21" in ids(check_feasibility(s_poor, build_rteg(s_poor), d))


def test_c22_link_overload(base):
    s, g, d = base
    heavy = tuple(replace(t, comm_demand=1e6) for t in s.tasks)
    s2 = replace(s, tasks=heavy)
    out = ids(check_feasibility(s2, build_rteg(s2), d))
    assert "C22" in out


def test_c23_no_attachment(base):
    s, g, d = base
    d = d.copy()
    k = sorted(d.attach)[0]
    del d.attach[k]
    assert "C23" in ids(check_feasibility(s, g, d))


def test_c23_bad_attachment_slot(base):
    s, g, d = base
    d = d.copy()
    k = "k1"
    d.attach[k] = ("u1", 2)
    d.y.add((k, ("u1", 2)))
    assert "C23" in ids(check_feasibility(s, g, d))


def test_c24_completed_off_destination(base):
    s, g, d = base
    dk = d.for_task("k1")
    last = max(dk.z, key=lambda z: z[1][1][0] == "gs")
    dk.z.remove(last)
    dk.completed["k1"] = True
    out = check_feasibility(s, g, dk)
    assert "C24" in ids(out)


def test_c25_flow_from_nothing(base):
    s, g, _ = base
    e = next(e for e in range(g.n_links) if g.class_of(e) == "U2U")
    a, b = g.link_key(e)
    d = Deployment(attach={"k3": ("u2", 1)}, y={("k3", ("u2", 1)), ("k3", a), ("k3", b)},
                   z={("k3", (a, b))} if a != ("u2", 1) else set(), completed={"k3": False})
    if a == ("u2", 1):
        pytest.skip("link starts at the attach vertex")
    assert "C25" in ids(check_feasibility(s, g, d))


def test_ground_is_sink_only(base):
    s, g, d = base
    e = next(e for e in range(g.n_links) if g.is_ground[g.link_from[e]])
    a, b = g.link_key(e)
    d2 = d.copy()
    d2.z.add(("k1", (a, b)))
    d2.y.add(("k1", b))
    assert "C17" in ids(check_feasibility(s, g, d2))


def test_dangling_references(base):
    s, g, _ = base
    with pytest.raises(DeploymentReferenceError):
        check_feasibility(s, g, Deployment(x={("nope", 1, ("u1", 1))}))
    with pytest.raises(DeploymentReferenceError):
        check_feasibility(s, g, Deployment(y={("k1", ("u9", 1))}))
    with pytest.raises(DeploymentReferenceError):
        check_feasibility(s, g, Deployment(z={("k1", (("u1", 1), ("u1", 1)))}))


def test_violation_lines_are_tab_separated(base):
    s, g, d = base
    d = d.copy()
    d.x.remove(sorted(d.x)[0])
    text = format_violations(check_feasibility(s, g, d))
    assert text and all(len(l.split("\t")) == 3 for l in text.splitlines())


def test_completion_problems_on_witness(base):
    s, g, d = base
    for t in s.tasks:
        assert completion_problems(d, t, s) == []


# -- brute-force re-evaluation of the capacity constraints --------------------

def _loads(s, g, d):
    tasks = {t.id: t for t in s.tasks}
    link, comp = defaultdict(float), defaultdict(float)
    for k, key in d.z:
        e = g.find_link(*key)
        link[e] += tasks[k].storage_demand if g.is_storage[e] else tasks[k].comm_demand
    for k, f, v in d.x:
        comp[v] += tasks[k].vnfs[f - 1].compute_demand
    return link, comp


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 2**32 - 1))
def test_capacity_flags_match_brute_force(seed, pick):
    s = random_tiny(seed)
    g = build_rteg(s)
    rng = np.random.default_rng(pick)
    d = Deployment()
    # random single-hop partial chains: attach, one link, maybe a placement
    for t in s.tasks:
        d.completed[t.id] = False
        att = list(s.uavs)
        u = att[int(rng.integers(len(att)))]
        a = (u.id, t.arrival_slot)
        d.attach[t.id] = a
        d.y.add((t.id, a))
        outs = [int(e) for e in g.out_links(g.vindex[a])]
        if outs and rng.random() < 0.8:
            e = outs[int(rng.integers(len(outs)))]
            b = g.link_key(e)[1]
            d.z.add((t.id, (a, b)))
            d.y.add((t.id, b))
        if rng.random() < 0.8:
            d.x.add((t.id, 1, a))
    got = check_feasibility(s, g, d)
    link, comp = _loads(s, g, d)
    want18 = {g.link_key(e) for e, l in link.items() if g.is_storage[e] and l > g.capacity[e] + 1e-9}
    want22 = {g.link_key(e) for e, l in link.items() if not g.is_storage[e] and l > g.capacity[e] + 1e-9}
    want19 = {v for v, c in comp.items() if c > s.node(v[0]).compute_capacity + 1e-9}
    assert {v.subject for v in got if v.constraint_id == "C18"} == want18
    assert {v.subject for v in got if v.constraint_id == "C22"} == want22
    assert {v.subject for v in got if v.constraint_id == "C19"} == want19
