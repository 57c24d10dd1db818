"""Comparison policies run on the MG-RTEG engine.

Only the acceptance policy differs from MG-RTEG, so differences in the
objective isolate the policy:

* AASO -- receivers rank proposers by ascending data size;
* FCFS -- proposers are served strictly in arrival order and an acceptance
  is never revoked.
"""

from __future__ import annotations

import numpy as np

from .matchgame import Policy, run

AASO = Policy("aaso", node_key=lambda t: (t.data_size, t.id))

FCFS = Policy(
    "fcfs",
    node_key=lambda t: (t.arrival_slot, t.id),
    allow_bump=False,
    proposer_key=lambda t: (t.arrival_slot, t.id),
)


def random_order_policy(task_ids, seed):
    """Receivers rank proposers by a seeded random permutation (test utility)."""
    ids = sorted(task_ids)
    perm = np.random.default_rng(seed).permutation(len(ids))
    rank = {k: int(r) for k, r in zip(ids, perm)}
    return Policy(f"random-{seed}", node_key=lambda t: (rank[t.id], t.id))


def run_aaso(scenario, graph=None, **kw):
    return run(scenario, graph, AASO, **kw)


def run_fcfs(scenario, graph=None, **kw):
    return run(scenario, graph, FCFS, **kw)
