"""Compare the numba kernels against the interpreted fallback.

Each mode runs in its own interpreter (the switch is read at import time):

    python3 benchmarks/bench_kernels.py            # both modes, summary table
    python3 benchmarks/bench_kernels.py --worker   # one mode, JSON to stdout

Timed: all-pairs Dijkstra on the bundled default scenario graph, and a full MG-RTEG
run (whose routing calls the same kernel).  Results from the two modes must
agree exactly; the script exits 1 if they do not.
"""

import argparse
import json
import os
import subprocess
import sys
import time


def worker(repeats):
    import numpy as np

    from sagin_sfc import kernels
    from sagin_sfc.fixtures import paper_default
    from sagin_sfc.matchgame import run
    from sagin_sfc.report import reports_to_csv
    from sagin_sfc.rteg import LATENCY, build_rteg

    s = paper_default(seed=0)
    g = build_rteg(s)
    w = LATENCY.weights(g, 30.0)
    ok_e = np.ones(g.n_links, dtype=bool)
    ok_v = np.ones(g.n_vertices, dtype=bool)

    def all_pairs():
        acc = 0.0
        for v in range(g.n_vertices):
            d, _ = kernels.dijkstra_csr(g.indptr, g.adj_links, g.link_to, w, ok_e, ok_v,
                                        np.array([v], dtype=np.int64), np.zeros(1))
            acc += float(np.nansum(np.where(np.isfinite(d), d, 0.0)))
        return acc

    all_pairs()  # warm-up / compile
    t0 = time.perf_counter()
    for _ in range(repeats):
        checksum = all_pairs()
    dij = (time.perf_counter() - t0) / repeats

    run(s, g)
    t0 = time.perf_counter()
    rep = run(s, g)[1]
    sim = time.perf_counter() - t0
    return {"numba": kernels.NUMBA_ENABLED, "dijkstra_all_pairs_s": dij, "mg_rteg_run_s": sim,
            "checksum": checksum, "csv": reports_to_csv([rep])}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--worker", action="store_true")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if args.worker:
        print(json.dumps(worker(args.repeats)))
        return 0
    res = {}
    for mode, flag in (("numba", "0"), ("fallback", "1")):
        env = dict(os.environ, SAGIN_SFC_NO_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--worker", "--repeats", str(args.repeats)], env=env,
                             capture_output=True, text=True, check=True)
        res[mode] = json.loads(out.stdout)
    print(f"{'mode':<10}{'numba':>7}{'dijkstra all-pairs (s)':>25}{'mg-rteg run (s)':>18}")
    for mode, r in res.items():
        print(f"{mode:<10}{str(r['numba']):>7}{r['dijkstra_all_pairs_s']:>25.4f}{r['mg_rteg_run_s']:>18.3f}")
    same = res["numba"]["checksum"] == res["fallback"]["checksum"] and res["numba"]["csv"] == res["fallback"]["csv"]
    print(f"speedup dijkstra x{res['fallback']['dijkstra_all_pairs_s'] / res['numba']['dijkstra_all_pairs_s']:.1f}, "
          f"run x{res['fallback']['mg_rteg_run_s'] / res['numba']['mg_rteg_run_s']:.2f}; identical results: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
