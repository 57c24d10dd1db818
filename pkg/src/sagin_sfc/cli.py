"""Command-line runner.

    sagin-sfc --scenario paper_default --algorithm mg-rteg --seeds 20 -o out.csv
    sagin-sfc compare out-mg.csv out-aaso.csv out-fcfs.csv
    sagin-sfc dump-graph --scenario tiny_oracle

Exit codes: 0 success, 1 unexpected error, 2 bad flags, 3 scenario load or
validation failure, 4 feasibility violation, 5 oracle budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import report as rp
from .baselines import AASO, FCFS
from .deploy import check_feasibility, format_violations, objective_q
from .matchgame import MG_RTEG, run_with_state
from .oracle import BudgetExceeded, OracleBudget, solve_exact
from .rteg import build_rteg, dump_edges
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_SCENARIO, EXIT_VIOLATION, EXIT_BUDGET = 0, 1, 2, 3, 4, 5

POLICIES = {"mg-rteg": MG_RTEG, "aaso": AASO, "fcfs": FCFS}
ALGORITHMS = tuple(POLICIES) + ("oracle",)


class BudgetError(RuntimeError):
    pass


class ViolationError(RuntimeError):
    pass


def _oracle_report(scenario, graph, seed):
    res = solve_exact(scenario, graph, OracleBudget())
    if isinstance(res, BudgetExceeded):
        raise BudgetError(f"oracle budget exceeded: {res.reason}")
    violations = check_feasibility(scenario, graph, res.witness)
    used = sum(t.vnfs[f - 1].compute_demand for t in scenario.tasks for k, f, _ in res.witness.x if k == t.id)
    required = sum(v.compute_demand for t in scenario.tasks for v in t.vnfs)
    cap = sum(n.compute_capacity for n in scenario.nodes) * scenario.slot_count
    util = used / cap if cap > 0 else 0.0
    row = rp.SlotMetrics(scenario.slot_count, res.optimal_q, util, util, util, float(used), float(required))
    # per-class utilization is not meaningful for a whole-horizon optimum; all three carry the aggregate
    return rp.SimReport("oracle", seed, [row], objective_q(res.witness), len(violations)), [], violations


def run_one(scenario, algorithm, seed, want_trace=False):
    """Returns ``(SimReport, trace lines, violations)`` for one seed."""
    sc = scenario.with_seed(seed)
    graph = build_rteg(sc)
    if algorithm == "oracle":
        return _oracle_report(sc, graph, seed)
    trace = [] if want_trace else None
    _, rep, state = run_with_state(sc, graph, POLICIES[algorithm], trace=trace)
    return rep, trace or [], state.violations


def _job(args):
    scenario, algorithm, seed, want_trace = args
    return run_one(scenario, algorithm, seed, want_trace)


def _run_parser():
    p = argparse.ArgumentParser(prog="sagin-sfc", description="Run SFC deployment over a scenario.")
    p.add_argument("--scenario", required=True, help="scenario JSON path or bundled name")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="mg-rteg")
    p.add_argument("--seed", type=int, default=None, help="first seed (default: the scenario's rng_seed)")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to sweep")
    p.add_argument("--output", "-o", default="-", help="report path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--trace", default=None, help="write the matching trace to this path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for seed sweeps")
    return p


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_run(argv):
    args = _run_parser().parse_args(argv)
    if args.seeds < 1 or args.jobs < 1:
        print("sagin-sfc: --seeds and --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.trace and args.algorithm == "oracle":
        print("sagin-sfc: --trace is not available for the oracle", file=sys.stderr)
        return EXIT_USAGE
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"sagin-sfc: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    first = scenario.rng_seed if args.seed is None else args.seed
    jobs = [(scenario, args.algorithm, s, bool(args.trace)) for s in range(first, first + args.seeds)]
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                results = list(ex.map(_job, jobs))
        else:
            results = [_job(j) for j in jobs]
    except BudgetError as exc:
        print(f"sagin-sfc: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    reports = [r for r, _, _ in results]
    text = rp.reports_to_csv(reports) if args.format == "csv" else rp.reports_to_json(reports)
    _write(args.output, text)
    if args.trace:
        lines = []
        for rep, tr, _ in results:
            lines.append(f"# algorithm={rep.algorithm} seed={rep.seed}")
            lines.extend(tr)
        Path(args.trace).write_text("\n".join(lines) + "\n")
    bad = [(rep, v) for rep, _, v in results if v]
    if bad:
        for rep, v in bad:
            print(f"sagin-sfc: {len(v)} feasibility violations for seed {rep.seed}:", file=sys.stderr)
            sys.stderr.write(format_violations(v))
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_compare(argv):
    p = argparse.ArgumentParser(prog="sagin-sfc compare", description="Compare report files.")
    p.add_argument("reports", nargs="+", help="CSV or JSON report files")
    p.add_argument("--reference", default="mg-rteg")
    p.add_argument("--output", "-o", default="-")
    args = p.parse_args(argv)
    by_alg = {}
    for f in args.reports:
        text = Path(f).read_text()
        reps = rp.reports_from_json(text) if text.lstrip().startswith("[") else rp.reports_from_csv(text)
        for r in reps:
            by_alg.setdefault(r.algorithm, []).append(r)
    try:
        table = rp.compare(by_alg, args.reference).table()
    except rp.ReportMismatch as exc:
        print(f"sagin-sfc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write(args.output, table)
    return EXIT_OK


def cmd_dump_graph(argv):
    p = argparse.ArgumentParser(prog="sagin-sfc dump-graph", description="Print the time-expanded graph.")
    p.add_argument("--scenario", required=True)
    p.add_argument("--output", "-o", default="-")
    args = p.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"sagin-sfc: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    _write(args.output, dump_edges(build_rteg(scenario)))
    return EXIT_OK


COMMANDS = {"compare": cmd_compare, "dump-graph": cmd_dump_graph}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    cmd = COMMANDS.get(argv[0]) if argv else None
    try:
        return cmd(argv[1:]) if cmd else cmd_run(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags and 0 on --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"sagin-sfc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
