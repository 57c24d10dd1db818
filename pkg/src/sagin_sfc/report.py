"""Simulation reports: per-slot metrics, CSV/JSON serialization, comparison."""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field

CSV_COLUMNS = (
    "algorithm", "seed", "slot", "completed_cumulative", "util_uav", "util_satellite", "util_all",
    "vnf_compute_used", "vnf_compute_required", "q", "violations",
)


@dataclass(frozen=True)
class SlotMetrics:
    slot: int
    completed_cumulative: int
    util_uav: float
    util_satellite: float
    util_all: float
    vnf_compute_used: float
    vnf_compute_required: float


@dataclass
class SimReport:
    algorithm: str
    seed: int
    slots: list = field(default_factory=list)
    q: int = 0
    violations: int = 0
    wall_clock_s: float = 0.0

    def rows(self):
        for m in self.slots:
            yield {"algorithm": self.algorithm, "seed": self.seed, **asdict(m), "q": self.q,
                   "violations": self.violations}

    def mean_utilization(self, column="util_all"):
        if not self.slots:
            return 0.0
        return sum(getattr(m, column) for m in self.slots) / len(self.slots)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        for row in r.rows():
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


_INT_COLS = {"seed", "slot", "completed_cumulative", "q", "violations"}
_FLOAT_COLS = {"util_uav", "util_satellite", "util_all", "vnf_compute_used", "vnf_compute_required"}


def reports_from_csv(text) -> list:
    by_key = {}
    order = []
    for row in csv.DictReader(io.StringIO(text)):
        key = (row["algorithm"], int(row["seed"]))
        if key not in by_key:
            by_key[key] = SimReport(key[0], key[1], q=int(row["q"]), violations=int(row["violations"]))
            order.append(key)
        vals = {c: (int(row[c]) if c in _INT_COLS else float(row[c]))
                for c in CSV_COLUMNS if c in _INT_COLS | _FLOAT_COLS and c not in ("seed", "q", "violations")}
        by_key[key].slots.append(SlotMetrics(**vals))
    return [by_key[k] for k in order]


def reports_to_json(reports, *, timing=True) -> str:
    out = []
    for r in reports:
        d = {"algorithm": r.algorithm, "seed": r.seed, "q": r.q, "violations": r.violations,
             "slots": [asdict(m) for m in r.slots]}
        if timing:
            d["wall_clock_s"] = r.wall_clock_s
        out.append(d)
    return json.dumps(out, indent=1) + "\n"


def reports_from_json(text) -> list:
    out = []
    for d in json.loads(text):
        out.append(SimReport(d["algorithm"], d["seed"], [SlotMetrics(**m) for m in d["slots"]],
                             d["q"], d["violations"], d.get("wall_clock_s", 0.0)))
    return out


class ReportMismatch(ValueError):
    pass


@dataclass
class Comparison:
    slots: list
    mean_completed: dict        # algorithm -> [mean per slot]
    mean_utilization: dict      # algorithm -> horizon-mean utilization (all nodes)
    mean_q: dict
    dominance: dict             # baseline -> fraction of seeds with reference >= baseline at every slot
    strict_final: dict          # baseline -> fraction of seeds with reference > baseline at the final slot
    reference: str

    def table(self) -> str:
        algs = list(self.mean_completed)
        lines = ["slot\t" + "\t".join(f"mean_completed[{a}]" for a in algs)]
        for i, s in enumerate(self.slots):
            lines.append(f"{s}\t" + "\t".join(f"{self.mean_completed[a][i]:.3f}" for a in algs))
        lines.append("algorithm\tmean_q\tmean_utilization")
        for a in algs:
            lines.append(f"{a}\t{self.mean_q[a]:.3f}\t{self.mean_utilization[a]:.4f}")
        for b in self.dominance:
            lines.append(f"{self.reference}>={b} every slot: {self.dominance[b]:.3f} of seeds; "
                         f"{self.reference}>{b} at final slot: {self.strict_final[b]:.3f} of seeds")
        return "\n".join(lines) + "\n"


def compare(reports_by_algorithm: dict, reference="mg-rteg") -> Comparison:
    """Per-slot mean completed counts and seed-wise dominance of ``reference``.

    Every algorithm must cover the same seeds and the same slots.
    """
    if reference not in reports_by_algorithm:
        raise ReportMismatch(f"reference algorithm {reference!r} missing")
    seeds = None
    slots = None
    per = {}
    for alg, reports in reports_by_algorithm.items():
        by_seed = {r.seed: r for r in reports}
        if seeds is None:
            seeds = sorted(by_seed)
        elif sorted(by_seed) != seeds:
            raise ReportMismatch(f"{alg} covers seeds {sorted(by_seed)}, expected {seeds}")
        for r in reports:
            s = [m.slot for m in r.slots]
            if slots is None:
                slots = s
            elif s != slots:
                raise ReportMismatch(f"{alg} seed {r.seed} has slots {s}, expected {slots}")
        per[alg] = by_seed
    n = len(seeds)
    mean_completed = {a: [sum(per[a][sd].slots[i].completed_cumulative for sd in seeds) / n
                          for i in range(len(slots))] for a in per}
    mean_util = {a: sum(per[a][sd].mean_utilization() for sd in seeds) / n for a in per}
    mean_q = {a: sum(per[a][sd].q for sd in seeds) / n for a in per}
    dom, strict = {}, {}
    ref = per[reference]
    for b in per:
        if b == reference:
            continue
        ok = 0
        win = 0
        for sd in seeds:
            rc = [m.completed_cumulative for m in ref[sd].slots]
            bc = [m.completed_cumulative for m in per[b][sd].slots]
            ok += all(x >= y for x, y in zip(rc, bc))
            win += bool(rc) and rc[-1] > bc[-1]
        dom[b] = ok / n
        strict[b] = win / n
    return Comparison(slots, mean_completed, mean_util, mean_q, dom, strict, reference)
