"""Run summaries, paired gram/ndn sweeps and their CSV outputs."""
from __future__ import annotations

import csv
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from scipy import stats

from .config import ScenarioConfig
from .engine import RunReport, build_scenario, check_report, format_ms, run


class InsufficientDataError(ValueError):
    pass


class SweepError(RuntimeError):
    def __init__(self, value, seed: int, cause: BaseException):
        super().__init__(f"run failed at value={value} seed={seed}: {cause}")
        self.value = value
        self.seed = seed


SWEEP_PARAMETERS = {
    "rate": "rate",
    "group_count": "groups",
    "group_size": "group_size",
    "link_delay": "link_delay_ms",
}


@dataclass(frozen=True)
class Summary:
    protocol: str
    topology_seed: int
    avg_table: float
    max_table: int
    table_samples: int
    mean_delay_ms: float
    median_delay_ms: float
    p95_delay_ms: float
    deliveries: int
    failed_consumers: int
    unanswered: int
    invariant_violations: int = 0
    messages: Dict[str, int] = field(default_factory=dict)


def percentile(sorted_values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile of an already sorted sequence."""
    if not sorted_values:
        raise InsufficientDataError("no values")
    rank = max(1, math.ceil(q / 100 * len(sorted_values)))
    return sorted_values[rank - 1]


def summarize(report: RunReport) -> Summary:
    post = [entries for t, _, entries in report.table_samples if t >= report.warmup_us]
    if not post:
        raise InsufficientDataError("no table samples after warm-up")
    if not report.delays:
        raise InsufficientDataError("no deliveries after warm-up")
    delays = sorted(d for *_, d in report.delays)
    return Summary(
        protocol=report.protocol,
        topology_seed=report.topology_seed,
        avg_table=statistics.fmean(post),
        max_table=max(post),
        table_samples=len(post),
        mean_delay_ms=statistics.fmean(delays) / 1000,
        median_delay_ms=percentile(delays, 50) / 1000,
        p95_delay_ms=percentile(delays, 95) / 1000,
        deliveries=len(delays),
        failed_consumers=report.failed_consumers,
        unanswered=report.unanswered,
        invariant_violations=len(check_report(report)),
        messages=dict(report.counts),
    )


def fmt_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def summary_rows(summary: Summary) -> List[Tuple[str, str]]:
    rows = []
    for f in fields(summary):
        value = getattr(summary, f.name)
        if f.name == "messages":
            rows += [(f"messages_{k}", str(v)) for k, v in sorted(value.items())]
        else:
            rows.append((f.name, fmt_value(value)))
    return rows


def write_report(report: RunReport, outdir: Union[str, Path]) -> Dict[str, Path]:
    """Write tables.csv, delays.csv, summary.csv (and trace.tsv when traced)."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    paths["tables"] = out / "tables.csv"
    with open(paths["tables"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ms", "node", "entries"])
        for t, node, entries in report.table_samples:
            w.writerow([format_ms(t), node, entries])
    paths["delays"] = out / "delays.csv"
    with open(paths["delays"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "consumer", "counter", "delay_ms"])
        for group, consumer, counter, d in report.delays:
            w.writerow([group, consumer, counter, format_ms(d)])
    paths["summary"] = out / "summary.csv"
    with open(paths["summary"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        try:
            w.writerows(summary_rows(summarize(report)))
        except InsufficientDataError as exc:
            w.writerow(["error", str(exc)])
    if report.trace is not None:
        paths["trace"] = out / "trace.tsv"
        paths["trace"].write_text(report.trace_text())
    return paths


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    parameter: str
    values: Tuple[float, ...]
    seeds: int = 5

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; "
                             f"choose from {sorted(SWEEP_PARAMETERS)}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")

    def config_for(self, value, seed: int, protocol: str) -> ScenarioConfig:
        key = SWEEP_PARAMETERS[self.parameter]
        if key in ("groups", "group_size"):
            value = int(value)
        return self.base.replace(**{key: value, "seed": seed, "protocol": protocol,
                                    "trace": False})

    def points(self) -> List[Tuple[float, int]]:
        return [(v, self.base.seed + i) for v in self.values for i in range(self.seeds)]


@dataclass(frozen=True)
class PairedResult:
    value: float
    seed: int
    gram: Summary
    ndn: Summary


def run_pair(spec: SweepSpec, value, seed: int) -> PairedResult:
    """gram and ndn on one shared scenario (same topology and placements)."""
    try:
        scenario = build_scenario(spec.config_for(value, seed, "gram"))
        gram = summarize(run(spec.config_for(value, seed, "gram"), scenario))
        ndn = summarize(run(spec.config_for(value, seed, "ndn"), scenario))
    except Exception as exc:
        raise SweepError(value, seed, exc) from exc
    return PairedResult(value, seed, gram, ndn)


def _run_pair_args(args):
    return run_pair(*args)


def ci95(values: Sequence[float]) -> float:
    """Half-width of a 95% Student-t interval for the mean."""
    if len(values) < 2:
        return 0.0
    sd = statistics.stdev(values)
    return float(stats.t.ppf(0.975, len(values) - 1)) * sd / math.sqrt(len(values))


@dataclass(frozen=True)
class ComparisonRow:
    value: float
    seeds: int
    gram_avg_table: float
    gram_avg_table_ci: float
    gram_max_table: int
    ndn_avg_table: float
    ndn_avg_table_ci: float
    ndn_max_table: int
    gram_mean_delay_ms: float
    gram_delay_ci: float
    ndn_mean_delay_ms: float
    ndn_delay_ci: float


@dataclass
class ComparisonTable:
    parameter: str
    rows: List[ComparisonRow]
    results: List[PairedResult] = field(default_factory=list, repr=False)

    def column(self, name: str) -> List[float]:
        return [getattr(r, name) for r in self.rows]

    def violations(self, base: ScenarioConfig) -> List[str]:
        """Rows whose gram max table exceeds the group count, plus runs that
        reported end-of-run invariant violations."""
        out = [f"value={r.value} seed={r.seed}: {s.protocol} run had {s.invariant_violations} "
               f"invariant violations" for r in self.results for s in (r.gram, r.ndn)
               if s.invariant_violations]
        for row in self.rows:
            groups = int(row.value) if self.parameter == "group_count" else base.groups
            if row.gram_max_table > groups:
                out.append(f"value={row.value}: gram max table {row.gram_max_table} > {groups} groups")
        return out

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        names = [f.name for f in fields(ComparisonRow)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.parameter if n == "value" else n for n in names])
            for row in self.rows:
                w.writerow([fmt_value(getattr(row, n)) for n in names])
        return path

    def text(self) -> str:
        head = (f"{self.parameter:>12} {'gram_avg':>10} {'ndn_avg':>10} {'gram_max':>9} "
                f"{'ndn_max':>8} {'gram_ms':>9} {'ndn_ms':>9}")
        lines = [head]
        for r in self.rows:
            lines.append(f"{r.value:>12g} {r.gram_avg_table:>10.2f} {r.ndn_avg_table:>10.2f} "
                         f"{r.gram_max_table:>9d} {r.ndn_max_table:>8d} "
                         f"{r.gram_mean_delay_ms:>9.2f} {r.ndn_mean_delay_ms:>9.2f}")
        return "\n".join(lines)


def aggregate(parameter: str, results: Sequence[PairedResult]) -> ComparisonTable:
    results = sorted(results, key=lambda r: (r.value, r.seed))
    rows = []
    for value in sorted({r.value for r in results}):
        group = [r for r in results if r.value == value]
        g_avg = [r.gram.avg_table for r in group]
        n_avg = [r.ndn.avg_table for r in group]
        g_del = [r.gram.mean_delay_ms for r in group]
        n_del = [r.ndn.mean_delay_ms for r in group]
        rows.append(ComparisonRow(
            value=value,
            seeds=len(group),
            gram_avg_table=statistics.fmean(g_avg),
            gram_avg_table_ci=ci95(g_avg),
            gram_max_table=max(r.gram.max_table for r in group),
            ndn_avg_table=statistics.fmean(n_avg),
            ndn_avg_table_ci=ci95(n_avg),
            ndn_max_table=max(r.ndn.max_table for r in group),
            gram_mean_delay_ms=statistics.fmean(g_del),
            gram_delay_ci=ci95(g_del),
            ndn_mean_delay_ms=statistics.fmean(n_del),
            ndn_delay_ci=ci95(n_del),
        ))
    return ComparisonTable(parameter, rows, list(results))


def run_sweep(spec: SweepSpec, workers: int = 1, outdir: Optional[Union[str, Path]] = None,
              progress: Optional[Callable[[PairedResult], None]] = None) -> ComparisonTable:
    points = spec.points()
    results: List[PairedResult] = []
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_pair_args, [(spec, v, s) for v, s in points]):
                results.append(res)
                if progress:
                    progress(res)
    else:
        for value, seed in points:
            res = run_pair(spec, value, seed)
            results.append(res)
            if progress:
                progress(res)
    table = aggregate(spec.parameter, results)
    if outdir is not None:
        table.write_csv(Path(outdir) / "comparison.csv")
    return table
