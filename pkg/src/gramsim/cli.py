"""Command-line front end: ``run``, ``sweep`` and ``oracle``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import oracle
from .config import ConfigError, ScenarioConfig, load_config
from .engine import SimulationError, check_report, run
from .metrics import (ComparisonTable, InsufficientDataError, SweepError, SweepSpec, run_sweep,
                      summarize, summary_rows, write_report, fmt_value)
from .topology import TopologyError

log = logging.getLogger("gramsim")

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2

DEFAULT_VALUES = {
    "rate": (50, 100, 200, 400, 800),
    "group_count": (5, 10, 15, 20, 25, 30),
    "group_size": (10, 20, 30, 40),
    "link_delay": (15, 30),
}

# figure name -> (swept parameter, extra base overrides per curve, columns)
TABLE_COLS = ["gram_avg_table", "gram_avg_table_ci", "gram_max_table",
              "ndn_avg_table", "ndn_avg_table_ci", "ndn_max_table"]
DELAY_COLS = ["gram_mean_delay_ms", "gram_delay_ci", "ndn_mean_delay_ms", "ndn_delay_ci"]
FIGURES = {
    "rate": ("rate", [{"link_delay_ms": 15.0}, {"link_delay_ms": 30.0}], TABLE_COLS),
    "groups": ("group_count", [{}], TABLE_COLS),
    "size": ("group_size", [{}], TABLE_COLS),
    "delay": ("group_count", [{}], DELAY_COLS),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key=value config file")
    g = p.add_argument_group("scenario (overrides the config file)")
    for f in fields(ScenarioConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            g.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            g.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())


def _config_from_args(args) -> ScenarioConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(ScenarioConfig)
                 if getattr(args, f.name, None) is not None}
    if args.config:
        return load_config(args.config, overrides)
    return ScenarioConfig.from_mapping(overrides)


def _values(text: Optional[str], parameter: str) -> Tuple[float, ...]:
    if not text:
        return tuple(float(v) for v in DEFAULT_VALUES[parameter])
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad value list {text!r}") from None


def cmd_run(args) -> int:
    config = _config_from_args(args)
    started = time.perf_counter()
    report = run(config)
    paths = write_report(report, args.out)
    print(f"{config.protocol}: {report.events} events in {time.perf_counter() - started:.1f}s, "
          f"topology seed {report.topology_seed}, outputs in {args.out}")
    try:
        for key, value in summary_rows(summarize(report)):
            print(f"  {key:<18} {value}")
    except InsufficientDataError as exc:
        print(f"  {exc}")
    problems = check_report(report)
    for p in problems:
        print(f"VIOLATION {p}", file=sys.stderr)
    log.debug("wrote %s", sorted(str(p) for p in paths.values()))
    return EXIT_VIOLATION if problems else EXIT_OK


def write_figure(path: Path, parameter: str, curves: Sequence[Tuple[Dict, ComparisonTable]],
                 columns: List[str]) -> Path:
    extra = sorted({k for overrides, _ in curves for k in overrides})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(extra + [parameter] + columns)
        for overrides, table in curves:
            for row in table.rows:
                w.writerow([fmt_value(overrides[k]) for k in extra] + [fmt_value(row.value)]
                           + [fmt_value(getattr(row, c)) for c in columns])
    return path


def _progress(res) -> None:
    log.info("value=%g seed=%d gram avg=%.2f ndn avg=%.2f", res.value, res.seed,
             res.gram.avg_table, res.ndn.avg_table)


def cmd_sweep(args) -> int:
    base = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    problems: List[str] = []
    summary: List[str] = []
    if args.parameter:
        spec = SweepSpec(base, args.parameter, _values(args.values, args.parameter), args.seeds)
        table = run_sweep(spec, args.workers, out, _progress)
        problems += table.violations(base)
        summary.append(table.text())
    else:
        names = list(FIGURES) if args.figure == "all" else [args.figure]
        done: Dict[Tuple, ComparisonTable] = {}
        for name in names:
            parameter, curve_overrides, columns = FIGURES[name]
            curves = []
            for overrides in curve_overrides:
                cfg = base.replace(**overrides)
                key = (parameter, tuple(sorted(overrides.items())))
                if key not in done:
                    sub = out / (parameter + "".join(f"_{k}{v:g}" for k, v in sorted(overrides.items())))
                    spec = SweepSpec(cfg, parameter, _values(args.values, parameter), args.seeds)
                    done[key] = run_sweep(spec, args.workers, sub, _progress)
                    problems += done[key].violations(cfg)
                curves.append((overrides, done[key]))
            path = write_figure(out / f"fig_{name}.csv", parameter, curves, columns)
            for overrides, table in curves:
                label = " ".join(f"{k}={v:g}" for k, v in overrides.items())
                summary.append(f"[{path.name}] {label}".rstrip() + "\n" + table.text())
    text = "\n\n".join(summary) + "\n"
    (out / "summary.txt").write_text(text)
    print(text, end="")
    for p in problems:
        print(f"VIOLATION {p}", file=sys.stderr)
    return EXIT_VIOLATION if problems else EXIT_OK


def cmd_oracle(args) -> int:
    if args.write_golden:
        for path in oracle.write_goldens(Path(args.write_golden)):
            print(f"wrote {path}")
        return EXIT_OK
    failed = 0
    for result in oracle.check_all(args.golden_dir):
        print(f"{'PASS' if result.ok else 'FAIL'} {result.name}")
        for f in result.failures:
            print(f"  {f}")
        failed += not result.ok
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gramsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write its CSVs")
    _add_config_flags(p)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="paired gram/ndn sweeps for the comparison figures")
    _add_config_flags(p)
    p.add_argument("--figure", choices=[*FIGURES, "all"], default="all")
    p.add_argument("--parameter", choices=sorted(DEFAULT_VALUES),
                   help="sweep one parameter instead of a figure preset")
    p.add_argument("--values", help="comma-separated values for the swept parameter")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("sweep"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="check the small scenarios against golden traces")
    p.add_argument("--golden-dir", type=Path, help="read goldens from here instead")
    p.add_argument("--write-golden", type=Path, metavar="DIR", help="regenerate goldens into DIR")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SweepError as exc:
        print(f"{'VIOLATION' if isinstance(exc.__cause__, SimulationError) else 'error:'} {exc}",
              file=sys.stderr)
        return EXIT_VIOLATION if isinstance(exc.__cause__, SimulationError) else EXIT_ERROR
    except (ConfigError, TopologyError, InsufficientDataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SimulationError as exc:
        print(f"VIOLATION {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
