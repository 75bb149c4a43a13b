import csv
import random

import pytest

from gramsim.config import ScenarioConfig
from gramsim.engine import GroupPlacement, RunReport, Scenario, run
from gramsim.metrics import (InsufficientDataError, PairedResult, SweepError, SweepSpec, Summary,
                             aggregate, ci95, percentile, run_pair, run_sweep, summarize,
                             write_report)
from gramsim.topology import chain

TINY = ScenarioConfig(nodes=25, radius=35.0, groups=2, group_size=3, rate=20.0,
                      duration_s=0.6, warmup_s=0.2)


def fake_report(samples, delays, warmup=0):
    return RunReport(ScenarioConfig(), 1, 2, warmup, 10, table_samples=samples, delays=delays)


def test_chain_mean_delay_exactly_two_links():
    cfg = ScenarioConfig(groups=1, group_size=1, rate=10.0, duration_s=1.0, warmup_s=0.0)
    scenario = Scenario(chain(2), 0, (GroupPlacement("/g0", 0, (1,)),))
    summary = summarize(run(cfg, scenario))
    assert summary.mean_delay_ms == 30.0
    assert summary.median_delay_ms == 30.0 and summary.p95_delay_ms == 30.0


def test_equal_samples_max_is_mean():
    s = summarize(fake_report([(0, 0, 4), (0, 1, 4), (5, 0, 4)], [("/g", "c0", 1, 1000)]))
    assert s.avg_table == s.max_table == 4


def test_single_delivery():
    s = summarize(fake_report([(0, 0, 1)], [("/g", "c0", 1, 42_000)]))
    assert s.mean_delay_ms == 42.0 and s.deliveries == 1


def test_warmup_window_excludes_samples():
    s = summarize(fake_report([(0, 0, 100), (10, 0, 2)], [("/g", "c0", 1, 1000)], warmup=5))
    assert s.avg_table == 2 and s.table_samples == 1


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        summarize(fake_report([(0, 0, 1)], [], warmup=5))
    with pytest.raises(InsufficientDataError):
        summarize(fake_report([(0, 0, 1)], []))


def test_percentile_nearest_rank():
    assert percentile([1, 2, 3, 4], 50) == 2
    assert percentile([1, 2, 3, 4], 95) == 4
    assert percentile([7], 5) == 7


def test_ci95_known_value():
    # t(0.975, 4) = 2.776445...
    assert ci95([1.0, 2.0, 3.0, 4.0, 5.0]) == pytest.approx(2.776445 * 1.5811388 / 5 ** 0.5, rel=1e-5)
    assert ci95([3.0]) == 0.0


def test_write_report_files(tmp_path):
    report = run(TINY.replace(trace=True))
    paths = write_report(report, tmp_path)
    with open(paths["tables"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time_ms", "node", "entries"] and len(rows) == 1 + len(report.table_samples)
    with open(paths["delays"]) as fh:
        assert next(csv.reader(fh)) == ["group", "consumer", "counter", "delay_ms"]
    keys = [r[0] for r in csv.reader(open(paths["summary"]))]
    assert "avg_table" in keys and "mean_delay_ms" in keys
    assert paths["trace"].read_text() == report.trace_text()


def test_single_point_sweep_matches_direct_run():
    spec = SweepSpec(TINY, "rate", (20.0,), seeds=1)
    table = run_sweep(spec)
    assert len(table.rows) == 1
    row = table.rows[0]
    gram = summarize(run(TINY.replace(protocol="gram")))
    ndn = summarize(run(TINY.replace(protocol="ndn")))
    assert row.gram_avg_table == gram.avg_table and row.gram_max_table == gram.max_table
    assert row.ndn_avg_table == ndn.avg_table and row.ndn_max_table == ndn.max_table
    assert row.gram_mean_delay_ms == gram.mean_delay_ms
    assert row.ndn_mean_delay_ms == ndn.mean_delay_ms
    assert row.gram_avg_table_ci == 0.0


def _summary(avg, delay):
    return Summary("gram", 1, avg, int(avg) + 1, 5, delay, delay, delay, 10, 0, 0)


def test_aggregate_is_permutation_invariant():
    rng = random.Random(3)
    results = [PairedResult(v, s, _summary(rng.random() * 10, rng.random() * 100),
                            _summary(rng.random() * 10, rng.random() * 100))
               for v in (1.0, 2.0) for s in range(5)]
    shuffled = results[:]
    rng.shuffle(shuffled)
    assert aggregate("rate", results).rows == aggregate("rate", shuffled).rows


def test_group_sweep_bounded_by_group_count(tmp_path):
    spec = SweepSpec(TINY, "group_count", (1.0, 2.0, 3.0), seeds=1)
    table = run_sweep(spec, outdir=tmp_path)
    assert table.violations(TINY) == []
    for row in table.rows:
        assert row.gram_avg_table <= row.value
    header = (tmp_path / "comparison.csv").read_text().splitlines()[0]
    assert header.startswith("group_count,seeds,gram_avg_table")


def test_parallel_sweep_matches_serial():
    spec = SweepSpec(TINY, "rate", (10.0, 20.0), seeds=2)
    assert run_sweep(spec, workers=2).rows == run_sweep(spec, workers=1).rows


def test_sweep_error_names_the_point():
    spec = SweepSpec(TINY.replace(topology_file="/nonexistent/topo.txt"), "rate", (20.0,), 1)
    with pytest.raises(SweepError) as exc:
        run_pair(spec, 20.0, 4)
    assert exc.value.value == 20.0 and exc.value.seed == 4


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(TINY, "colour", (1.0,))
    with pytest.raises(ValueError):
        SweepSpec(TINY, "rate", ())
