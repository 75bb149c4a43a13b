import csv

from gramsim.cli import main

SMALL = ["--nodes", "25", "--radius", "35", "--groups", "2", "--group-size", "3",
         "--rate", "20", "--duration-s", "0.6", "--warmup-s", "0.2"]


def test_run_writes_csvs(tmp_path, capsys):
    assert main(["run", *SMALL, "--trace", "--out", str(tmp_path)]) == 0
    for name in ("tables.csv", "delays.csv", "summary.csv", "trace.tsv"):
        assert (tmp_path / name).exists()
    assert "avg_table" in capsys.readouterr().out


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("protocol=ndn\nnodes=25\nradius=35\ngroups=2\ngroup_size=3\nrate=20\n"
                   "duration_s=0.6\nwarmup_s=0.2\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--protocol", "gram", "--out", str(out)]) == 0
    rows = dict(csv.reader(open(out / "summary.csv")))
    assert rows["protocol"] == "gram"


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", *SMALL, "--trace", "--out", str(a)]) == 0
    assert main(["run", *SMALL, "--trace", "--out", str(b)]) == 0
    for name in ("tables.csv", "delays.csv", "summary.csv", "trace.tsv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_parameter(tmp_path, capsys):
    rc = main(["sweep", *SMALL, "--parameter", "group_count", "--values", "1,2",
               "--seeds", "2", "--out", str(tmp_path)])
    assert rc == 0
    rows = list(csv.reader(open(tmp_path / "comparison.csv")))
    assert rows[0][0] == "group_count" and len(rows) == 3
    assert (tmp_path / "summary.txt").exists()


def test_sweep_figure_files(tmp_path):
    rc = main(["sweep", *SMALL, "--figure", "rate", "--values", "10,20", "--seeds", "1",
               "--out", str(tmp_path)])
    assert rc == 0
    rows = list(csv.reader(open(tmp_path / "fig_rate.csv")))
    assert rows[0][:2] == ["link_delay_ms", "rate"]
    assert [r[0] for r in rows[1:]] == ["15.000000", "15.000000", "30.000000", "30.000000"]


def test_oracle_verb(capsys):
    assert main(["oracle"]) == 0
    out = capsys.readouterr().out
    assert "PASS chain5" in out and "PASS late_joiner" in out


def test_oracle_fails_on_bad_golden(tmp_path, capsys):
    main(["oracle", "--write-golden", str(tmp_path)])
    (tmp_path / "late_joiner.tsv").write_text("nothing\n")
    assert main(["oracle", "--golden-dir", str(tmp_path)]) != 0
    assert "FAIL late_joiner" in capsys.readouterr().out


def test_bad_config_exits_nonzero(capsys):
    assert main(["run", "--nodes", "0"]) != 0
    assert "error" in capsys.readouterr().err
