"""Command-line behavior: exit codes, artifact layout, and the printed
summaries. All invocations run in-process against shrunk scenarios."""

import re

import pytest

from elqrsim import cli

TINY = ["--set", "nodes=4", "--set", "duration_s=20", "--set",
        "snapshot_interval_s=5"]


def test_validate_prints_resolved_config(capsys):
    rc = cli.main(["validate", "--config", "paper_9node", "--set", "nodes=4"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("[scenario]")
    assert "nodes = 4" in out
    assert out.rstrip().endswith("config ok")


def test_validate_rejects_unknown_override(capsys):
    rc = cli.main(["validate", "--config", "paper_9node", "--set", "bogus=1"])
    assert rc == 2
    assert "config error: unknown override key" in capsys.readouterr().err


def test_missing_config_is_validation_failure(capsys):
    rc = cli.main(["run", "--config", "/no/such/file.cfg"])
    assert rc == 2
    assert "config file not found" in capsys.readouterr().err


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["run", "--config", "paper_9node", *TINY, "--out", str(out)])
    assert rc == 0
    d = out / "elqr" / "1"
    for name in ("events.txt", "snapshots.csv", "load.csv", "prr.csv",
                 "alive.csv"):
        assert (d / name).is_file()
    lines = (out / "elqr" / "1" / "load.csv").read_text().splitlines()
    assert lines[0] == "node_id,sent,forwarded" and len(lines) == 5
    stdout = capsys.readouterr().out.splitlines()
    assert len(stdout) == 1
    assert re.fullmatch(
        r"elqr seed=1 prr=\d\.\d{4} first_death=(none|\d+\.\ds) "
        r"max_forwarded=\d+ digest=[0-9a-f]{12}",
        stdout[0],
    )


def test_run_seed_list_and_protocol_override(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["run", "--config", "paper_9node", *TINY,
                   "--set", "protocol=ctp", "--seeds", "2,3",
                   "--out", str(out)])
    assert rc == 0
    assert (out / "ctp" / "2" / "events.txt").is_file()
    assert (out / "ctp" / "3" / "events.txt").is_file()
    stdout = capsys.readouterr().out.splitlines()
    assert len(stdout) == 2
    assert stdout[0].startswith("ctp seed=2 ") and stdout[1].startswith("ctp seed=3 ")


def test_run_artifacts_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["run", "--config", "paper_9node", *TINY,
                         "--out", str(out)]) == 0
    for name in ("events.txt", "load.csv", "snapshots.csv"):
        assert (a / "elqr" / "1" / name).read_bytes() == \
            (b / "elqr" / "1" / name).read_bytes()


def test_compare_layout(tmp_path, capsys):
    out = tmp_path / "cmp"
    rc = cli.main(["compare", "--config", "paper_9node", *TINY,
                   "--seeds", "2,3", "--out", str(out)])
    assert rc == 0
    for proto in ("ctp", "elqr"):
        for seed in ("2", "3"):
            assert (out / proto / seed / "load.csv").is_file()
    for seed in ("2", "3"):
        lines = (out / f"compare_{seed}.csv").read_text().splitlines()
        assert lines[0] == "kind,key,ctp,elqr,delta_pct"
        assert len(lines) == 1 + 4 + 4 + 5
    summary = (out / "compare_summary.csv").read_text().splitlines()
    assert summary[0] == "key,ctp_median,elqr_median,stat"
    assert [ln.split(",")[0] for ln in summary[1:]] == \
        ["prr", "first_death_s", "max_forwarded", "forward_std"]
    assert any("elqr_wins=" in ln for ln in summary)
    stdout = capsys.readouterr().out.splitlines()
    assert len(stdout) == 4
    assert stdout[0].startswith("ctp seed=2") and stdout[1].startswith("elqr seed=2")


def test_empty_seed_list_rejected(capsys):
    rc = cli.main(["run", "--config", "paper_9node", *TINY, "--seeds", " , "])
    assert rc == 2
    assert "seed list is empty" in capsys.readouterr().err


def test_unparseable_seed_is_runtime_failure(capsys):
    rc = cli.main(["run", "--config", "paper_9node", *TINY, "--seeds", "1,x"])
    assert rc == 3
    assert "runtime error" in capsys.readouterr().err


def test_subcommand_required():
    with pytest.raises(SystemExit):
        cli.main([])
