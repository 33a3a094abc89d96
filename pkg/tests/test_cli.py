import json

import pytest

from dryreach.cli import run_cli


def test_verify_safe_and_unsafe(tmp_path, capsys):
    assert run_cli(["verify", "ats_safe", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "ats_safe" / "tubes.csv").exists()
    assert json.loads((tmp_path / "ats_safe" / "report.json").read_text())["verdict"] == "SAFE"
    assert run_cli(["verify", "merge_unsafe", "--seed", "1", "--out", str(tmp_path)]) == 1
    assert (tmp_path / "merge_unsafe" / "witness.csv").exists()


def test_unknown_exit_code(tmp_path):
    assert run_cli(["verify", "merge_safe", "--max-refine", "0", "--out", str(tmp_path)]) == 2


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("DRYREACH_MAX_REFINE", "0")
    monkeypatch.setenv("DRYREACH_OUT", str(tmp_path))
    assert run_cli(["verify", "merge_safe"]) == 2
    assert (tmp_path / "merge_safe" / "report.json").exists()
    monkeypatch.setenv("DRYREACH_SEED", "abc")
    assert run_cli(["verify", "merge_safe"]) == 64


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["verify"], ["verify", "x", "--seed", "q"],
                                  ["certify", "contain", "aeb_g1"]])
def test_usage_errors(argv, tmp_path):
    assert run_cli(argv + ["--out", str(tmp_path)] if argv else argv) == 64


def test_scenario_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "x"\n')
    assert run_cli(["verify", str(bad), "--out", str(tmp_path)]) == 65
    assert run_cli(["verify", "no_such_scenario", "--out", str(tmp_path)]) == 65


def test_checksim(capsys, tmp_path):
    assert run_cli(["checksim", "aeb_g2", "aeb_g1"]) == 0
    assert "relation" in capsys.readouterr().out
    assert run_cli(["checksim", "aeb_g1", "aeb_g2"]) == 1
    assert "NOT SIMULATED" in capsys.readouterr().out
    lmap = tmp_path / "m.toml"
    lmap.write_text('"cruise|cruise" = "cruise|cruise"\n')
    assert run_cli(["checksim", "aeb_g2", "aeb_g1", "--lmap", str(lmap)]) == 65


def test_certify(tmp_path, capsys):
    assert run_cli(["certify", "fixpoint", "powertrain_loop", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "powertrain_loop" / "certificate_fixpoint.json").read_text())["ok"]
    assert run_cli(["certify", "contain", "aeb_g1", "aeb_g2", "--out", str(tmp_path)]) == 1
    assert run_cli(["certify", "decompose", "powertrain", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "powertrain" / "tubes_second.csv").exists()


def test_learn_simulate_reach(tmp_path, capsys):
    assert run_cli(["learn", "ats_safe", "--mode", "gear2", "--type", "PED"]) == 0
    assert "validation" in capsys.readouterr().out
    assert run_cli(["simulate", "ats_safe", "--x0", "5,1", "--duration", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "t,v,w" and len(lines) == 22
    assert run_cli(["reach", "powertrain", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "powertrain" / "plot_t_lam.svg").exists()


def test_artifacts_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run_cli(["verify", "merge_safe", "--seed", "3", "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a" / "merge_safe").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / "merge_safe" / f.name).read_bytes()
