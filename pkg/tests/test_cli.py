import json
import subprocess
import sys

import pytest

from rfcharge.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main

SMALL = ["--set", "K=2", "--set", "array.rows=4", "--set", "array.cols=4", "--set", "T=6",
         "--set", "n_episodes=2", "--set", "n_eval_episodes=2", "--set", "ddpg.batch_size=4",
         "--set", "ddpg.actor_hidden=[8,8]", "--set", "ddpg.critic_hidden=[8,8]"]


def run(*args):
    return main([str(a) for a in args])


def test_beamform_writes_solve_report(tmp_path):
    assert run("beamform", "-K", 2, "-N", 4, "--budget", 1.0, "--weights", "0.3,0.7",
               "--out", tmp_path) == EXIT_OK
    rep = json.loads((tmp_path / "solve_report.json").read_text())
    for key in ("status", "objective", "weighted_dc_W", "p_rf_mW", "p_dc_mW",
                "transmit_power_W", "outer_iterations", "residual_norm", "trace"):
        assert key in rep
    assert abs(rep["transmit_power_W"] - 1.0) <= 1e-6
    assert len(rep["p_dc_mW"]) == 2
    assert "wall_time" not in rep


def test_beamform_reports_are_identical(tmp_path):
    for d in ("a", "b"):
        assert run("beamform", "-K", 3, "-N", 4, "--budget", 2.0, "--out", tmp_path / d) == 0
    assert (tmp_path / "a" / "solve_report.json").read_bytes() == \
        (tmp_path / "b" / "solve_report.json").read_bytes()


def test_simulate_train_eval(tmp_path, capsys):
    assert run("simulate", *SMALL, "--out", tmp_path / "sim") == EXIT_OK
    header = (tmp_path / "sim" / "metrics.csv").read_text().splitlines()[0]
    assert header == "episode,mean_reward,mean_tx_power_W,outage_prob"
    assert run("train", *SMALL, "--seed", 4, "--out", tmp_path / "tr") == EXIT_OK
    ckpt = tmp_path / "tr" / "checkpoint.json"
    assert ckpt.is_file()
    assert run("eval", *SMALL, "--seed", 4, "--checkpoint", ckpt, "--out", tmp_path / "ev") == 0
    assert len((tmp_path / "ev" / "metrics.csv").read_text().splitlines()) == 3
    trace = tmp_path / "sim" / "demand_trace.csv"
    assert run("eval", *SMALL, "--checkpoint", ckpt, "--trace", trace,
               "--out", tmp_path / "ev2") == 0
    assert len((tmp_path / "ev2" / "metrics.csv").read_text().splitlines()) == 3
    assert "eval:" in capsys.readouterr().out


def test_compare_and_sweep(tmp_path):
    assert run("compare", *SMALL, "--seeds", "1,2", "--out", tmp_path / "cmp") == EXIT_OK
    rep = json.loads((tmp_path / "cmp" / "compare.json").read_text())
    assert [r["seed"] for r in rep["seeds"]] == [1, 2]
    assert run("sweep", *SMALL, "--set", "mode=\"heuristic\"", "--key", "p_max",
               "--values", "5,10", "--out", tmp_path / "sw") == EXIT_OK
    assert len((tmp_path / "sw" / "sweep.csv").read_text().splitlines()) == 3


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"K": 2, "array": {"rows": 4, "cols": 4}, "T": 4,
                               "n_episodes": 1, "mode": "heuristic"}))
    assert run("simulate", "--config", cfg, "--set", "p_max=5", "--out", tmp_path / "o") == 0
    assert len((tmp_path / "o" / "metrics.csv").read_text().splitlines()) == 2


@pytest.mark.parametrize("args", [
    ["simulate", "--set", "K=0"],
    ["simulate", "--set", "bogus=1"],
    ["simulate", "--set", "noequals"],
    ["simulate", "--config", "/nonexistent/cfg.json"],
    ["simulate", "--seed", "-1"],
    ["beamform", "-K", "2", "-N", "4", "--weights", "1,2,3"],
    ["beamform", "-K", "2", "-N", "4", "--weights", "a,b"],
    ["beamform", "-K", "2", "-N", "4", "--budget", "-1"],
    ["beamform", "-K", "2", "-N", "4", "--weights=-1,1"],
    ["beamform", "-K", "2", "-N", "4", "--weights", "nan,1"],
    ["compare", "--seeds", "x"],
])
def test_config_errors_exit_2(args, tmp_path, capsys):
    assert run(*args, "--out", tmp_path) == EXIT_CONFIG
    assert capsys.readouterr().err


def test_malformed_config_and_checkpoint_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("simulate", "--config", bad, "--out", tmp_path) == EXIT_CONFIG
    assert run("eval", *SMALL, "--checkpoint", bad, "--out", tmp_path) == EXIT_CONFIG
    assert run("train", *SMALL, "--set", "n_episodes=1", "--out", tmp_path / "t") == 0
    assert run("eval", *SMALL, "--set", "K=3", "--checkpoint", tmp_path / "t" / "checkpoint.json",
               "--out", tmp_path) == EXIT_CONFIG


def test_numerical_failure_path(monkeypatch, tmp_path):
    from rfcharge import cli
    from rfcharge.errors import NumericalFailure

    def boom(*a, **k):
        raise NumericalFailure("diverged")
    monkeypatch.setattr(cli, "solve_itbf", boom)
    assert run("beamform", "-K", 2, "-N", 4, "--out", tmp_path) == EXIT_NUMERICAL


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "rfcharge", "beamform", "-K", "1", "-N", "4",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "objective" in r.stdout
