import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from shadow_forge.cli import (EXIT_CONFIG, EXIT_FAIL, EXIT_NOT_CONTRACTIVE, EXIT_OK, main)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def diag_cfg(**over):
    cfg = {
        "mode": "shadow",
        "system": {"catalog": "discrete_diagonal", "params": {"N": 24}},
        "nonlinearity": {"name": "sine", "c": 0.1},
        "pseudo_orbit": {"generate": {"perturbation": {"kind": "impulse", "magnitude": 1e-3}}},
    }
    cfg.update(over)
    return cfg


def run(tmp_path, cfg, *extra):
    out = tmp_path / "out"
    code = main(["--config", write_cfg(tmp_path, cfg), "--out", str(out), "--quiet", *extra])
    summary = json.loads((out / "summary.json").read_text())
    return code, out, summary


@pytest.mark.parametrize("mode", ["certify", "generate", "shadow", "verify", "oracle-check"])
def test_modes_pass(tmp_path, mode):
    code, out, summary = run(tmp_path, diag_cfg(mode=mode))
    assert code == EXIT_OK and summary["pass"]
    for f in summary["files"]:
        assert (out / f).exists()


def test_trajectory_columns(tmp_path):
    _, out, summary = run(tmp_path, diag_cfg())
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "n,y[0],y[1],x[0],x[1],dist,residual,center_residual"
    assert len(lines) == 26
    assert summary["sup_distance"] <= summary["C_delta"]


def test_not_contractive_exit(tmp_path):
    code, _, summary = run(tmp_path, diag_cfg(nonlinearity={"name": "sine", "c": 0.5}))
    assert code == EXIT_NOT_CONTRACTIVE and not summary["pass"]


@pytest.mark.parametrize("bad", [
    {"system": {"catalog": "no_such_entry"}},
    {"pseudo_orbit": {"generate": {"perturbation": {"kind": "noise", "magnitude": 1e-3}}}},
    {"constants": {"D": 2.0, "lam": 0.5}},
    {"mode": "dance"},
])
def test_config_errors(tmp_path, bad):
    code, _, summary = run(tmp_path, diag_cfg(**bad))
    assert code == EXIT_CONFIG and summary["exit_status"] == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "none.json"), "--out", str(tmp_path), "--quiet"]) \
        == EXIT_CONFIG


def test_seed_flag_supplies_noise_seed(tmp_path):
    cfg = diag_cfg(pseudo_orbit={"generate": {"perturbation": {"kind": "noise",
                                                               "magnitude": 1e-3}}})
    code, _, _ = run(tmp_path, cfg, "--seed", "3")
    assert code == EXIT_OK


def test_failed_certificate_exit(tmp_path):
    cfg = {
        "mode": "certify",
        "system": {"inline": {"kind": "discrete", "A": [[0.6, 0.0], [0.0, 1.8]], "N": 12,
                              "stable": [0], "unstable": [1], "rate": {"kind": "exponential"}}},
        "constants": {"D": 1.0, "lam": 2.0, "d": 0},
        "nonlinearity": {"name": "zero"},
    }
    code, _, summary = run(tmp_path, cfg)
    assert code == EXIT_FAIL and summary["failed"]


def test_bundled_configs_are_valid():
    for p in CONFIGS.glob("*.json"):
        cfg = json.loads(p.read_text())
        assert "mode" in cfg and "system" in cfg


def _subprocess(cfg_path, out, env_extra=None):
    env = dict(os.environ, **(env_extra or {}))
    return subprocess.run([sys.executable, "-m", "shadow_forge", "--config", cfg_path,
                           "--out", str(out), "--quiet"], env=env, capture_output=True, text=True)


def test_byte_identical_outputs_and_threads(tmp_path):
    cfg = write_cfg(tmp_path, diag_cfg(mode="verify"))
    a = _subprocess(cfg, tmp_path / "a")
    b = _subprocess(cfg, tmp_path / "b", {"SHADOW_FORGE_THREADS": "1"})
    assert a.returncode == b.returncode == 0, a.stderr + b.stderr
    for f in ("report.json", "trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_bad_threads_env(tmp_path):
    cfg = write_cfg(tmp_path, diag_cfg())
    r = _subprocess(cfg, tmp_path / "c", {"SHADOW_FORGE_THREADS": "zero"})
    assert r.returncode == EXIT_CONFIG
