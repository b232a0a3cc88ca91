from __future__ import annotations

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ricci_lab import reports
from ricci_lab.cli import main
from ricci_lab.config import ExperimentConfig
from ricci_lab.errors import ConfigError, GenerationError
from ricci_lab.families import generate_family, generate_member
from ricci_lab.reports import CSV_NAME, MANIFEST_NAME, REPORT_NAME, ReportError, atomic_write
from ricci_lab.sweep import CSV_COLUMNS, run_rigidity_sweep
from ricci_lab.warped import c0_distance_to_round, check_curvature_cone, curvature

FAST_FLOW = {"curvature_ceiling": 1e4, "sample_cadence": 5e-3}


def small_cfg(**kw):
    base = dict(seed=7, family="sin_cubed", eps=[0.0, 0.05, 0.1], grid=48, flow=FAST_FLOW)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


# ----------------------------------------------------------------- config

@pytest.mark.parametrize("bad, match", [
    ({"eps": [0.1, 0.0]}, "sorted"),
    ({"unknown": 1}, "unknown configuration keys"),
    ({"family": "torus"}, "unknown family"),
    ({"checks": {"max_principle": {"tol": -1.0}}}, "must be positive"),
    ({"checks": {"nope": {}}}, "unknown check"),
    ({"flow": {"cfl": -1.0}}, "invalid flow"),
    ({"checks": {"harnack": {"budget": 3}}}, "unknown parameters"),
    ({"flow": {"speed": 1}}, "unknown flow keys"),
    ({"grid": 4}, "grid"),
    ({"seed": -1}, "seed"),
    ({"seed": 2 ** 64}, "seed"),
    ({"schema_version": 2}, "schema_version"),
    ({"family": "berger", "n": 4}, "n = 3"),
    ({"barrier": {"t2": 0}}, "barrier"),
])
def test_config_validation(bad, match):
    with pytest.raises(ConfigError, match=match):
        ExperimentConfig.from_dict({"seed": 1, **bad})


def test_config_requires_seed():
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict({"family": "round"})


def test_config_roundtrip_and_hash(tmp_path):
    cfg = small_cfg()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    again = ExperimentConfig.load(path)
    assert again == cfg and again.sha256() == cfg.sha256()
    # execution settings do not change the hash, result settings do
    assert cfg.with_overrides(workers=3, output_dir="x").sha256() == cfg.sha256()
    assert cfg.with_overrides(seed=8).sha256() != cfg.sha256()
    assert cfg.family == "sin_cubed_perturbation"


def test_config_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        ExperimentConfig.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        ExperimentConfig.load(bad)


@given(seed=st.integers(0, 2 ** 64 - 1), i=st.integers(0, 1000))
def test_member_seeds_deterministic(seed, i):
    cfg = ExperimentConfig(seed=seed)
    assert cfg.member_seed(i) == cfg.member_seed(i)
    assert 0 <= cfg.member_seed(i) < 2 ** 32


# --------------------------------------------------------------- families

def test_family_members():
    cfg = small_cfg(grid=128)
    p0 = generate_member(cfg, 0.0)
    assert c0_distance_to_round(p0) < 1e-8
    p = generate_member(cfg, 0.05)
    c = curvature(p)
    assert check_curvature_cone(c).ok
    assert np.min(c.R) == pytest.approx(6.0, rel=1e-10)


def test_family_generation_error_names_eps():
    cfg = small_cfg(eps=[0.0, 0.9])
    with pytest.raises(GenerationError, match="eps=0.9") as ei:
        generate_family(cfg)
    assert ei.value.eps == 0.9


def test_berger_family():
    cfg = ExperimentConfig.from_dict({"seed": 1, "family": "berger", "eps": [0.0, 0.1]})
    fam = generate_family(cfg)
    assert len(fam) == 2
    with pytest.raises(GenerationError, match="not positive"):
        generate_member(cfg.with_overrides(eps=(3.0,)), 3.0)


# ------------------------------------------------------------------ sweep

@pytest.fixture(scope="module")
def sweep_once():
    return run_rigidity_sweep(small_cfg())


def test_sweep_rows(sweep_once):
    rows = sweep_once.rows
    assert [r.eps for r in rows] == [0.0, 0.05, 0.1]
    assert all(r.status == "ok" for r in rows)
    # the eps = 0 member is sampled from sin s, so c0_dist is discretization-level at m = 48
    assert abs(rows[0].deficit) < 1e-3 and rows[0].c0_dist < 1e-6
    assert not sweep_once.hard_failures


def test_sweep_worker_independence(sweep_once, tmp_path):
    par = run_rigidity_sweep(small_cfg(), workers=2)
    reports.emit_reports(sweep_once, tmp_path / "a")
    reports.emit_reports(par, tmp_path / "b")
    for name in (CSV_NAME, REPORT_NAME, MANIFEST_NAME):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_and_manifest_format(sweep_once, tmp_path):
    reports.emit_reports(sweep_once, tmp_path)
    lines = (tmp_path / CSV_NAME).read_text().splitlines()
    assert lines[0] == "eps,c0_dist,T_est,T_lo,T_hi,deficit,pinch_t,width_proxy_0,status"
    assert lines[0].split(",") == list(CSV_COLUMNS) and len(lines) == 4
    man = (tmp_path / MANIFEST_NAME).read_text().splitlines()
    assert man[2] == f"config_sha256: {sweep_once.config.sha256()}"
    assert man[3] == "seed: 7"
    rep = json.loads((tmp_path / REPORT_NAME).read_text())
    assert rep["config"]["seed"] == 7 and len(rep["members"]) == 3


def test_cone_failure_row():
    res = run_rigidity_sweep(small_cfg(eps=[0.0, 0.9]))
    assert res.rows[1].status == "cone_failure" and np.isnan(res.rows[1].deficit)


def test_empty_family(tmp_path):
    res = run_rigidity_sweep(small_cfg(eps=[]))
    assert res.rows == []
    reports.emit_reports(res, tmp_path)
    assert (tmp_path / CSV_NAME).read_text() == ",".join(CSV_COLUMNS) + "\n"


# ---------------------------------------------------------------- reports

def test_atomic_write_failure_leaves_nothing(tmp_path, monkeypatch):
    target = tmp_path / "x.txt"
    target.write_text("old")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(reports.os, "replace", boom)
    with pytest.raises(ReportError, match="x.txt"):
        atomic_write(target, "new")
    assert target.read_text() == "old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["x.txt"]


def test_atomic_write_unwritable_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportError, match="cannot write"):
        atomic_write(blocker / "sub" / "x.txt", "data")


def test_json_nonfinite():
    text = reports.dumps_json({"b": float("nan"), "a": np.float64(1.5), "c": np.arange(2)})
    assert json.loads(text) == {"a": 1.5, "b": "nan", "c": [0, 1]}
    assert text.index('"a"') < text.index('"b"')


# -------------------------------------------------------------------- cli

def write_cfg(tmp_path, **kw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(small_cfg(**kw).to_dict()))
    return str(path)


def test_cli_sweep(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["sweep", "rigidity", "--config", write_cfg(tmp_path), "--out", str(out)]) == 0
    assert (out / CSV_NAME).exists() and (out / MANIFEST_NAME).exists()
    assert "spearman" in capsys.readouterr().out


def test_cli_verify_exit_codes(tmp_path):
    cfg = write_cfg(tmp_path, eps=[0.05])
    assert main(["verify", "rm_le_scalar", "--config", cfg, "--out", str(tmp_path / "v")]) == 0
    rep = json.loads((tmp_path / "v" / REPORT_NAME).read_text())
    assert rep["members"][0]["report"]["status"] == "pass"


def test_cli_errors(tmp_path, capsys):
    assert main(["flow", "run"]) == 2
    assert "seed" in capsys.readouterr().err
    assert main(["flow", "run", "--config", str(tmp_path / "none.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1, "eps": [0.2, 0.1]}))
    assert main(["sweep", "rigidity", "--config", str(bad)]) == 2
    assert main(["flow", "run", "--seed", "1", "--grid", "4"]) == 2
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["width", "probe", "--config", write_cfg(tmp_path, eps=[0.0]),
                 "--out", str(blocker / "x")]) == 2


def test_cli_failing_check_exits_one(tmp_path, monkeypatch):
    from ricci_lab import checks, sweep

    def always_fails(trace, rel=1e-8):
        return checks._report("rm_le_scalar", -1.0, (0, 0.0), 1, rel)

    monkeypatch.setitem(sweep.CHECKS, "rm_le_scalar", always_fails)
    cfg = write_cfg(tmp_path, eps=[0.05])
    assert main(["verify", "rm_le_scalar", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert main(["sweep", "rigidity", "--config", cfg, "--out", str(tmp_path / "s")]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ricci_lab", "--help"], capture_output=True,
                          text=True, env={**os.environ})
    assert proc.returncode == 0 and "sweep" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "ricci_lab", "flow", "run"], capture_output=True,
                          text=True)
    assert proc.returncode == 2
