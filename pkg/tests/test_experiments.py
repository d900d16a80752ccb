import json
import math

import pytest

from mimolab.cli import main
from mimolab.model import ConfigurationError
from mimolab.experiments import (ExperimentConfig, load_config, parse_p_rule,
                                 run_rate_vs_n, run_dof_contour,
                                 run_validation_suite, read_csv_rows,
                                 RATE_VS_N_COLUMNS, DOF_CONTOUR_COLUMNS)


def small_rate_cfg(tmp_path, **kw):
    base = dict(experiment="rate-vs-n", cells=2, users=2, alpha=0.2,
                trials=3, seed=7, n_grid=(8, 12), p_rules=("N", "N/2"),
                out=str(tmp_path / "rates.csv"))
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# config handling

def test_load_config_defaults_and_overrides(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text('experiment = "rate-vs-n"\ntrials = 7\nalpha = 0.25\n'
                    '# a comment\nrho_tau = inf\n')
    cfg = load_config(path, overrides={"seed": 99, "trials": None})
    assert cfg.trials == 7 and cfg.alpha == 0.25 and cfg.seed == 99
    assert math.isinf(cfg.rho_tau)


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text('experiment = "rate-vs-n"\nbogus = 3\n')
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_load_config_experiment_mismatch(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text('experiment = "rate-vs-n"\n')
    with pytest.raises(ConfigurationError):
        load_config(path, experiment="dof-contour")


def test_empty_grid_rejected():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(experiment="rate-vs-n", n_grid=())
    with pytest.raises(ConfigurationError):
        ExperimentConfig(experiment="validate", checks=())


def test_dof_contour_alpha_default():
    cfg = load_config(None, experiment="dof-contour")
    assert cfg.alpha == 0.3
    cfg = load_config(None, experiment="rate-vs-n")
    assert cfg.alpha == 0.1


@pytest.mark.parametrize("rule,n,expect", [
    ("N", 30, 30), ("N/3", 30, 10), ("N/3", 20, 7), (16, 100, 16), ("24", 30, 24),
])
def test_parse_p_rule(rule, n, expect):
    assert parse_p_rule(rule, n) == expect


def test_parse_p_rule_rejects_garbage():
    with pytest.raises(ConfigurationError):
        parse_p_rule("N/x", 10)
    with pytest.raises(ConfigurationError):
        parse_p_rule("huh", 10)


# ---------------------------------------------------------------------------
# rate-vs-n sweep

def test_rate_sweep_rows_and_csv(tmp_path):
    cfg = small_rate_cfg(tmp_path)
    rows = run_rate_vs_n(cfg, echo=None)
    assert len(rows) == 4
    header, raw = read_csv_rows(cfg.out)
    assert header == RATE_VS_N_COLUMNS
    assert len(raw) == 4
    for row in rows:
        assert row["status"] == "ok"
        assert row["mc_rate_mmse"] >= row["mc_rate_mf"]
        assert row["de_rate_mf"] > 0 and row["cf_rate_mf"] > 0
        # approximation and closed form coincide on this geometry
        assert row["de_rate_mf"] == pytest.approx(row["cf_rate_mf"], rel=1e-9)
        assert row["de_rate_mmse"] == pytest.approx(row["cf_rate_mmse"], rel=1e-6)


def test_rate_sweep_dry_run_header_only(tmp_path, capsys):
    cfg = small_rate_cfg(tmp_path, trials=0)
    rows = run_rate_vs_n(cfg)
    assert rows == []
    out = capsys.readouterr().out
    assert "config" in out and "rate-vs-n" in out
    content = (tmp_path / "rates.csv").read_text()
    assert content.strip() == ",".join(RATE_VS_N_COLUMNS)


def test_rate_sweep_deterministic_bytes(tmp_path):
    cfg1 = small_rate_cfg(tmp_path, out=str(tmp_path / "a.csv"))
    cfg2 = small_rate_cfg(tmp_path, out=str(tmp_path / "b.csv"))
    run_rate_vs_n(cfg1, echo=None)
    run_rate_vs_n(cfg2, echo=None)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_rate_sweep_resume_reuses_rows(tmp_path):
    cfg = small_rate_cfg(tmp_path, n_grid=(8,))
    run_rate_vs_n(cfg, echo=None)
    # poison the finished row; a resumed run must keep it verbatim
    path = tmp_path / "rates.csv"
    text = path.read_text().replace("ok", "ok-sentinel")
    path.write_text(text)
    cfg_full = small_rate_cfg(tmp_path, n_grid=(8, 12))
    rows = run_rate_vs_n(cfg_full, echo=None)
    content = path.read_text()
    assert content.count("ok-sentinel") == 2   # the two resumed (n=8) rows
    header, raw = read_csv_rows(path)
    assert len(raw) == 4


def test_rate_sweep_explicit_p_rule_failure_rows(tmp_path):
    cfg = small_rate_cfg(tmp_path, p_rules=(64,), n_grid=(8,))
    rows = run_rate_vs_n(cfg, echo=None)
    assert rows[0]["status"].startswith("failed")


def test_rate_sweep_worker_pool_matches_serial(tmp_path):
    serial = small_rate_cfg(tmp_path, out=str(tmp_path / "s.csv"), threads=1)
    pooled = small_rate_cfg(tmp_path, out=str(tmp_path / "p.csv"), threads=2)
    run_rate_vs_n(serial, echo=None)
    run_rate_vs_n(pooled, echo=None)
    assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "p.csv").read_bytes()


# ---------------------------------------------------------------------------
# dof-contour sweep

def test_dof_contour_rows(tmp_path):
    cfg = ExperimentConfig(experiment="dof-contour", cells=4, alpha=0.3,
                           eta_grid=(0.5, 0.9), rho_n_db_grid=(10.0, 20.0),
                           out=str(tmp_path / "dof.csv"))
    rows = run_dof_contour(cfg, echo=None)
    assert len(rows) == 4
    header, raw = read_csv_rows(cfg.out)
    assert header == DOF_CONTOUR_COLUMNS
    by_key = {(r["rho_n_db"], r["eta"]): r for r in rows}
    anchor = by_key[(20.0, 0.9)]
    assert anchor["dof_mf"] == pytest.approx(87.74, abs=0.05)
    assert 53.0 <= anchor["dof_mmse"] <= 66.0
    for row in rows:
        if row["status_mf"] == "ok" and row["status_mmse"] == "ok":
            assert row["dof_mmse"] <= row["dof_mf"]
    # target monotonicity at fixed effective SNR
    assert by_key[(20.0, 0.9)]["dof_mf"] > by_key[(20.0, 0.5)]["dof_mf"]


def test_dof_contour_emits_infeasible_rows(tmp_path):
    cfg = ExperimentConfig(experiment="dof-contour", cells=4, alpha=0.3,
                           eta_grid=(0.9,), rho_n_db_grid=(-10.0,),
                           out=str(tmp_path / "dof.csv"))
    rows = run_dof_contour(cfg, echo=None)
    assert rows[0]["status_mf"] == "infeasible"
    assert rows[0]["dof_mf"] is None
    header, raw = read_csv_rows(cfg.out)
    assert raw[0][header.index("dof_mf")] == ""
    assert raw[0][header.index("status_mf")] == "infeasible"


def test_dof_contour_requires_contamination():
    cfg = ExperimentConfig(experiment="dof-contour", cells=1)
    with pytest.raises(ConfigurationError):
        run_dof_contour(cfg, echo=None)


# ---------------------------------------------------------------------------
# validation suite and CLI

FAST_CHECKS = ("profile-assumptions", "estimate-consistency",
               "fixed-point-scalar", "closedform-order", "determinism")


def test_validation_subset_passes(tmp_path):
    out = tmp_path / "report.json"
    cfg = ExperimentConfig(experiment="validate", checks=FAST_CHECKS,
                           out=str(out))
    report = run_validation_suite(cfg, echo=None)
    assert report["passed"]
    data = json.loads(out.read_text())
    assert [c["name"] for c in data["checks"]] == list(FAST_CHECKS)
    assert all(c["passed"] for c in data["checks"])


def test_validation_unknown_check_rejected():
    cfg = ExperimentConfig(experiment="validate", checks=("nope",))
    with pytest.raises(ConfigurationError):
        run_validation_suite(cfg, echo=None)


def test_validation_injected_tolerance_fails_by_name():
    cfg = ExperimentConfig(experiment="validate",
                           checks=("fixed-point-scalar",),
                           tolerances={"tol_scalar_fp": 1e-18})
    report = run_validation_suite(cfg, echo=None)
    assert not report["passed"]
    assert report["checks"][0]["name"] == "fixed-point-scalar"
    assert not report["checks"][0]["passed"]


def test_cli_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "validate.toml"
    cfg.write_text('checks = ["fixed-point-scalar", "determinism"]\n')
    assert main(["validate", "--config", str(cfg)]) == 0

    bad = tmp_path / "bad.toml"
    bad.write_text('experiment = "validate"\nchecks = []\n')
    assert main(["validate", "--config", str(bad)]) == 2
    assert "configuration error" in capsys.readouterr().err

    inject = tmp_path / "inject.toml"
    inject.write_text('checks = ["fixed-point-scalar"]\ntol_scalar_fp = 1e-18\n')
    assert main(["validate", "--config", str(inject)]) == 1


def test_cli_rate_vs_n_roundtrip(tmp_path):
    cfg = tmp_path / "rates.toml"
    out = tmp_path / "rates.csv"
    cfg.write_text(
        'experiment = "rate-vs-n"\ncells = 2\nusers = 2\nalpha = 0.2\n'
        'n_grid = [8]\np_rules = ["N"]\n')
    code = main(["rate-vs-n", "--config", str(cfg), "--out", str(out),
                 "--trials", "2", "--seed", "3"])
    assert code == 0
    header, raw = read_csv_rows(out)
    assert header == RATE_VS_N_COLUMNS
    assert len(raw) == 1
    assert raw[0][header.index("seed")] == "3"
    assert raw[0][header.index("trials")] == "2"
