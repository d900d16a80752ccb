"""Experiment drivers: the rate-versus-antennas sweep, the DoF-contour
planner sweep, and the self-check suite, all with CSV/JSON persistence.

Configs are flat TOML documents (comments allowed, every value typed); every
CSV row carries the full parameter set that produced it, so a file can be
re-read, resumed, or reproduced without external context. Rows are keyed by
their parameter columns: re-running a sweep with an existing output file
recomputes only the missing points and leaves finished rows byte-identical.
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:           # Python 3.10
    import tomli as tomllib

from . import __version__
from .model import (ConfigurationError, SystemConfig, SimpleModelSpec,
                    build_simple_profile, orthonormal_columns, validate_profile,
                    estimation_statistics, mmse_estimate, draw_channels,
                    draw_pilot_observation)
from .detect import (ergodic_rates_paired, mmse_filter, conditional_sinr,
                     conditional_denominator_mc)
from .deteq import de_sinr_mf, de_sinr_mmse
from .closedform import (SimpleSystemPoint, gamma_mf_simple, gamma_mmse_simple,
                         rate_mf_simple, rate_mmse_simple, gamma_rate_infinity,
                         dof_required_mf, dof_required_mmse)
from .rmt import (FixedPointProblem, solve_fixed_point, solve_derivative,
                  resolvent_trace_oracle)
from .rng import RngTree, complex_normal

EXPERIMENTS = ("rate-vs-n", "dof-contour", "validate")

DEFAULT_N_GRID = tuple(range(20, 401, 20))
DEFAULT_ETA_GRID = (0.5, 0.65, 0.8, 0.9, 0.95)
DEFAULT_RHO_N_DB_GRID = tuple(float(db) for db in range(0, 31, 2))


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass
class ExperimentConfig:
    experiment: str
    cells: int = 4
    users: int = 10
    rho_db: float = 0.0
    rho_tau: float = math.inf
    alpha: float = 0.1
    trials: int = 500
    seed: int = 12345
    threads: int = 1
    out: str | None = None
    n_grid: tuple = DEFAULT_N_GRID
    p_rules: tuple = ("N", "N/3")
    basis: str = "dft"
    rho_n_db_grid: tuple = DEFAULT_RHO_N_DB_GRID
    eta_grid: tuple = DEFAULT_ETA_GRID
    lam: float | None = None          # None: 1 / (rho N) per point
    checks: tuple | None = None       # validate subset, None = all
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}")
        if self.trials < 0:
            raise ConfigurationError("trials must be >= 0")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        for name in ("n_grid", "p_rules", "rho_n_db_grid", "eta_grid"):
            grid = tuple(getattr(self, name))
            if not grid:
                raise ConfigurationError(f"{name} must not be empty")
            object.__setattr__(self, name, grid)
        if self.checks is not None:
            self.checks = tuple(self.checks)
            if not self.checks:
                raise ConfigurationError("checks selection must not be empty")


_CONFIG_KEYS = {
    "experiment", "cells", "users", "rho_db", "rho_tau", "alpha", "trials",
    "seed", "threads", "out", "n_grid", "p_rules", "basis",
    "rho_n_db_grid", "eta_grid", "lam", "checks",
}


def load_config(path, experiment=None, overrides=None):
    """Read a flat TOML config; CLI overrides win over file values."""
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    tolerances = {k: v for k, v in data.items() if k.startswith("tol_")}
    unknown = set(data) - _CONFIG_KEYS - set(tolerances)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in tolerances:
        data.pop(key)
    if experiment is not None:
        file_exp = data.get("experiment")
        if file_exp is not None and file_exp != experiment:
            raise ConfigurationError(
                f"config file is for experiment {file_exp!r}, command ran {experiment!r}")
        data["experiment"] = experiment
    if "experiment" not in data:
        raise ConfigurationError("no experiment given (config key or subcommand)")
    if data["experiment"] == "dof-contour" and "alpha" not in data:
        data["alpha"] = 0.3   # stronger-interference default for the planner sweep
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return ExperimentConfig(tolerances=tolerances, **data)


# ---------------------------------------------------------------------------
# CSV plumbing

RATE_VS_N_COLUMNS = (
    "experiment", "n", "p", "p_rule", "cells", "users", "alpha", "rho_db",
    "rho_tau", "trials", "seed", "mc_rate_mf", "se_mf", "de_rate_mf",
    "mc_rate_mmse", "se_mmse", "de_rate_mmse", "cf_rate_mf", "cf_rate_mmse",
    "status", "version",
)
RATE_VS_N_KEY = ("n", "p_rule", "cells", "users", "alpha", "rho_db",
                 "rho_tau", "trials", "seed")

DOF_CONTOUR_COLUMNS = (
    "experiment", "rho_n_db", "eta", "alpha", "cells", "lam", "r_inf",
    "dof_mf", "status_mf", "dof_mmse", "status_mmse", "seed", "version",
)
DOF_CONTOUR_KEY = ("rho_n_db", "eta", "alpha", "cells", "lam")


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return format(v, ".12g")
    return str(v)


def write_csv(path, columns, rows):
    """Rows are dicts (formatted on write) or pre-formatted lists."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                writer.writerow([format_value(row.get(c)) for c in columns])
            else:
                writer.writerow(row)


def read_csv_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        return header, [row for row in reader if row]


def load_completed(path, columns, key_columns):
    """Map resume keys to already-computed raw rows of a previous run."""
    if not path or not os.path.exists(path):
        return {}
    header, rows = read_csv_rows(path)
    if header != tuple(columns):
        return {}   # schema changed, recompute everything
    idx = [columns.index(c) for c in key_columns]
    return {tuple(row[i] for i in idx): row for row in rows}


def _row_key(row_dict, columns, key_columns):
    formatted = {c: format_value(row_dict.get(c)) for c in columns}
    return tuple(formatted[c] for c in key_columns)


# ---------------------------------------------------------------------------
# rate-vs-n

def parse_p_rule(rule, n):
    """DoF count for one sweep point: "N", "N/<d>", or an explicit integer."""
    if isinstance(rule, int):
        return rule
    text = str(rule).strip()
    if text == "N":
        return n
    if text.startswith("N/"):
        try:
            d = float(text[2:])
        except ValueError:
            raise ConfigurationError(f"bad P rule {rule!r}") from None
        if d <= 0:
            raise ConfigurationError(f"bad P rule {rule!r}")
        return max(1, round(n / d))
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"bad P rule {rule!r}") from None


def _simple_setup(cfg, n, p):
    rho = db_to_linear(cfg.rho_db)
    sys_cfg = SystemConfig(L=cfg.cells, K=cfg.users, N=n, rho=rho,
                           rho_tau=cfg.rho_tau, seed=cfg.seed)
    A = orthonormal_columns(n, p, cfg.basis)
    profile = build_simple_profile(sys_cfg, SimpleModelSpec(P=p, alpha=cfg.alpha, A=A))
    return sys_cfg, profile


def compute_rate_point(payload):
    """One (n, p_rule) sweep point; module-level so worker pools can run it."""
    cfg = ExperimentConfig(**payload["config"])
    n, rule = payload["n"], payload["p_rule"]
    row = {
        "experiment": cfg.experiment, "n": n, "p_rule": rule,
        "cells": cfg.cells, "users": cfg.users, "alpha": cfg.alpha,
        "rho_db": cfg.rho_db, "rho_tau": cfg.rho_tau, "trials": cfg.trials,
        "seed": cfg.seed, "version": __version__, "status": "ok",
    }
    try:
        p = parse_p_rule(rule, n)
        row["p"] = p
        sys_cfg, profile = _simple_setup(cfg, n, p)
        stats = estimation_statistics(profile, sys_cfg)
        lam = cfg.lam if cfg.lam is not None else 1.0 / (sys_cfg.rho * n)
        row["de_rate_mf"] = float(de_sinr_mf(stats).rate[0, 0])
        row["de_rate_mmse"] = float(de_sinr_mmse(stats, lam=lam).rate[0, 0])
        point = SimpleSystemPoint(sys_cfg.rho * n, p / cfg.users, cfg.alpha,
                                  cfg.cells, lam)
        row["cf_rate_mf"] = rate_mf_simple(point)
        row["cf_rate_mmse"] = rate_mmse_simple(point)
        stream = RngTree(cfg.seed).child(n, p)
        mf, mm = ergodic_rates_paired(profile, sys_cfg, trials=cfg.trials,
                                      lam=lam, stream=stream, stats=stats)
        row["mc_rate_mf"] = mf.mean_rate
        row["se_mf"] = mf.se
        row["mc_rate_mmse"] = mm.mean_rate
        row["se_mmse"] = mm.se
    except ConfigurationError as exc:
        row["status"] = f"failed: {exc}"
    return row


def run_rate_vs_n(cfg, echo=print):
    """Monte Carlo and approximation rates over the antenna grid.

    Returns the row dicts (or raw resumed rows) in grid order; writes the CSV
    when cfg.out is set. With trials = 0 the sweep dry-runs: header-only CSV,
    config echoed.
    """
    if echo:
        echo(f"# rate-vs-n config: {json.dumps(_config_summary(cfg))}")
    if cfg.trials == 0:
        if cfg.out:
            write_csv(cfg.out, RATE_VS_N_COLUMNS, [])
        return []
    completed = load_completed(cfg.out, RATE_VS_N_COLUMNS, RATE_VS_N_KEY)
    points = [(n, rule) for rule in cfg.p_rules for n in cfg.n_grid]
    payloads, rows, pending = [], [], []
    for n, rule in points:
        probe = {"experiment": cfg.experiment, "n": n, "p_rule": rule,
                 "cells": cfg.cells, "users": cfg.users, "alpha": cfg.alpha,
                 "rho_db": cfg.rho_db, "rho_tau": cfg.rho_tau,
                 "trials": cfg.trials, "seed": cfg.seed}
        key = _row_key(probe, RATE_VS_N_COLUMNS, RATE_VS_N_KEY)
        if key in completed:
            rows.append(completed[key])
        else:
            rows.append(None)
            pending.append(len(rows) - 1)
            payloads.append({"config": asdict(cfg), "n": n, "p_rule": rule})
    computed = _map_points(compute_rate_point, payloads, cfg.threads)
    for slot, row in zip(pending, computed):
        rows[slot] = row
    if cfg.out:
        write_csv(cfg.out, RATE_VS_N_COLUMNS, rows)
    return rows


def _map_points(fn, payloads, threads):
    if not payloads:
        return []
    if threads <= 1 or len(payloads) == 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, payloads))


def _config_summary(cfg):
    d = asdict(cfg)
    d.pop("tolerances", None)
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
            for k, v in d.items() if v is not None}


# ---------------------------------------------------------------------------
# dof-contour

def compute_dof_point(payload):
    cfg = ExperimentConfig(**payload["config"])
    db, eta = payload["rho_n_db"], payload["eta"]
    rho_n = db_to_linear(db)
    lam = cfg.lam if cfg.lam is not None else 1.0 / rho_n
    _, r_inf = gamma_rate_infinity(cfg.alpha, cfg.cells)
    row = {
        "experiment": cfg.experiment, "rho_n_db": db, "eta": eta,
        "alpha": cfg.alpha, "cells": cfg.cells, "lam": lam, "r_inf": r_inf,
        "seed": cfg.seed, "version": __version__,
    }
    dof_mf = dof_required_mf(eta, rho_n, cfg.alpha, cfg.cells)
    row["dof_mf"] = None if math.isinf(dof_mf) else dof_mf
    row["status_mf"] = "infeasible" if math.isinf(dof_mf) else "ok"
    dof_mm = dof_required_mmse(eta, rho_n, cfg.alpha, cfg.cells, lam=lam)
    row["dof_mmse"] = None if math.isinf(dof_mm) else dof_mm
    row["status_mmse"] = "infeasible" if math.isinf(dof_mm) else "ok"
    return row


def run_dof_contour(cfg, echo=print):
    """Required DoF per user to reach eta * R_inf over the (rho N, eta) grid."""
    if echo:
        echo(f"# dof-contour config: {json.dumps(_config_summary(cfg))}")
    if cfg.cells < 2 or cfg.alpha == 0:
        raise ConfigurationError(
            "dof-contour needs pilot contamination (cells >= 2 and alpha > 0)")
    completed = load_completed(cfg.out, DOF_CONTOUR_COLUMNS, DOF_CONTOUR_KEY)
    rows, payloads, pending = [], [], []
    for eta in cfg.eta_grid:
        for db in cfg.rho_n_db_grid:
            lam = cfg.lam if cfg.lam is not None else 1.0 / db_to_linear(db)
            probe = {"rho_n_db": db, "eta": eta, "alpha": cfg.alpha,
                     "cells": cfg.cells, "lam": lam}
            key = _row_key(probe, DOF_CONTOUR_COLUMNS, DOF_CONTOUR_KEY)
            if key in completed:
                rows.append(completed[key])
            else:
                rows.append(None)
                pending.append(len(rows) - 1)
                payloads.append({"config": asdict(cfg), "rho_n_db": db, "eta": eta})
    computed = _map_points(compute_dof_point, payloads, cfg.threads)
    for slot, row in zip(pending, computed):
        rows[slot] = row
    if cfg.out:
        write_csv(cfg.out, DOF_CONTOUR_COLUMNS, rows)
    return rows


# ---------------------------------------------------------------------------
# validation suite

@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "measured": _jsonable(self.measured), "bound": _jsonable(self.bound),
                "detail": self.detail}


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _suite_profile(cfg):
    sys_cfg = SystemConfig(L=3, K=4, N=36, rho=1.0, rho_tau=cfg.rho_tau,
                           seed=cfg.seed)
    A = orthonormal_columns(36, 12, cfg.basis)
    profile = build_simple_profile(sys_cfg, SimpleModelSpec(P=12, alpha=0.15, A=A))
    return sys_cfg, profile


def check_profile_assumptions(cfg, tol):
    sys_cfg, profile = _suite_profile(cfg)
    report = validate_profile(profile, sys_cfg)
    worst_eig = min(e.min_eigenvalue for e in report.entries)
    floor = tol.get("tol_eig_floor", -1e-10)
    passed = report.ok and worst_eig >= floor
    return CheckResult("profile-assumptions", passed, worst_eig, floor,
                       f"{len(report.violations)} violations")


def check_estimate_consistency(cfg, tol):
    sys_cfg, profile = _suite_profile(cfg)
    stats = estimation_statistics(profile, sys_cfg)
    stream = RngTree(cfg.seed)
    draw = draw_channels(profile, stream.child(0))
    y = draw_pilot_observation(profile, draw, sys_cfg, stream.child(1))
    est = mmse_estimate(profile, y, sys_cfg, stats=stats)
    worst = 0.0
    for j in range(profile.L):
        for k in range(profile.K):
            ref = profile.apply(j, j, k, stats.q(j, k) @ y[j, :, k])
            worst = max(worst, float(np.abs(ref - est.hhat[j, :, k]).max()))
    bound = tol.get("tol_consistency", 1e-10)
    return CheckResult("estimate-consistency", worst <= bound, worst, bound)


def check_error_covariance(cfg, tol):
    sys_cfg, profile = _suite_profile(cfg)
    stats = estimation_statistics(profile, sys_cfg)
    draws = int(tol.get("tol_cov_draws", 3000))
    c_ref = float(np.real(np.trace(stats.c_own(0, 0))))
    stream = RngTree(cfg.seed).child(7)
    samples = np.empty(draws)
    cross = np.empty(draws, dtype=complex)
    for t in range(draws):
        draw = draw_channels(profile, stream.child(0, t))
        y = draw_pilot_observation(profile, draw, sys_cfg, stream.child(1, t))
        est = mmse_estimate(profile, y, sys_cfg, stats=stats)
        err = draw.H[0, 0, :, 0] - est.hhat[0, :, 0]
        samples[t] = np.sum(np.abs(err) ** 2)
        cross[t] = np.vdot(est.hhat[0, :, 0], err)
    z_cov = abs(samples.mean() - c_ref) / (samples.std(ddof=1) / math.sqrt(draws))
    se_cross = cross.std(ddof=1) / math.sqrt(draws)
    z_orth = abs(cross.mean()) / se_cross
    bound = tol.get("tol_mc_z", 3.0)
    measured = max(z_cov, z_orth)
    return CheckResult("error-covariance-mc", measured <= bound, measured, bound,
                       f"z_cov={z_cov:.2f} z_orth={z_orth:.2f}")


def check_channel_energy(cfg, tol):
    sys_cfg, profile = _suite_profile(cfg)
    draws = int(tol.get("tol_cov_draws", 3000))
    stream = RngTree(cfg.seed).child(8)
    samples = np.empty(draws)
    for t in range(draws):
        draw = draw_channels(profile, stream.child(t))
        samples[t] = np.sum(np.abs(draw.H[0, 0]) ** 2)
    expect = profile.K * profile.N
    z = abs(samples.mean() - expect) / (samples.std(ddof=1) / math.sqrt(draws))
    bound = tol.get("tol_mc_z", 3.0)
    return CheckResult("channel-energy", z <= bound, z, bound,
                       f"mean={samples.mean():.2f} expected={expect}")


def check_fixed_point_scalar(cfg, tol):
    N = 24
    problem = FixedPointProblem(R=[np.eye(N, dtype=complex)] * N, rho=1.0)
    sol = solve_fixed_point(problem)
    target = (math.sqrt(5.0) - 1.0) / 2.0
    err = float(np.abs(sol.delta - target).max())
    bound = tol.get("tol_scalar_fp", 1e-10)
    return CheckResult("fixed-point-scalar", err <= bound, err, bound)


def check_fixed_point_uniqueness(cfg, tol):
    gen = RngTree(cfg.seed).child(9).generator()
    N, K = 24, 6
    R = []
    for _ in range(K):
        F = complex_normal(gen, (N, N))
        R.append(F @ F.conj().T / N)
    problem = FixedPointProblem(R=R, rho=0.7)
    base = solve_fixed_point(problem)
    spread = 0.0
    for _ in range(10):
        init = gen.uniform(0.0, 10.0, size=K)
        sol = solve_fixed_point(problem, init=init)
        spread = max(spread, float(np.abs(sol.delta - base.delta).max()))
    bound = tol.get("tol_uniqueness", 10 * 1e-12)
    return CheckResult("fixed-point-uniqueness", spread <= bound, spread, bound)


def check_derivative_fd(cfg, tol):
    gen = RngTree(cfg.seed).child(10).generator()
    N, K = 32, 5
    R = []
    for _ in range(K):
        F = complex_normal(gen, (N, N))
        R.append(F @ F.conj().T / N)
    F = complex_normal(gen, (N, N))
    S = F @ F.conj().T / N
    D = np.eye(N, dtype=complex)
    worst = 0.0
    for rho in (0.5, 1.0, 2.0):
        problem = FixedPointProblem(R=R, rho=rho, S=S, D=D)
        sol = solve_fixed_point(problem)
        der = solve_derivative(problem, sol, Theta=None)
        h = 1e-4 * rho
        up = solve_fixed_point(FixedPointProblem(R=R, rho=rho + h, S=S, D=D))
        dn = solve_fixed_point(FixedPointProblem(R=R, rho=rho - h, S=S, D=D))
        fd = -(up.trace_functional(D) - dn.trace_functional(D)).real / (2 * h)
        an = der.trace_functional(D).real
        worst = max(worst, abs(fd - an) / abs(an))
    bound = tol.get("tol_derivative_fd", 1e-5)
    return CheckResult("derivative-finite-difference", worst <= bound, worst, bound)


def check_resolvent_oracle(cfg, tol):
    gen = RngTree(cfg.seed).child(11).generator()
    N, K = 64, 16
    R = []
    for _ in range(K):
        F = complex_normal(gen, (N, N))
        R.append(F @ F.conj().T / N)
    F = complex_normal(gen, (N, N))
    S = F @ F.conj().T / N
    F = complex_normal(gen, (N, N))
    D = F @ F.conj().T / N
    problem = FixedPointProblem(R=R, rho=0.5, S=S, D=D)
    sol = solve_fixed_point(problem)
    mean, se = resolvent_trace_oracle(problem, draws=200, rng=RngTree(cfg.seed).child(12))
    z_lin = abs(mean - sol.trace_functional(D).real) / se
    F = complex_normal(gen, (N, N))
    Theta = F @ F.conj().T / N
    der = solve_derivative(problem, sol, Theta=Theta)
    mean2, se2 = resolvent_trace_oracle(problem, Theta=Theta, draws=200,
                                        rng=RngTree(cfg.seed).child(13))
    z_quad = abs(mean2 - der.trace_functional(D).real) / se2
    bound = tol.get("tol_mc_z", 3.0)
    measured = max(z_lin, z_quad)
    return CheckResult("resolvent-oracle", measured <= bound, measured, bound,
                       f"z_linear={z_lin:.2f} z_quadratic={z_quad:.2f}")


def check_specialization(cfg, tol):
    worst = 0.0
    for rho_n in (10.0, 100.0):
        for pk in (10.0, 40.0):
            N, K = 80, 2
            P = int(pk * K)
            sys_cfg = SystemConfig(L=4, K=K, N=N, rho=rho_n / N,
                                   rho_tau=math.inf, seed=cfg.seed)
            A = orthonormal_columns(N, P, cfg.basis)
            profile = build_simple_profile(
                sys_cfg, SimpleModelSpec(P=P, alpha=0.3, A=A))
            stats = estimation_statistics(profile, sys_cfg)
            point = SimpleSystemPoint(rho_n, pk, 0.3, 4)
            g_mf, _ = gamma_mf_simple(point)
            g_mm, _ = gamma_mmse_simple(point)
            worst = max(worst, abs(de_sinr_mf(stats).gamma[0, 0] - g_mf) / g_mf)
            worst = max(worst, abs(de_sinr_mmse(stats).gamma[0, 0] - g_mm) / g_mm)
    bound = tol.get("tol_specialization", 1e-6)
    return CheckResult("specialization", worst <= bound, worst, bound)


def check_closedform_order(cfg, tol):
    margin = math.inf
    for rho_n in np.logspace(0.5, 3.0, 10):
        for pk in np.logspace(0.3, 2.5, 10):
            point = SimpleSystemPoint(float(rho_n), float(pk), 0.3, 4)
            g_mf, _ = gamma_mf_simple(point)
            g_mm, _ = gamma_mmse_simple(point)
            g_inf, _ = gamma_rate_infinity(0.3, 4)
            margin = min(margin, g_mm - g_mf, g_inf - g_mm)
    bound = tol.get("tol_order_margin", -1e-12)
    return CheckResult("closedform-order", margin >= bound, margin, bound,
                       "min(gamma_mmse - gamma_mf, gamma_inf - gamma_mmse)")


def check_conditional_sinr_oracle(cfg, tol):
    worst = 0.0
    for idx in range(3):
        gen_cfg = SystemConfig(L=2, K=3, N=10, rho=1.5, rho_tau=4.0,
                               seed=cfg.seed + idx)
        A = orthonormal_columns(10, 6, cfg.basis)
        profile = build_simple_profile(gen_cfg, SimpleModelSpec(P=6, alpha=0.4, A=A))
        stats = estimation_statistics(profile, gen_cfg)
        stream = RngTree(gen_cfg.seed).child(20 + idx)
        draw = draw_channels(profile, stream.child(0))
        y = draw_pilot_observation(profile, draw, gen_cfg, stream.child(1))
        est = mmse_estimate(profile, y, gen_cfg, stats=stats)
        filt = mmse_filter(est)
        analytic = conditional_sinr(filt, est).denominator
        mc, se = conditional_denominator_mc(filt, est, draws=800,
                                            rng=stream.child(2))
        worst = max(worst, float((np.abs(mc - analytic) / se).max()))
    bound = tol.get("tol_mc_z", 3.0)
    return CheckResult("conditional-sinr-oracle", worst <= bound, worst, bound)


def check_mc_vs_de(cfg, tol):
    sys_cfg = SystemConfig(L=4, K=10, N=60, rho=1.0, rho_tau=math.inf,
                           seed=cfg.seed)
    A = orthonormal_columns(60, 60, cfg.basis)
    profile = build_simple_profile(sys_cfg, SimpleModelSpec(P=60, alpha=0.1, A=A))
    stats = estimation_statistics(profile, sys_cfg)
    mf, mm = ergodic_rates_paired(profile, sys_cfg, trials=150,
                                  stream=RngTree(cfg.seed).child(30), stats=stats)
    de_mf = float(de_sinr_mf(stats).rate[0, 0])
    de_mm = float(de_sinr_mmse(stats).rate[0, 0])
    gap = max(abs(mf.mean_rate - de_mf) / de_mf, abs(mm.mean_rate - de_mm) / de_mm)
    order_ok = bool((mm.samples >= mf.samples - 1e-12).all())
    bound = tol.get("tol_mc_de_gap", 0.05)
    return CheckResult("mc-vs-de", gap <= bound and order_ok, gap, bound,
                       f"paired_order_ok={order_ok}")


def check_determinism(cfg, tol):
    sys_cfg = SystemConfig(L=2, K=3, N=16, rho=1.0, rho_tau=math.inf,
                           seed=cfg.seed)
    A = orthonormal_columns(16, 8, cfg.basis)
    profile = build_simple_profile(sys_cfg, SimpleModelSpec(P=8, alpha=0.2, A=A))
    runs = []
    for _ in range(2):
        mf, mm = ergodic_rates_paired(profile, sys_cfg, trials=10,
                                      stream=RngTree(cfg.seed).child(31))
        runs.append((mf.mean_rate, mm.mean_rate))
    diff = max(abs(runs[0][0] - runs[1][0]), abs(runs[0][1] - runs[1][1]))
    return CheckResult("determinism", diff == 0.0, diff, 0.0)


ALL_CHECKS = {
    "profile-assumptions": check_profile_assumptions,
    "estimate-consistency": check_estimate_consistency,
    "error-covariance-mc": check_error_covariance,
    "channel-energy": check_channel_energy,
    "fixed-point-scalar": check_fixed_point_scalar,
    "fixed-point-uniqueness": check_fixed_point_uniqueness,
    "derivative-finite-difference": check_derivative_fd,
    "resolvent-oracle": check_resolvent_oracle,
    "specialization": check_specialization,
    "closedform-order": check_closedform_order,
    "conditional-sinr-oracle": check_conditional_sinr_oracle,
    "mc-vs-de": check_mc_vs_de,
    "determinism": check_determinism,
}


def run_validation_suite(cfg, echo=print):
    """Execute the named self-checks; returns a machine-readable report."""
    names = cfg.checks if cfg.checks is not None else tuple(ALL_CHECKS)
    unknown = [n for n in names if n not in ALL_CHECKS]
    if unknown:
        raise ConfigurationError(f"unknown checks: {unknown}")
    results = []
    for name in names:
        result = ALL_CHECKS[name](cfg, cfg.tolerances)
        results.append(result)
        if echo:
            status = "PASS" if result.passed else "FAIL"
            echo(f"{status} {result.name}: measured={_jsonable(result.measured)} "
                 f"bound={_jsonable(result.bound)} {result.detail}")
    report = {
        "experiment": "validate",
        "version": __version__,
        "seed": cfg.seed,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    if cfg.out:
        with open(cfg.out, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return report
