"""Linear detection: matched filter and regularized MMSE filter, the exact
conditional SINR given the pilot observations, and Monte Carlo estimation of
ergodic achievable rates.

Conditioning convention: the pilot observations y determine the conditional
law of every channel (own-cell channels split into estimate plus independent
error; same-pilot cross-cell channels have conditional mean m = R Q y and
conditional covariance R - R Q R). The SINR denominator is the conditional
expectation of the received interference-plus-noise power, which is available
in closed form, so no inner averaging is needed per trial. A brute-force
nested Monte Carlo version of the same expectation is kept as a test oracle.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.linalg import solve

from .model import PilotStatistics, mmse_estimate, draw_channels, draw_pilot_observation
from .rng import RngTree, complex_normal
from . import model as _model

# substream namespaces for the Monte Carlo drivers
_STREAM_CHANNELS = 0
_STREAM_PILOT_NOISE = 1
_STREAM_CONDITIONAL = 2


@dataclass
class LinearFilter:
    """Receive filters r[j, :, m] for every user m of every cell j."""

    vectors: np.ndarray    # (L, N, K)
    kind: str              # "mf" | "mmse"
    lam: float | None = None


def interference_matrix(stats):
    """Z_j = sum_k (R_jjk - Phi_jjk) + sum_{l != j, k} R_jlk per cell.

    Accepts either the estimator statistics or a per-trial estimate (the
    matrix is trial-independent either way).
    """
    stats = getattr(stats, "stats", stats)
    return [stats.z(j) for j in range(stats.profile.L)]


def matched_filter(estimate):
    return LinearFilter(estimate.hhat.copy(), "mf")


def default_regularizer(config):
    return 1.0 / (config.rho * config.N)


def mmse_filter(estimate, Z=None, lam=None):
    """r = (Hhat Hhat^H + Z + N lam I)^{-1} hhat, per cell.

    lam defaults to 1/(rho N); Z defaults to the interference matrix of the
    estimate's statistics. lam > 0 keeps the system positive definite.
    """
    stats = estimate.stats
    cfg = estimate.config
    if lam is None:
        lam = default_regularizer(cfg)
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if Z is None:
        Z = interference_matrix(stats)
    L, N, K = estimate.hhat.shape
    vectors = np.empty_like(estimate.hhat)
    for j in range(L):
        Hh = estimate.hhat[j]
        G = Hh @ Hh.conj().T + Z[j] + (N * lam) * np.eye(N)
        vectors[j] = solve(G, Hh)
    return LinearFilter(vectors, "mmse", lam)


@dataclass
class SinrReport:
    """Per-user conditional SINR with its denominator split into noise,
    estimation error, intra-cell interference, mean inter-cell interference,
    and pilot contamination. The five parts sum to the exact conditional
    denominator; each is nonnegative."""

    sinr: np.ndarray             # (L, K)
    noise: np.ndarray
    estimation_error: np.ndarray
    intracell: np.ndarray
    intercell_mean: np.ndarray
    contamination: np.ndarray
    degenerate: np.ndarray       # bool (L, K), True where the filter is zero

    @property
    def rate(self):
        return np.log2(1.0 + self.sinr)

    @property
    def denominator(self):
        return (self.noise + self.estimation_error + self.intracell
                + self.intercell_mean + self.contamination)


def conditional_sinr(filters, estimate):
    """Exact conditional SINR of each user given the pilot observations.

    numerator   |r^H hhat|^2
    denominator r^H B r with
    B = (1/rho) I + sum_{k != m} hhat_k hhat_k^H + sum_k C_own_k
        + sum_{l != j} sum_k ( m_lk m_lk^H + C_cross_lk ).
    """
    stats = estimate.stats
    cfg = estimate.config
    L, N, K = estimate.hhat.shape
    sinr = np.zeros((L, K))
    noise = np.zeros((L, K))
    est_err = np.zeros((L, K))
    intra = np.zeros((L, K))
    inter = np.zeros((L, K))
    contam = np.zeros((L, K))
    degenerate = np.zeros((L, K), dtype=bool)

    for j in range(L):
        R = filters.vectors[j]                     # (N, K) columns r_jm
        Hh = estimate.hhat[j]
        cross = R.conj().T @ Hh                    # cross[m, k] = r_m^H hhat_k
        sq = np.abs(cross) ** 2
        num = np.diag(sq).copy()
        intra[j] = sq.sum(axis=1) - num
        norms = np.sum(np.abs(R) ** 2, axis=0)
        noise[j] = norms / cfg.rho
        est_err[j] = np.real(np.sum(R.conj() * (stats.c_own_sum(j) @ R), axis=0))
        inter[j] = np.real(np.sum(R.conj() * (stats.c_cross_sum(j) @ R), axis=0))
        for l in range(L):
            if l == j:
                continue
            contam[j] += np.sum(np.abs(R.conj().T @ estimate.m[(j, l)]) ** 2, axis=1)
        denom = noise[j] + est_err[j] + intra[j] + inter[j] + contam[j]
        zero = norms == 0.0
        degenerate[j] = zero
        safe = ~zero
        sinr[j, safe] = num[safe] / denom[safe]

    return SinrReport(sinr, noise, est_err, intra, inter, contam, degenerate)


def conditional_denominator_mc(filters, estimate, draws=1000, rng=0):
    """Nested Monte Carlo oracle for the conditional SINR denominator.

    Redraws every channel from its conditional law given the pilot
    observations and averages the interference-plus-noise quadratic form.
    Returns (mean, standard error), each of shape (L, K). Slow by design;
    used to validate ``conditional_sinr``.
    """
    stats = estimate.stats
    cfg = estimate.config
    profile = estimate.profile
    L, N, K = estimate.hhat.shape
    tree = rng if isinstance(rng, RngTree) else RngTree(rng)

    own_roots = {(j, k): _model._clamped_root(stats.c_own(j, k))
                 for j in range(L) for k in range(K)}
    cross_roots = {(j, l, k): _model._clamped_root(stats.c_cross(j, l, k))
                   for j in range(L) for l in range(L) if l != j for k in range(K)}

    samples = np.empty((draws, L, K))
    for t in range(draws):
        g = tree.child(_STREAM_CONDITIONAL, t).generator()
        for j in range(L):
            R = filters.vectors[j]
            # conditional own-cell channels: estimate + independent error
            h_own = estimate.hhat[j].copy()
            for k in range(K):
                Fo = own_roots[(j, k)]
                h_own[:, k] += Fo @ complex_normal(g, (Fo.shape[1],))
            # conditional cross-cell channels around their means
            h_cross = {}
            for l in range(L):
                if l == j:
                    continue
                hc = estimate.m[(j, l)].copy()
                for k in range(K):
                    Fc = cross_roots[(j, l, k)]
                    hc[:, k] += Fc @ complex_normal(g, (Fc.shape[1],))
                h_cross[l] = hc
            rh_own = R.conj().T @ h_own            # (m, k)
            norms = np.sum(np.abs(R) ** 2, axis=0)
            err = h_own - estimate.hhat[j]
            rh_err = R.conj().T @ err
            total = norms / cfg.rho
            total = total + np.sum(np.abs(rh_own) ** 2, axis=1)
            # remove own signal term, add back the estimation error term
            total -= np.abs(np.diag(rh_own)) ** 2
            total += np.abs(np.diag(rh_err)) ** 2
            for l, hc in h_cross.items():
                total += np.sum(np.abs(R.conj().T @ hc) ** 2, axis=1)
            samples[t, j] = total
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(draws)
    return mean, se


@dataclass
class RateReport:
    """Monte Carlo estimate of per-user ergodic rates."""

    samples: np.ndarray          # (trials, L, K) per-trial rates
    detector: str
    seed: int

    @property
    def trials(self):
        return self.samples.shape[0]

    @property
    def per_user_mean(self):
        return self.samples.mean(axis=0)

    @property
    def per_user_se(self):
        return self.samples.std(axis=0, ddof=1) / math.sqrt(self.trials)

    @property
    def mean_rate(self):
        """System average rate per user."""
        return float(self.samples.mean())

    @property
    def se(self):
        """Standard error of the system average (over trials)."""
        per_trial = self.samples.mean(axis=(1, 2))
        return float(per_trial.std(ddof=1) / math.sqrt(self.trials))


def _trial_reports(profile, config, trials, lam, stream, detectors, stats):
    L, K = profile.L, profile.K
    out = {d: np.empty((trials, L, K)) for d in detectors}
    Z = None
    for t in range(trials):
        draw = draw_channels(profile, stream.child(_STREAM_CHANNELS, t))
        y = draw_pilot_observation(profile, draw, config,
                                   stream.child(_STREAM_PILOT_NOISE, t))
        est = mmse_estimate(profile, y, config, stats=stats)
        for d in detectors:
            if d == "mf":
                filt = matched_filter(est)
            else:
                if Z is None:
                    Z = interference_matrix(stats)
                filt = mmse_filter(est, Z=Z, lam=lam)
            out[d][t] = conditional_sinr(filt, est).rate
    return out


def ergodic_rate_mc(profile, config, detector="mf", trials=100, lam=None,
                    stream=None, stats=None):
    """Average log2(1 + sinr) over independent pilot and channel draws.

    Deterministic for a fixed config seed: trial t consumes only the
    substreams addressed by t, so any execution order gives the same result.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if detector not in ("mf", "mmse"):
        raise ValueError(f"unknown detector {detector!r}")
    stats = stats or PilotStatistics(profile, config)
    stream = stream or RngTree(config.seed)
    rates = _trial_reports(profile, config, trials, lam, stream, (detector,), stats)
    return RateReport(rates[detector], detector, config.seed)


def ergodic_rates_paired(profile, config, trials=100, lam=None, stream=None,
                         stats=None):
    """Matched-filter and MMSE rate estimates from the same draws.

    Sharing draws makes the per-trial comparison between the detectors exact
    rather than statistical.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    stats = stats or PilotStatistics(profile, config)
    stream = stream or RngTree(config.seed)
    rates = _trial_reports(profile, config, trials, lam, stream, ("mf", "mmse"), stats)
    return (RateReport(rates["mf"], "mf", config.seed),
            RateReport(rates["mmse"], "mmse", config.seed))
