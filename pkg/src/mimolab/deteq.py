"""Deterministic rate approximations for the two linear detectors.

These are the large-system approximations of the per-user SINR: closed traces
for the matched filter, and the fixed-point machinery from ``rmt`` for the
MMSE detector (trace fixed point with R_k = Phi_jjk, S = Z_j / N, regularizer
lam). They depend only on the correlation profile, never on channel draws,
and are validated against Monte Carlo in the tests and the acceptance suite.

Profiles tagged with the reduced-rank simple model are evaluated once per
cell-user class and broadcast, since every (j, m) is statistically identical
there.
"""

from dataclasses import dataclass

import numpy as np

from .rmt import FixedPointProblem, solve_fixed_point, solve_derivative


@dataclass
class MfDeterministicEquivalent:
    """Matched-filter SINR approximation with its denominator split."""

    gamma: np.ndarray           # (L, K)
    noise: np.ndarray
    interference: np.ndarray
    contamination: np.ndarray

    @property
    def rate(self):
        return de_rate(self.gamma)


@dataclass
class MmseDeterministicEquivalent:
    """MMSE SINR approximation plus the solver intermediates per cell."""

    gamma: np.ndarray           # (L, K)
    delta: np.ndarray           # (L, K) numerator quantities
    noise: np.ndarray
    interference: np.ndarray
    contamination: np.ndarray
    solutions: list             # per-cell FixedPointSolution (or one, broadcast)

    @property
    def rate(self):
        return de_rate(self.gamma)


@dataclass
class AsymptoticLimit:
    """Unbounded-array limit: only same-pilot cross-cell leakage survives."""

    beta: np.ndarray            # (L, L, K) normalized traces of Phi
    gamma_inf: np.ndarray       # (L, K), inf where no contamination


def de_rate(gamma):
    """Rate of the SINR approximation, log2(1 + gamma)."""
    return np.log2(1.0 + np.asarray(gamma, dtype=float))


def _factor_trace_with(F, X):
    """(1/N) tr(F F^H X)."""
    return complex(np.einsum("ni,nq,qi->", F.conj(), X, F)) / X.shape[0]


def de_sinr_mf(stats):
    """Matched-filter deterministic equivalent.

    gamma[j, m] = ((1/N) tr Phi_jjm)^2 / (noise + interference + contamination)
    with noise = (1/(rho N^2)) tr Phi_jjm,
    interference = (1/N) sum_{l,k} (1/N) tr(R_jlk Phi_jjm),
    contamination = sum_{l != j} |(1/N) tr Phi_jlm|^2.
    """
    profile, cfg = stats.profile, stats.config
    L, K, N = profile.L, profile.K, profile.N
    if profile.simple_model is not None:
        g, no, itf, ct = _mf_point(stats, 0, 0)
        ones = np.ones((L, K))
        return MfDeterministicEquivalent(g * ones, no * ones, itf * ones, ct * ones)
    gamma = np.zeros((L, K))
    noise = np.zeros((L, K))
    interference = np.zeros((L, K))
    contamination = np.zeros((L, K))
    for j in range(L):
        for m in range(K):
            gamma[j, m], noise[j, m], interference[j, m], contamination[j, m] = \
                _mf_point(stats, j, m)
    return MfDeterministicEquivalent(gamma, noise, interference, contamination)


def _mf_point(stats, j, m):
    profile, cfg = stats.profile, stats.config
    L, K, N = profile.L, profile.K, profile.N
    phi_tr = np.real(stats.phi_trace(j, j, m))
    if phi_tr == 0.0:
        return 0.0, 0.0, 0.0, 0.0
    G = stats.phi_own_factor(j, m)
    noise = phi_tr / (cfg.rho * N)
    interference = 0.0
    simple = profile.simple_model is not None
    for l in range(L):
        ks = (0,) if simple else range(K)
        sub = 0.0
        for k in ks:
            F = profile.factor(j, l, k)
            sub += float(np.sum(np.abs(F.conj().T @ G) ** 2)) / N  # (1/N) tr(R Phi)
        interference += sub * (K if simple else 1)
    interference /= N
    contamination = 0.0
    for l in range(L):
        if l != j:
            contamination += abs(stats.phi_trace(j, l, m)) ** 2
    gamma = phi_tr ** 2 / (noise + interference + contamination)
    return gamma, noise, interference, contamination


def de_sinr_mmse(stats, lam=None, tolerance=None, max_iter=None):
    """MMSE deterministic equivalent via the trace fixed point.

    Per cell j: solve the fixed point with R_k = Phi_jjk, S = Z_j / N and
    regularizer lam (default 1/(rho N)); gamma[j, m] then combines the
    solution, its Theta = I derivative quantities, and the Theta = Phi_jjm
    derivative quantities.
    """
    profile, cfg = stats.profile, stats.config
    L, K, N = profile.L, profile.K, profile.N
    if lam is None:
        lam = 1.0 / (cfg.rho * cfg.N)
    opts = {}
    if tolerance is not None:
        opts["tolerance"] = tolerance
    if max_iter is not None:
        opts["max_iter"] = max_iter

    if profile.simple_model is not None:
        gamma, delta, noise, itf, ct, sol = _mmse_cell(stats, 0, lam, opts,
                                                       only_first_user=True)
        ones = np.ones((L, K))
        return MmseDeterministicEquivalent(
            gamma[0] * ones, delta[0] * ones, noise[0] * ones, itf[0] * ones,
            ct[0] * ones, [sol])

    gammas = np.zeros((L, K))
    deltas = np.zeros((L, K))
    noises = np.zeros((L, K))
    itfs = np.zeros((L, K))
    cts = np.zeros((L, K))
    sols = []
    for j in range(L):
        g, d, no, itf, ct, sol = _mmse_cell(stats, j, lam, opts)
        gammas[j], deltas[j], noises[j], itfs[j], cts[j] = g, d, no, itf, ct
        sols.append(sol)
    return MmseDeterministicEquivalent(gammas, deltas, noises, itfs, cts, sols)


def _mmse_cell(stats, j, lam, opts, only_first_user=False):
    """Evaluate the MMSE approximation for all users of cell j."""
    profile, cfg = stats.profile, stats.config
    L, K, N = profile.L, profile.K, profile.N
    simple = profile.simple_model is not None

    phis = [stats.phi(j, j, k) for k in range(K)]
    problem = FixedPointProblem(R=phis, rho=lam, S=stats.z(j) / N)
    sol = solve_fixed_point(problem, **opts)
    der_eye = solve_derivative(problem, sol, Theta=None)
    T = sol.T
    delta = sol.delta

    # (1/N) tr(Phi_jlk T) for the contamination terms and the mu corrections
    ks = (0,) if simple else tuple(range(K))
    theta_lk = {(l, k): stats.phi_trace_with(j, l, k, T)
                for l in range(L) for k in ks}

    users = (0,) if only_first_user else tuple(range(K))
    gam = np.zeros(K)
    den_noise = np.zeros(K)
    den_itf = np.zeros(K)
    den_ct = np.zeros(K)
    for m in users:
        der_m = solve_derivative(problem, sol, Theta=phis[m])
        Tm = der_m.T_prime
        noise = np.real(np.einsum("ij,ji->", phis[m], der_eye.T_prime)) / (cfg.rho * N * N)
        mu_sum = 0.0
        for l in range(L):
            for k in ks:
                th = theta_lk[(l, k)]
                thp = stats.phi_trace_with(j, l, k, Tm)
                F = profile.factor(j, l, k)
                r_trace = float(np.real(np.einsum("ni,nq,qi->", F.conj(), Tm, F))) / N
                dk = delta[k]
                mu = r_trace - (2.0 * np.real(np.conj(th) * thp) * (1.0 + dk)
                                - abs(th) ** 2 * der_m.delta_prime[k]) / (1.0 + dk) ** 2
                mu_sum += mu * (K if simple else 1)
        interference = mu_sum / N
        contamination = sum(abs(theta_lk[(l, 0 if simple else m)]) ** 2
                            for l in range(L) if l != j)
        denom = noise + interference + contamination
        gam[m] = delta[m] ** 2 / denom
        den_noise[m], den_itf[m], den_ct[m] = noise, interference, contamination
    return gam, delta.copy(), den_noise, den_itf, den_ct, sol


def asymptotic_sir(stats):
    """Limit SINR from the normalized traces beta[j, l, k] = (1/N) tr Phi_jlk:
    gamma_inf = beta_jjm^2 / sum_{l != j} |beta_jlm|^2, infinite when the
    contamination denominator vanishes (single cell or alpha = 0)."""
    profile = stats.profile
    L, K = profile.L, profile.K
    beta = np.zeros((L, L, K), dtype=complex)
    for j in range(L):
        for l in range(L):
            for k in range(K):
                beta[j, l, k] = stats.phi_trace(j, l, k)
    gamma_inf = np.full((L, K), np.inf)
    for j in range(L):
        for m in range(K):
            denom = sum(abs(beta[j, l, m]) ** 2 for l in range(L) if l != j)
            if denom > 0:
                gamma_inf[j, m] = np.real(beta[j, j, m]) ** 2 / denom
    return AsymptoticLimit(beta, gamma_inf)
