"""System configuration, antenna correlation profiles, channel draws, and
MMSE channel estimation from reused uplink pilots.

Correlation matrices are kept in factored form R = F F^H (F is N x r,
r <= N), so rank-deficient profiles are representable and positive
semidefiniteness holds by construction. Dense entries can still be attached
directly, e.g. to feed deliberately broken matrices to the validator.
"""

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngTree, as_generator, complex_normal

HERMITIAN_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
ORTHONORMALITY_TOL = 1e-10


class ConfigurationError(ValueError):
    """Inconsistent or out-of-range experiment configuration."""


class SingularityError(RuntimeError):
    """A matrix that must be inverted exactly is singular."""


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of the multicell uplink.

    L cells, K single-antenna users per cell, N base-station antennas,
    transmit SNR rho (linear scale) and training SNR rho_tau (linear scale,
    math.inf for noiseless pilots).
    """

    L: int
    K: int
    N: int
    rho: float
    rho_tau: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if self.L < 1 or self.K < 1 or self.N < 1:
            raise ConfigurationError(
                f"L, K, N must be >= 1, got L={self.L}, K={self.K}, N={self.N}")
        if not self.rho > 0:
            raise ConfigurationError(f"rho must be positive, got {self.rho}")
        if not self.rho_tau > 0:
            raise ConfigurationError(f"rho_tau must be positive or inf, got {self.rho_tau}")


def orthonormal_columns(N, P, kind="dft", rng=None):
    """An N x P matrix with orthonormal columns.

    kind="dft" takes the first P columns of the unitary DFT matrix,
    kind="identity" the first P canonical basis vectors, kind="haar" draws a
    Haar-random subspace from ``rng``.
    """
    if P > N:
        raise ConfigurationError(f"P={P} exceeds N={N}")
    if kind == "identity":
        return np.eye(N, P, dtype=complex)
    if kind == "dft":
        n = np.arange(N)
        A = np.exp(-2j * np.pi * np.outer(n, n[:P]) / N) / np.sqrt(N)
        return A
    if kind == "haar":
        g = as_generator(rng if rng is not None else 0)
        Q, R = np.linalg.qr(complex_normal(g, (N, P)))
        return Q * np.sign(np.diag(R))
    raise ConfigurationError(f"unknown basis kind {kind!r}")


@dataclass(frozen=True)
class SimpleModelSpec:
    """Reduced-rank channel geometry: P angular dimensions shared by every
    link, own-cell gain 1 and cross-cell gain alpha."""

    P: int
    alpha: float
    A: np.ndarray
    c: float | None = None  # optional P = c * N bookkeeping

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must be in (0, 1], got {self.alpha}")
        N, P = self.A.shape
        if P != self.P:
            raise ConfigurationError(f"A has {P} columns, expected P={self.P}")
        if P > N:
            raise ConfigurationError(f"P={P} exceeds N={N}")
        gram_dev = np.abs(self.A.conj().T @ self.A - np.eye(P)).max()
        if gram_dev > ORTHONORMALITY_TOL:
            raise ConfigurationError(
                f"columns of A are not orthonormal (deviation {gram_dev:.2e})")


class CorrelationProfile:
    """Per-link correlation matrices R[j, l, k] for the channel from user k
    of cell l to base station j.

    Entries are stored as factors (R = F F^H) or as raw dense matrices; the
    factored form is canonical and raw entries are factored on demand with
    eigenvalue clamping at zero.
    """

    def __init__(self, L, K, N, factors, dense=None, simple_model=None,
                 spectral_bound=None):
        self.L = int(L)
        self.K = int(K)
        self.N = int(N)
        self._factors = dict(factors)
        self._dense = dict(dense or {})
        self.simple_model = simple_model
        self.spectral_bound = spectral_bound
        self._check_shapes()

    def _check_shapes(self):
        for j in range(self.L):
            for l in range(self.L):
                for k in range(self.K):
                    key = (j, l, k)
                    if key in self._dense:
                        M = self._dense[key]
                        if M.shape != (self.N, self.N):
                            raise ConfigurationError(
                                f"dense entry {key} has shape {M.shape}, expected "
                                f"({self.N}, {self.N})")
                    elif key in self._factors:
                        F = self._factors[key]
                        if F.ndim != 2 or F.shape[0] != self.N or F.shape[1] > self.N:
                            raise ConfigurationError(
                                f"factor {key} has shape {F.shape}, expected "
                                f"({self.N}, r<= {self.N})")
                    else:
                        raise ConfigurationError(f"missing correlation entry {key}")

    @classmethod
    def from_factors(cls, L, K, N, factor_fn, **kw):
        """Build from a callable (j, l, k) -> N x r factor."""
        factors = {(j, l, k): np.asarray(factor_fn(j, l, k), dtype=complex)
                   for j in range(L) for l in range(L) for k in range(K)}
        return cls(L, K, N, factors, **kw)

    @classmethod
    def identity(cls, config, scale=1.0):
        """R = scale * I for every link."""
        F = np.sqrt(scale) * np.eye(config.N, dtype=complex)
        return cls.from_factors(config.L, config.K, config.N, lambda j, l, k: F)

    def factor(self, j, l, k):
        key = (j, l, k)
        F = self._factors.get(key)
        if F is None:
            F = _clamped_root(self._dense[key])
            self._factors[key] = F
        return F

    def dense(self, j, l, k):
        key = (j, l, k)
        if key in self._dense:
            return self._dense[key]
        F = self._factors[key]
        return F @ F.conj().T

    def trace(self, j, l, k):
        key = (j, l, k)
        if key in self._dense:
            return float(np.real(np.trace(self._dense[key])))
        F = self._factors[key]
        return float(np.sum(np.abs(F) ** 2))

    def apply(self, j, l, k, x):
        """R[j,l,k] @ x without assembling the dense matrix."""
        key = (j, l, k)
        if key in self._dense:
            return self._dense[key] @ x
        F = self._factors[key]
        return F @ (F.conj().T @ x)

    def sum_dense(self, j, k):
        """sum over l of R[j, l, k]."""
        out = np.zeros((self.N, self.N), dtype=complex)
        for l in range(self.L):
            out += self.dense(j, l, k)
        return out

    def with_dense_entry(self, j, l, k, matrix):
        """Copy of the profile with one entry replaced by a raw dense matrix."""
        factors = {key: F for key, F in self._factors.items() if key != (j, l, k)}
        dense = dict(self._dense)
        dense[(j, l, k)] = np.asarray(matrix, dtype=complex)
        return CorrelationProfile(self.L, self.K, self.N, factors, dense,
                                  simple_model=None,
                                  spectral_bound=self.spectral_bound)


def _clamped_root(R):
    """Factor F with F F^H = clamp(R, eigenvalues >= 0)."""
    vals, vecs = np.linalg.eigh((R + R.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    keep = vals > 0
    return vecs[:, keep] * np.sqrt(vals[keep])


def build_simple_profile(config, spec):
    """Correlation profile of the reduced-rank model: every own-cell link has
    R = (N/P) A A^H and every cross-cell link R = alpha (N/P) A A^H, which
    keeps the mean channel energy per cell at K * N."""
    if spec.A.shape[0] != config.N:
        raise ConfigurationError(
            f"A has {spec.A.shape[0]} rows, expected N={config.N}")
    if spec.P > config.N:
        raise ConfigurationError(f"P={spec.P} exceeds N={config.N}")
    own = np.sqrt(config.N / spec.P) * spec.A
    cross = np.sqrt(spec.alpha * config.N / spec.P) * spec.A
    factors = {(j, l, k): (own if j == l else cross)
               for j in range(config.L) for l in range(config.L)
               for k in range(config.K)}
    return CorrelationProfile(config.L, config.K, config.N, factors,
                              simple_model=spec)


@dataclass
class EntryCheck:
    """Diagnostics for one correlation entry."""

    index: tuple
    hermitian_dev: float
    min_eigenvalue: float
    spectral_norm: float
    normalized_trace: float
    issues: list

    @property
    def ok(self):
        return not self.issues


@dataclass
class ValidationReport:
    entries: list
    spectral_bound: float | None

    @property
    def ok(self):
        return all(e.ok for e in self.entries)

    @property
    def violations(self):
        return [e for e in self.entries if not e.ok]

    def max_spectral_norm(self):
        return max(e.spectral_norm for e in self.entries)


def validate_profile(profile, config=None):
    """Check every R[j,l,k]: Hermitian to tolerance, eigenvalues above the
    numerical floor, bounded spectral norm, strictly positive normalized
    trace. Returns a per-entry report; see ``ValidationReport.ok``."""
    if config is not None and (profile.L, profile.K, profile.N) != (
            config.L, config.K, config.N):
        raise ConfigurationError(
            f"profile dimensions (L={profile.L}, K={profile.K}, N={profile.N}) "
            f"do not match config (L={config.L}, K={config.K}, N={config.N})")
    entries = []
    for j in range(profile.L):
        for l in range(profile.L):
            for k in range(profile.K):
                R = profile.dense(j, l, k)
                herm = float(np.abs(R - R.conj().T).max())
                scale = max(float(np.abs(R).max()), 1.0)
                vals = np.linalg.eigvalsh((R + R.conj().T) / 2)
                min_eig = float(vals[0])
                norm = float(max(abs(vals[0]), abs(vals[-1])))
                tr = float(np.real(np.trace(R))) / profile.N
                issues = []
                if herm > HERMITIAN_TOL * scale:
                    issues.append(f"not Hermitian (deviation {herm:.2e})")
                if min_eig < EIGENVALUE_FLOOR:
                    issues.append(f"negative eigenvalue {min_eig:.2e}")
                if profile.spectral_bound is not None and norm > profile.spectral_bound:
                    issues.append(
                        f"spectral norm {norm:.3g} exceeds bound {profile.spectral_bound:.3g}")
                if not tr > 0:
                    issues.append(f"normalized trace {tr:.3g} is not positive")
                entries.append(EntryCheck((j, l, k), herm, min_eig, norm, tr, issues))
    return ValidationReport(entries, profile.spectral_bound)


@dataclass
class ChannelDraw:
    """One realization of all channel matrices.

    H[j, l] is the N x K channel from the users of cell l to base station j;
    w holds the underlying white draws, column k of H[j, l] is exactly
    factor(j, l, k) @ w[j, l, k].
    """

    H: np.ndarray          # (L, L, N, K) complex
    w: dict                # (j, l, k) -> (r,) complex
    source: str = ""


def draw_channels(profile, rng):
    """Draw one channel realization.

    ``rng`` may be an RngTree (one substream per (j, l, k), safe to evaluate
    concurrently), a numpy Generator (sequential draws), or an integer seed.
    """
    L, K, N = profile.L, profile.K, profile.N
    H = np.zeros((L, L, N, K), dtype=complex)
    w = {}
    tree = rng if isinstance(rng, RngTree) else None
    gen = None if tree is not None else as_generator(rng)
    shared_factors = profile.simple_model is not None
    for j in range(L):
        for l in range(L):
            F = profile.factor(j, l, 0)
            for k in range(K):
                if not shared_factors:
                    F = profile.factor(j, l, k)
                g = tree.child(j, l, k).generator() if tree is not None else gen
                wk = complex_normal(g, (F.shape[1],))
                w[(j, l, k)] = wk
                H[j, l, :, k] = F @ wk
    source = repr(tree) if tree is not None else "generator"
    return ChannelDraw(H, w, source)


def draw_pilot_observation(profile, draw, config, rng):
    """Pilot observations y[j, :, k]: the own-cell channel plus the same-pilot
    channels from every other cell, plus noise scaled by 1/sqrt(rho_tau)
    (omitted when rho_tau is infinite)."""
    L, K, N = profile.L, profile.K, profile.N
    y = draw.H[np.arange(L), np.arange(L)].copy()          # (L, N, K) own cells
    for j in range(L):
        for l in range(L):
            if l != j:
                y[j] += draw.H[j, l]
    if math.isfinite(config.rho_tau):
        tree = rng if isinstance(rng, RngTree) else None
        gen = None if tree is not None else as_generator(rng)
        scale = 1.0 / math.sqrt(config.rho_tau)
        for j in range(L):
            for k in range(K):
                g = tree.child(j, k).generator() if tree is not None else gen
                y[j, :, k] += scale * complex_normal(g, (N,))
    return y


class PilotStatistics:
    """Trial-independent second-order statistics of the pilot estimator.

    For each (j, k) the observation covariance is
    B = (1/rho_tau) I + sum_l R[j,l,k]; the estimator filter is Q = B^{-1}
    (pseudo-inverse on the column space when rho_tau is infinite and B is
    singular). Derived quantities:

      Phi[j,l,k] = R[j,j,k] Q R[j,l,k]      estimate cross-covariances
      C[j,j,k]   = R[j,j,k] - Phi[j,j,k]    estimation-error covariance
      C[j,l,k]   = R - R Q R (l != j)       conditional covariance given y
      Z[j]       = sum_k C[j,j,k] + sum_{l!=j, k} R[j,l,k]
    """

    def __init__(self, profile, config, strict=False):
        self.profile = profile
        self.config = config
        self.strict = strict
        self.N = profile.N
        self._q = {}
        self._phi = {}
        self._phi_own_factor = {}
        self._c_own_sum = {}
        self._c_cross_sum = {}
        self._z = {}
        self._shared_q = None
        if profile.simple_model is not None:
            # every (j, k) shares the same observation covariance
            self._shared_q = self._build_q(0, 0)

    def _build_q(self, j, k):
        cfg = self.config
        B = self.profile.sum_dense(j, k)
        if math.isfinite(cfg.rho_tau):
            B += np.eye(self.N) / cfg.rho_tau
            return np.linalg.inv(B)
        vals, vecs = np.linalg.eigh((B + B.conj().T) / 2)
        cutoff = self.N * np.finfo(float).eps * max(float(vals[-1]), 0.0)
        keep = vals > cutoff
        if self.strict and not keep.all():
            raise SingularityError(
                f"pilot observation covariance is singular at (j={j}, k={k}) "
                f"with rho_tau infinite")
        inv = np.zeros_like(vals)
        inv[keep] = 1.0 / vals[keep]
        return (vecs * inv) @ vecs.conj().T

    def q(self, j, k):
        if self._shared_q is not None:
            return self._shared_q
        key = (j, k)
        if key not in self._q:
            self._q[key] = self._build_q(j, k)
        return self._q[key]

    def _entry_key(self, j, l, k):
        # the symmetric model has only two distinct entry classes
        if self.profile.simple_model is not None:
            return (0, 0, 0) if l == j else (0, 1, 0)
        return (j, l, k)

    def phi(self, j, l, k):
        key = self._entry_key(j, l, k)
        if key not in self._phi:
            Fo = self.profile.factor(j, j, k)
            Fl = self.profile.factor(j, l, k)
            self._phi[key] = Fo @ ((Fo.conj().T @ self.q(j, k) @ Fl) @ Fl.conj().T)
        return self._phi[key]

    def phi_trace(self, j, l, k):
        """(1/N) tr Phi[j,l,k]."""
        Fo = self.profile.factor(j, j, k)
        Fl = self.profile.factor(j, l, k)
        M1 = Fo.conj().T @ (self.q(j, k) @ Fl)
        M2 = Fl.conj().T @ Fo
        return complex(np.trace(M2 @ M1)) / self.N

    def phi_trace_with(self, j, l, k, X):
        """(1/N) tr(Phi[j,l,k] X) for a dense N x N matrix X."""
        Fo = self.profile.factor(j, j, k)
        Fl = self.profile.factor(j, l, k)
        M1 = Fo.conj().T @ (self.q(j, k) @ Fl)
        M2 = Fl.conj().T @ (X @ Fo)
        return complex(np.trace(M1 @ M2)) / self.N

    def phi_own_factor(self, j, k):
        """Factor G with Phi[j,j,k] = G G^H (exists since Phi_jjk is PSD)."""
        key = (0, 0) if self.profile.simple_model is not None else (j, k)
        if key not in self._phi_own_factor:
            F = self.profile.factor(j, j, k)
            M = F.conj().T @ (self.q(j, k) @ F)
            vals, vecs = np.linalg.eigh((M + M.conj().T) / 2)
            vals = np.clip(vals, 0.0, None)
            keep = vals > 0
            self._phi_own_factor[key] = F @ (vecs[:, keep] * np.sqrt(vals[keep]))
        return self._phi_own_factor[key]

    def c_own(self, j, k):
        return self.profile.dense(j, j, k) - self.phi(j, j, k)

    def c_cross(self, j, l, k):
        R = self.profile.dense(j, l, k)
        return R - R @ self.q(j, k) @ R

    def _cell_key(self, j):
        # under the symmetric reduced-rank model every cell sees the same
        # aggregates, so cache them once
        return 0 if self.profile.simple_model is not None else j

    def c_own_sum(self, j):
        key = self._cell_key(j)
        if key not in self._c_own_sum:
            if self.profile.simple_model is not None:
                acc = self.profile.K * self.c_own(key, 0)
            else:
                acc = np.zeros((self.N, self.N), dtype=complex)
                for k in range(self.profile.K):
                    acc += self.c_own(key, k)
            self._c_own_sum[key] = acc
        return self._c_own_sum[key]

    def c_cross_sum(self, j):
        key = self._cell_key(j)
        if key not in self._c_cross_sum:
            acc = np.zeros((self.N, self.N), dtype=complex)
            if self.profile.simple_model is not None:
                if self.profile.L > 1:
                    other = 1 if key == 0 else 0
                    acc = (self.profile.L - 1) * self.profile.K * self.c_cross(key, other, 0)
            else:
                for l in range(self.profile.L):
                    if l == key:
                        continue
                    for k in range(self.profile.K):
                        acc += self.c_cross(key, l, k)
            self._c_cross_sum[key] = acc
        return self._c_cross_sum[key]

    def z(self, j):
        key = self._cell_key(j)
        if key not in self._z:
            acc = self.c_own_sum(key).copy()
            if self.profile.simple_model is not None:
                if self.profile.L > 1:
                    other = 1 if key == 0 else 0
                    acc += (self.profile.L - 1) * self.profile.K * \
                        self.profile.dense(key, other, 0)
            else:
                for l in range(self.profile.L):
                    if l == key:
                        continue
                    for k in range(self.profile.K):
                        acc += self.profile.dense(key, l, k)
            self._z[key] = acc
        return self._z[key]

    def conditional_means(self, y_tau):
        """Conditional channel means given the pilot observations.

        Returns (hhat, m) where hhat[j, :, k] is the own-cell estimate
        R[j,j,k] Q y and m[(j, l)][:, k] = R[j,l,k] Q y for l != j.
        """
        L, K = self.profile.L, self.profile.K
        hhat = np.zeros_like(y_tau)
        m = {}
        simple = self.profile.simple_model
        for j in range(L):
            if self._shared_q is not None:
                qy = self._shared_q @ y_tau[j]
            else:
                qy = np.empty_like(y_tau[j])
                for k in range(K):
                    qy[:, k] = self.q(j, k) @ y_tau[j, :, k]
            if simple is not None:
                # cross-cell factors are sqrt(alpha) times the own-cell one,
                # so every conditional mean is proportional to the estimate
                F = self.profile.factor(j, j, 0)
                hhat[j] = F @ (F.conj().T @ qy)
                for l in range(L):
                    if l != j:
                        m[(j, l)] = simple.alpha * hhat[j]
            else:
                for l in range(L):
                    vals = np.empty_like(y_tau[j])
                    for k in range(K):
                        vals[:, k] = self.profile.apply(j, l, k, qy[:, k])
                    if l == j:
                        hhat[j] = vals
                    else:
                        m[(j, l)] = vals
        return hhat, m


@dataclass
class PilotEstimate:
    """Per-trial output of the pilot estimator: the observations, the
    own-cell estimates, the cross-cell conditional means, and a handle to all
    trial-independent statistics."""

    y_tau: np.ndarray      # (L, N, K)
    hhat: np.ndarray       # (L, N, K)
    m: dict                # (j, l) -> (N, K), l != j
    stats: PilotStatistics

    @property
    def config(self):
        return self.stats.config

    @property
    def profile(self):
        return self.stats.profile

    def hhat_matrix(self, j):
        return self.hhat[j]


def estimation_statistics(profile, config, strict=False):
    """Shared pre-computation for estimators and rate approximations."""
    return PilotStatistics(profile, config, strict=strict)


def mmse_estimate(profile, y_tau, config, stats=None, strict=False):
    """MMSE channel estimate from pilot observations.

    The own-cell estimate is hhat = R[j,j,k] Q[j,k] y[j,k]; conditional
    means of the same-pilot cross-cell channels are returned alongside
    because the detector performance depends on them.
    """
    if stats is None:
        stats = PilotStatistics(profile, config, strict=strict)
    hhat, m = stats.conditional_means(y_tau)
    return PilotEstimate(np.asarray(y_tau), hhat, m, stats)
