"""Fixed-point solvers for large-random-matrix trace approximations.

Given Hermitian nonnegative definite D, S and R_1..R_K (all N x N) and a
regularizer rho > 0, the normalized resolvent trace
(1/N) tr D (H H^H + S + rho I)^{-1}, with the columns of H drawn as
(1/sqrt(N)) R_k^{1/2} u_k, concentrates around (1/N) tr D T where

    T = ( (1/N) sum_k R_k / (1 + delta_k) + S + rho I )^{-1}
    delta_k = (1/N) tr R_k T,   k = 1..K.

``solve_fixed_point`` computes (T, delta) by damped fixed-point iteration.
``solve_derivative`` computes the companion quantities (T', delta') that play
the same role for the two-sided form
(1/N) tr D (..)^{-1} Theta (..)^{-1}; for Theta = I they equal -dT/drho and
-ddelta/drho. ``resolvent_trace_oracle`` estimates either trace functional by
plain Monte Carlo and is kept as an independent cross-check.
"""

from dataclasses import dataclass

import numpy as np

from .rng import RngTree, complex_normal

DEFAULT_ATOL = 1e-12
DEFAULT_RTOL = 1e-12
DEFAULT_MAX_ITER = 10_000


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConditioningError(RuntimeError):
    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


@dataclass
class FixedPointProblem:
    """Inputs of the trace fixed point; all matrices Hermitian PSD."""

    R: list                      # K matrices, each (N, N)
    rho: float
    S: np.ndarray | None = None
    D: np.ndarray | None = None  # trace weight, identity when omitted

    def __post_init__(self):
        self.R = [np.asarray(Rk, dtype=complex) for Rk in self.R]
        if self.R:
            self.N = self.R[0].shape[0]
        elif self.S is not None:
            self.N = np.asarray(self.S).shape[0]
        elif self.D is not None:
            self.N = np.asarray(self.D).shape[0]
        else:
            raise ValueError("cannot infer N: provide R, S, or D")
        for Rk in self.R:
            if Rk.shape != (self.N, self.N):
                raise ValueError(f"R entries must be ({self.N}, {self.N})")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def K(self):
        return len(self.R)

    def s_dense(self):
        if self.S is None:
            return np.zeros((self.N, self.N), dtype=complex)
        return np.asarray(self.S, dtype=complex)

    def d_dense(self):
        if self.D is None:
            return np.eye(self.N, dtype=complex)
        return np.asarray(self.D, dtype=complex)

    def spectral_norms(self):
        """Largest eigenvalue of each input, recorded for diagnostics."""
        mats = list(self.R)
        if self.S is not None:
            mats.append(self.s_dense())
        return [float(np.linalg.eigvalsh((M + M.conj().T) / 2)[-1]) for M in mats]


@dataclass
class FixedPointSolution:
    T: np.ndarray
    delta: np.ndarray
    iterations: int
    residual: float

    def trace_functional(self, D=None):
        """(1/N) tr D T."""
        N = self.T.shape[0]
        if D is None:
            return float(np.real(np.trace(self.T))) / N
        return complex(np.einsum("ij,ji->", D, self.T)) / N


@dataclass
class DerivativeSolution:
    T_prime: np.ndarray
    delta_prime: np.ndarray
    J: np.ndarray
    v: np.ndarray
    Theta: np.ndarray | None

    def trace_functional(self, D=None):
        """(1/N) tr D T'."""
        N = self.T_prime.shape[0]
        if D is None:
            return float(np.real(np.trace(self.T_prime))) / N
        return complex(np.einsum("ij,ji->", D, self.T_prime)) / N


def _assemble_T(problem, delta, S):
    N = problem.N
    M = S + problem.rho * np.eye(N)
    # group repeated matrices (common when many users share a covariance)
    coef = {}
    for Rk, dk in zip(problem.R, delta):
        key = id(Rk)
        if key in coef:
            coef[key][1] += 1.0 / (N * (1.0 + dk))
        else:
            coef[key] = [Rk, 1.0 / (N * (1.0 + dk))]
    for Rk, c in coef.values():
        M += c * Rk
    return np.linalg.inv(M)


def _traces(problem, T):
    N = problem.N
    return np.array([np.real(np.einsum("ij,ji->", Rk, T)) / N for Rk in problem.R])


def solve_fixed_point(problem, tolerance=None, max_iter=DEFAULT_MAX_ITER,
                      init=None, damping=1.0):
    """Iterate delta_k <- (1/N) tr R_k T(delta) until the sup-norm update is
    below atol + rtol * |delta|.

    Starts from delta_k = 1/rho unless ``init`` is given. When an iteration
    increases the residual (oscillation), the step is permanently damped by
    0.5. Raises ConvergenceError after ``max_iter`` sweeps.
    """
    atol = rtol = None
    if tolerance is not None:
        atol = rtol = float(tolerance)
    atol = DEFAULT_ATOL if atol is None else atol
    rtol = DEFAULT_RTOL if rtol is None else rtol

    S = problem.s_dense()
    if problem.K == 0:
        T = np.linalg.inv(S + problem.rho * np.eye(problem.N))
        return FixedPointSolution(T, np.zeros(0), 0, 0.0)

    delta = np.full(problem.K, 1.0 / problem.rho) if init is None \
        else np.asarray(init, dtype=float).copy()
    if delta.shape != (problem.K,):
        raise ValueError(f"init must have shape ({problem.K},)")
    if (delta < 0).any():
        raise ValueError("init must be nonnegative")

    theta = float(damping)
    prev_resid = np.inf
    for it in range(1, max_iter + 1):
        T = _assemble_T(problem, delta, S)
        update = _traces(problem, T)
        resid = float(np.abs(update - delta).max())
        if resid <= atol + rtol * float(np.abs(update).max()):
            return FixedPointSolution(T, update, it, resid)
        if resid > prev_resid and theta > 0.5:
            theta = 0.5   # oscillation guard
        prev_resid = resid
        delta = (1.0 - theta) * delta + theta * update
    raise ConvergenceError(
        f"fixed point did not converge in {max_iter} iterations "
        f"(last residual {resid:.3e})", residual=resid, iterations=max_iter)


def solve_derivative(problem, solution, Theta=None):
    """Solve the K x K linear system for delta' and assemble T'.

    With M_kl = (1/N) tr R_k T R_l T, the system is (I - J) delta' = v where
    J_kl = M_kl / (N (1 + delta_l)^2) and v_k = (1/N) tr R_k T Theta T; then

        T' = T Theta T + T [ (1/N) sum_k R_k delta'_k / (1 + delta_k)^2 ] T.

    This makes delta'_k = (1/N) tr R_k T' self-consistent, and for Theta = I
    reproduces -dT/drho (checked against finite differences in the tests).
    """
    N, K = problem.N, problem.K
    T = solution.T
    Theta_dense = np.eye(N, dtype=complex) if Theta is None else np.asarray(Theta, dtype=complex)
    W = T @ Theta_dense @ T
    if K == 0:
        return DerivativeSolution(W, np.zeros(0), np.zeros((0, 0)), np.zeros(0), Theta)

    delta = solution.delta
    products = {}                      # id(Rk) -> Rk @ T, deduplicated
    for Rk in problem.R:
        if id(Rk) not in products:
            products[id(Rk)] = Rk @ T
    RT = [products[id(Rk)] for Rk in problem.R]
    M = np.empty((K, K))
    pair_cache = {}
    for a in range(K):
        for b in range(a, K):
            pair = (id(RT[a]), id(RT[b]))
            if pair not in pair_cache:
                # (1/N) tr R_a T R_b T
                pair_cache[pair] = float(np.real(np.sum(RT[a] * RT[b].T))) / N
            M[a, b] = M[b, a] = pair_cache[pair]
    J = M / (N * (1.0 + delta[None, :]) ** 2)
    v_cache = {}
    for Rk in problem.R:
        if id(Rk) not in v_cache:
            v_cache[id(Rk)] = float(np.real(np.einsum("ij,ji->", Rk, W))) / N
    v = np.array([v_cache[id(Rk)] for Rk in problem.R])

    A = np.eye(K) - J
    svals = np.linalg.svd(A, compute_uv=False)
    if svals[-1] <= K * np.finfo(float).eps * svals[0]:
        raise ConditioningError(
            f"(I - J) is numerically singular (smallest singular value "
            f"{svals[-1]:.3e})", smallest_singular_value=float(svals[-1]))
    delta_prime = np.linalg.solve(A, v)

    coef = {}
    for Rk, dk, dpk in zip(problem.R, delta, delta_prime):
        key = id(Rk)
        if key in coef:
            coef[key][1] += dpk / (N * (1.0 + dk) ** 2)
        else:
            coef[key] = [Rk, dpk / (N * (1.0 + dk) ** 2)]
    correction = np.zeros((N, N), dtype=complex)
    for Rk, c in coef.values():
        correction += c * Rk
    T_prime = W + T @ correction @ T
    return DerivativeSolution(T_prime, delta_prime, J, v, Theta)


def psd_root(M):
    """Hermitian square root with eigenvalues clamped at zero."""
    vals, vecs = np.linalg.eigh((M + M.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def resolvent_trace_oracle(problem, Theta=None, draws=200, rng=0):
    """Monte Carlo estimate of the trace functional that the fixed point
    approximates: the linear form when Theta is None, otherwise the
    two-sided form. Returns (mean, standard error).
    """
    if draws < 2:
        raise ValueError("draws must be >= 2")
    N, K = problem.N, problem.K
    S = problem.s_dense()
    D = problem.d_dense()
    roots = [psd_root(Rk) for Rk in problem.R]
    tree = rng if isinstance(rng, RngTree) else RngTree(rng)
    base = S + problem.rho * np.eye(N)
    Theta_dense = None if Theta is None else np.asarray(Theta, dtype=complex)

    samples = np.empty(draws)
    for t in range(draws):
        g = tree.child(t).generator()
        H = np.zeros((N, K), dtype=complex)
        for k in range(K):
            H[:, k] = roots[k] @ complex_normal(g, (N,)) / np.sqrt(N)
        Q = np.linalg.inv(H @ H.conj().T + base)
        if Theta_dense is None:
            samples[t] = np.real(np.einsum("ij,ji->", D, Q)) / N
        else:
            samples[t] = np.real(np.einsum("ij,ji->", D, Q @ Theta_dense @ Q)) / N
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(draws))
    return mean, se
