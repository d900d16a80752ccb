"""Closed-form SINRs and planning formulas for the reduced-rank symmetric
system (noiseless pilots, P shared angular dimensions, own-cell gain 1,
cross-cell gain alpha).

Everything here is scalar algebra in the five system coordinates
(effective SNR rho*N, DoF per user P/K, alpha, cell count L, regularizer
lam). The moduli are exact specializations of the general trace formulas in
``deteq``; the cross-module identity is enforced by tests. Infinite values
are legitimate outputs: with a single cell or alpha = 0 there is no pilot
contamination and the limit SINR is unbounded.
"""

import math
from dataclasses import dataclass

from .model import ConfigurationError, SingularityError


@dataclass(frozen=True)
class SimpleSystemPoint:
    """Operating point of the symmetric reduced-rank system."""

    effective_snr: float        # rho * N
    dof_per_ut: float           # P / K
    alpha: float
    L: int
    lam: float | None = None    # regularizer, defaults to 1 / (rho N)

    def __post_init__(self):
        if not self.effective_snr > 0:
            raise ConfigurationError(f"effective_snr must be > 0, got {self.effective_snr}")
        if not self.dof_per_ut > 0:
            raise ConfigurationError(f"dof_per_ut must be > 0, got {self.dof_per_ut}")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.L < 1:
            raise ConfigurationError(f"L must be >= 1, got {self.L}")
        if self.lam is not None and not self.lam > 0:
            raise ConfigurationError(f"lam must be > 0, got {self.lam}")

    @property
    def Lbar(self):
        return 1.0 + self.alpha * (self.L - 1)

    @property
    def regularizer(self):
        return self.lam if self.lam is not None else 1.0 / self.effective_snr


@dataclass(frozen=True)
class MfBreakdown:
    noise: float
    multiuser: float
    contamination: float


@dataclass(frozen=True)
class MmseIntermediates:
    delta: float
    Z: float
    X: float
    Y: float


@dataclass(frozen=True)
class MassiveMimoCondition:
    """Minimum DoF per user needed to reach the fraction eta of the
    contamination-limited rate."""

    eta: float
    detector: str
    required_dof_per_ut: float   # math.inf when infeasible
    r_inf: float

    @property
    def feasible(self):
        return math.isfinite(self.required_dof_per_ut)


def gamma_mf_simple(point):
    """Matched-filter SINR: 1 / (Lbar/(rho N) + (K/P) Lbar^2 + alpha (Lbar - 1)).

    Returns (sinr, MfBreakdown) with the three denominator terms.
    """
    Lb = point.Lbar
    noise = Lb / point.effective_snr
    multiuser = Lb ** 2 / point.dof_per_ut
    contamination = point.alpha * (Lb - 1.0)
    return 1.0 / (noise + multiuser + contamination), MfBreakdown(
        noise, multiuser, contamination)


def rate_mf_simple(point):
    gamma, _ = gamma_mf_simple(point)
    return math.log2(1.0 + gamma)


def gamma_rate_infinity(alpha, L):
    """Contamination-limited SINR and rate: gamma_inf = 1 / (alpha (Lbar - 1)).

    Returns (gamma_inf, r_inf); both are math.inf when L = 1 or alpha = 0,
    where no pilot is reused and nothing caps the array gain.
    """
    if L < 1:
        raise ConfigurationError(f"L must be >= 1, got {L}")
    if not 0 <= alpha <= 1:
        raise ConfigurationError(f"alpha must be in [0, 1], got {alpha}")
    Lbar = 1.0 + alpha * (L - 1)
    floor = alpha * (Lbar - 1.0)
    if floor == 0.0:
        return math.inf, math.inf
    gamma_inf = 1.0 / floor
    return gamma_inf, math.log2(1.0 + gamma_inf)


def dof_required_mf(eta, effective_snr, alpha, L):
    """Exact DoF-per-user requirement for the matched filter.

    P/K = 1 / ( 1/(Lbar^2 g) - 1/(rho N Lbar) - alpha (Lbar - 1)/Lbar^2 )
    with g = (1 + gamma_inf)^eta - 1. Returns math.inf when the bracket is
    not positive (the target is unreachable at this effective SNR).
    """
    if not 0 < eta < 1:
        raise ConfigurationError(f"eta must be in (0, 1), got {eta}")
    if not effective_snr > 0:
        raise ConfigurationError(f"effective_snr must be > 0, got {effective_snr}")
    gamma_inf, _ = gamma_rate_infinity(alpha, L)
    if math.isinf(gamma_inf):
        raise ConfigurationError(
            "no contamination floor (L = 1 or alpha = 0); the relative target "
            "eta * R_inf is undefined")
    Lbar = 1.0 + alpha * (L - 1)
    g = (1.0 + gamma_inf) ** eta - 1.0
    bracket = (1.0 / (Lbar ** 2 * g)
               - 1.0 / (effective_snr * Lbar)
               - alpha * (Lbar - 1.0) / Lbar ** 2)
    if bracket <= 0.0:
        return math.inf
    return 1.0 / bracket


def gamma_mmse_simple(point):
    """MMSE SINR: 1 / ( (Lbar/(rho N)) X + (K/P) Lbar^2 Y + alpha (Lbar - 1) ).

    Returns (sinr, MmseIntermediates). Requires Z^2 > K/P; outside that
    domain the X denominator changes sign and the formula is meaningless,
    so a SingularityError is raised.
    """
    Lb = point.Lbar
    kp = 1.0 / point.dof_per_ut
    lam = point.regularizer
    a = lam * Lb + kp * (Lb ** 2 - 1.0)
    disc = (1.0 + lam * Lb + kp * Lb ** 2) ** 2 - 4.0 * kp
    delta = (1.0 - lam * Lb - kp * Lb ** 2 + math.sqrt(disc)) / (2.0 * a)
    Z = lam * Lb * (1.0 + delta) + kp * (1.0 + (1.0 + delta) * (Lb ** 2 - 1.0))
    denom_x = Z ** 2 - kp
    if denom_x <= 0.0:
        raise SingularityError(
            f"Z^2 = {Z ** 2:.6g} must exceed K/P = {kp:.6g}; the point is "
            f"outside the validity domain")
    X = Z ** 2 / denom_x
    Y = X + (1.0 + point.alpha ** 2 * (point.L - 1)) * (1.0 - 2.0 * Z) / (Lb ** 2 * denom_x)
    gamma = 1.0 / (Lb / point.effective_snr * X
                   + kp * Lb ** 2 * Y
                   + point.alpha * (Lb - 1.0))
    return gamma, MmseIntermediates(delta, Z, X, Y)


def rate_mmse_simple(point):
    gamma, _ = gamma_mmse_simple(point)
    return math.log2(1.0 + gamma)


BISECTION_RTOL = 1e-6
DOF_CAP = 1e9


def dof_required_mmse(eta, effective_snr, alpha, L, lam=None,
                      rtol=BISECTION_RTOL):
    """Minimal DoF per user for the MMSE detector to reach eta * R_inf.

    The rate is increasing in P/K, so bisection applies: the upper bracket
    doubles until feasible (math.inf beyond DOF_CAP), the lower bracket
    starts epsilon-scaled above zero. Returns the bracket end that meets the
    target, within relative tolerance ``rtol``.
    """
    if not 0 < eta < 1:
        raise ConfigurationError(f"eta must be in (0, 1), got {eta}")
    _, r_inf = gamma_rate_infinity(alpha, L)
    if math.isinf(r_inf):
        raise ConfigurationError(
            "no contamination floor (L = 1 or alpha = 0); the relative target "
            "eta * R_inf is undefined")
    target = eta * r_inf

    def gap(dof):
        point = SimpleSystemPoint(effective_snr, dof, alpha, L, lam)
        return rate_mmse_simple(point) - target

    lo = 64.0 * math.ulp(1.0)
    if gap(lo) >= 0.0:
        return lo
    hi = 1.0
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > DOF_CAP:
            return math.inf
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if gap(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def massive_mimo_condition(eta, effective_snr, alpha, L, detector="mf", lam=None):
    """Required DoF per user for either detector, packaged with R_inf."""
    _, r_inf = gamma_rate_infinity(alpha, L)
    if detector == "mf":
        dof = dof_required_mf(eta, effective_snr, alpha, L)
    elif detector == "mmse":
        dof = dof_required_mmse(eta, effective_snr, alpha, L, lam=lam)
    else:
        raise ConfigurationError(f"unknown detector {detector!r}")
    return MassiveMimoCondition(eta, detector, dof, r_inf)
