"""mimolab: multicell MIMO uplink laboratory.

Monte Carlo simulation of pilot-contaminated uplink detection, deterministic
rate approximations from random-matrix fixed points, and the closed-form
planning formulas of the symmetric reduced-rank system.
"""

__version__ = "0.1.0"

from .model import (
    ConfigurationError,
    SingularityError,
    SystemConfig,
    SimpleModelSpec,
    CorrelationProfile,
    ChannelDraw,
    PilotEstimate,
    PilotStatistics,
    orthonormal_columns,
    build_simple_profile,
    validate_profile,
    draw_channels,
    draw_pilot_observation,
    estimation_statistics,
    mmse_estimate,
)
from .detect import (
    LinearFilter,
    SinrReport,
    RateReport,
    interference_matrix,
    matched_filter,
    mmse_filter,
    conditional_sinr,
    conditional_denominator_mc,
    ergodic_rate_mc,
    ergodic_rates_paired,
)
from .rmt import (
    ConvergenceError,
    ConditioningError,
    FixedPointProblem,
    FixedPointSolution,
    DerivativeSolution,
    solve_fixed_point,
    solve_derivative,
    resolvent_trace_oracle,
)
from .deteq import (
    MfDeterministicEquivalent,
    MmseDeterministicEquivalent,
    AsymptoticLimit,
    de_sinr_mf,
    de_sinr_mmse,
    de_rate,
    asymptotic_sir,
)
from .closedform import (
    SimpleSystemPoint,
    MassiveMimoCondition,
    gamma_mf_simple,
    rate_mf_simple,
    gamma_rate_infinity,
    dof_required_mf,
    gamma_mmse_simple,
    rate_mmse_simple,
    dof_required_mmse,
    massive_mimo_condition,
)
from .rng import RngTree
