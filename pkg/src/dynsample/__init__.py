"""Dynamical sampling for diffusion equations on (0, pi).

Recover the sine coefficients of an initial datum from samples of the
solution at a single point and a geometric sequence of times, with
certified error budgets in arbitrary precision.
"""

from .errors import (
    ConfigError,
    DynSampleError,
    EmptyCoefficients,
    IllConditioned,
    InvalidProfile,
    PrecisionInsufficient,
    ResonantPoint,
    RhoBelowThreshold,
    RootBracketFailure,
    SignPatternViolation,
    TolUnachievable,
)
from .forward_solver import (
    DiffusivityProfile,
    SeriesValue,
    Trace,
    evaluate_nonautonomous,
    evaluate_solution,
    sample_trace,
)
from .initial_data import InitialDatum, ball_norm, l2_distance, random_ball_member, truncation_tail_bound
from .operator_spectrum import (
    HEAT,
    OperatorSpec,
    check_g_bound,
    check_power_inequalities,
    exp_lambda_row,
    g_value,
    lambda_of,
    min_gap,
    rho_threshold,
    spectral_gap,
    stable_rho,
    validate_coefficients,
)
from .recovery import (
    RecoveryResult,
    a0_constant,
    a0_series,
    apriori_error_bounds,
    one_sample_two_coeffs,
    oracle_recover,
    reconstruct,
    recover,
    recover_coefficients,
    recover_with_budget,
    required_bits,
    sample_tolerances,
    working_bits,
)
from .sampling_schedule import (
    SamplingPlan,
    build_plan,
    default_rho,
    explicit_plan,
    geometric_times,
    parse_real,
    rescaled_times,
    scan_sampling_point,
)

__version__ = "0.1.0"
