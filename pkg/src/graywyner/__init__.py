"""Bounds and constructions for the lossy common-vs-private rate trade-off.

For a standardized source pair (X, Y) with nonnegative correlation and
symmetric per-coordinate mean-square distortion delta, the package computes
closed-form lower/upper bounds on the minimum common rate R_c compatible
with a private sum-rate budget R_p, exact values where available (jointly
Gaussian pairs; additive-channel pairs on their validity band), the dual
representation of the lower bound, explicit auxiliary-variable constructions
achieving the bounds, and a set of independent brute-force oracles
(Blahut-Arimoto, grid search, Monte-Carlo, small-instance frontier search)
that validate every derived quantity.

Rates are in nats throughout; the CLI can render bits on output.
"""

from .bounds import (
    AdditiveRateResult,
    CurveRow,
    DualMaximum,
    DualState,
    RateRegionPoint,
    ScaledSumAuxiliary,
    SharedComponentAuxiliary,
    additive_exact,
    classify_regime,
    common_rate_lower,
    common_rate_upper,
    dual_objective,
    gaussian_exact,
    maximize_dual,
    scaled_sum_auxiliary,
    shared_component_auxiliary,
    sweep,
    wyner_common_information,
)
from .entropy import (
    EntropyPowerValue,
    conditional_entropy_power,
    marginal_entropy_power,
    pair_entropy_power,
)
from .errors import (
    GrayWynerError,
    OracleError,
    ValidationError,
)
from .rng import stream
from .scalar_rd import (
    AllocationResult,
    ConditionalVarianceProfile,
    TestChannel,
    allocate_distortion,
    allocation_intermediate_bound,
    build_test_channel,
    cond_rd_lower,
    cond_rd_upper,
    profile_from_pairs,
    rd_lower,
    rd_upper,
)
from .sources import (
    AdditiveChannelSpec,
    DiscreteJointSpec,
    GaussianPairSpec,
    ValidatedSource,
    from_config,
    validate_additive,
    validate_discrete,
    validate_gaussian,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveChannelSpec",
    "AdditiveRateResult",
    "AllocationResult",
    "ConditionalVarianceProfile",
    "CurveRow",
    "DiscreteJointSpec",
    "DualMaximum",
    "DualState",
    "EntropyPowerValue",
    "GaussianPairSpec",
    "GrayWynerError",
    "OracleError",
    "RateRegionPoint",
    "ScaledSumAuxiliary",
    "SharedComponentAuxiliary",
    "TestChannel",
    "ValidatedSource",
    "ValidationError",
    "additive_exact",
    "allocate_distortion",
    "allocation_intermediate_bound",
    "build_test_channel",
    "classify_regime",
    "common_rate_lower",
    "common_rate_upper",
    "cond_rd_lower",
    "cond_rd_upper",
    "conditional_entropy_power",
    "dual_objective",
    "from_config",
    "gaussian_exact",
    "marginal_entropy_power",
    "maximize_dual",
    "pair_entropy_power",
    "profile_from_pairs",
    "rd_lower",
    "rd_upper",
    "scaled_sum_auxiliary",
    "shared_component_auxiliary",
    "stream",
    "sweep",
    "validate_additive",
    "validate_discrete",
    "validate_gaussian",
    "wyner_common_information",
    "__version__",
]
