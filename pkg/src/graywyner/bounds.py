"""Bounds and exact values for the common rate R_c as a function of the
private sum rate R_p, at symmetric MSE distortion delta, for a standardized
source pair with correlation rho.

Everything is organized around the product u := delta * e^{R_p}:

* saturated regime (u > 1):        R_c = 0 exactly for every source.
* high regime (1 - rho <= u <= 1): R_c is sandwiched between
      1/2 log+[ N^2 / ((1-rho)(2u + rho - 1)) ]   (lower, N = pair entropy power)
      1/2 log+[ (1-rho^2) / ((1-rho)(2u + rho - 1)) ]   (upper)
* low regime (u < 1 - rho):        same with the denominator replaced by u^2.

For jointly Gaussian pairs N^2 = 1 - rho^2 and the sandwich collapses to the
exact trade-off.  For additive-channel pairs the lower bound is exact for
u <= 1 - sigma_theta2; the band (1 - sigma_theta2, 1] is open and reported
as bounds only.

The lower bound is also exposed through its concave dual: the maximum over
nu in (1/2, 1] of the dual objective equals the bound, attained at
nu* = u / (2u + rho - 1) clamped to [1/(1+rho), 1].

Two auxiliary-variable constructions witness achievability: a scaled noisy
sum W = alpha (X + Y) + N (meets the high-regime upper bound) and, for
additive-channel sources, a shared-component auxiliary W = theta + sqrt(a) V
(meets the exact value on its validity band).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entropy import EntropyPowerValue, pair_entropy_power
from .errors import (
    NuOutOfRange,
    RegimeViolation,
    ValidationError,
)
from .scalar_rd import log_plus
from .sources import KIND_ADDITIVE, KIND_DISCRETE, KIND_GAUSSIAN, ValidatedSource

REGIME_LOW = "low"
REGIME_HIGH = "high"
REGIME_SATURATED = "saturated"

KIND_LOWER = "lower"
KIND_UPPER = "upper"
KIND_EXACT = "exact"

LOG_2PI = float(np.log(2.0 * np.pi))
LOG_2PIE = LOG_2PI + 1.0


@dataclass(frozen=True)
class RateRegionPoint:
    """One evaluated point of the trade-off curve (rates in nats)."""

    r_p: float
    r_c: float
    regime: str
    kind: str


@dataclass(frozen=True)
class DualState:
    """Dual objective and its first two nu-derivatives at one point."""

    nu: float
    ell: float
    d_ell: float
    d2_ell: float


@dataclass(frozen=True)
class DualMaximum:
    """Result of maximizing the dual objective over nu."""

    nu_star: float
    state: DualState
    point: RateRegionPoint
    clamped: str | None  # None | "lower" | "upper"


@dataclass(frozen=True)
class ScaledSumAuxiliary:
    """W = alpha (X + Y) + N with N ~ N(0, noise_variance), Var(W) = 1."""

    alpha: float
    noise_variance: float
    var_w: float
    mutual_information: float
    cross_correlation: float  # E[X W] = sqrt(1 - u)
    conditional_variance_bound: float  # E[Var(X|W)] <= u, equality for Gaussian


@dataclass(frozen=True, eq=False)
class SharedComponentAuxiliary:
    """W = theta + sqrt(alpha_d) V for additive-channel sources."""

    alpha_d: float
    conditional_variance: float  # E[Var(X|W)] = E[Var(Y|W)] = u
    private_sum_rate: float  # ln(u / delta), equals the requested r_p
    residual_covariance: np.ndarray  # 2x2 covariance of (X - W, Y - W)


def _check_inputs(rho: float, delta: float, r_p: float) -> None:
    if not (0.0 <= rho < 1.0):
        raise ValidationError(f"rho must be in [0, 1), got {rho}")
    if not (0.0 < delta <= 1.0):
        raise ValidationError(
            f"standardized distortion must be in (0, 1], got {delta}"
        )
    if r_p < 0.0 or not np.isfinite(r_p):
        raise ValidationError(f"r_p must be a finite nonnegative rate, got {r_p}")


def classify_regime(rho: float, delta: float, r_p: float) -> str:
    """Regime of u = delta e^{r_p}; the boundary u = 1 - rho counts as high."""
    _check_inputs(rho, delta, r_p)
    u = delta * np.exp(r_p)
    if u > 1.0:
        return REGIME_SATURATED
    if u < 1.0 - rho:
        return REGIME_LOW
    return REGIME_HIGH


def _rc_from_n2(n2: float, rho: float, delta: float, r_p: float) -> tuple[float, str]:
    u = delta * float(np.exp(r_p))
    regime = classify_regime(rho, delta, r_p)
    if regime == REGIME_SATURATED:
        return 0.0, regime
    if regime == REGIME_LOW:
        return 0.5 * log_plus(n2 / (u * u)), regime
    return 0.5 * log_plus(n2 / ((1.0 - rho) * (2.0 * u + rho - 1.0))), regime


def common_rate_lower(
    n_pair: float, rho: float, delta: float, r_p: float
) -> RateRegionPoint:
    """Lower bound on R_c(R_p) from the pair entropy power N = n_pair."""
    _check_inputs(rho, delta, r_p)
    if n_pair < 0.0:
        raise ValidationError(f"pair entropy power must be >= 0, got {n_pair}")
    r_c, regime = _rc_from_n2(n_pair * n_pair, rho, delta, r_p)
    return RateRegionPoint(r_p=r_p, r_c=r_c, regime=regime, kind=KIND_LOWER)


def common_rate_upper(rho: float, delta: float, r_p: float) -> RateRegionPoint:
    """Upper bound on R_c(R_p); the lower bound with N^2 -> 1 - rho^2."""
    _check_inputs(rho, delta, r_p)
    r_c, regime = _rc_from_n2(1.0 - rho * rho, rho, delta, r_p)
    return RateRegionPoint(r_p=r_p, r_c=r_c, regime=regime, kind=KIND_UPPER)


def gaussian_exact(rho: float, delta: float, r_p: float) -> RateRegionPoint:
    """Exact R_c(R_p) for a jointly Gaussian pair (N^2 = 1 - rho^2)."""
    _check_inputs(rho, delta, r_p)
    r_c, regime = _rc_from_n2(1.0 - rho * rho, rho, delta, r_p)
    return RateRegionPoint(r_p=r_p, r_c=r_c, regime=regime, kind=KIND_EXACT)


def dual_objective(
    nu: float, n_pair: float, rho: float, delta: float, r_p: float
) -> DualState:
    """The concave dual objective whose maximum is the lower bound.

    ell(nu) = 1/2 ln((2 pi e)^2 N^2) - nu r_p - nu ln(2 pi e delta)
              + (nu/2) ln(nu^2/(2 nu - 1))
              - ((1 - nu)/2) ln((2 pi e)^2 (1 - rho)^2/(2 nu - 1))

    with d ell/d nu = ln[nu (1 - rho) / ((2 nu - 1) delta e^{r_p})] and
    d2 ell/d nu2 = -1/(nu (2 nu - 1)).
    """
    _check_inputs(rho, delta, r_p)
    if not (0.5 < nu <= 1.0):
        raise NuOutOfRange(f"nu must lie in (1/2, 1], got {nu}")
    if n_pair <= 0.0:
        raise ValidationError(f"pair entropy power must be positive, got {n_pair}")
    two_nu_m1 = 2.0 * nu - 1.0
    ell = (
        0.5 * np.log((n_pair * n_pair)) + LOG_2PIE
        - nu * r_p
        - nu * (LOG_2PIE + np.log(delta))
        + 0.5 * nu * np.log(nu * nu / two_nu_m1)
        - 0.5 * (1.0 - nu) * (2.0 * LOG_2PIE + 2.0 * np.log(1.0 - rho) - np.log(two_nu_m1))
    )
    d_ell = np.log(nu * (1.0 - rho) / (two_nu_m1 * delta)) - r_p
    d2_ell = -1.0 / (nu * two_nu_m1)
    return DualState(nu=float(nu), ell=float(ell), d_ell=float(d_ell), d2_ell=float(d2_ell))


def maximize_dual(
    n_pair: float, rho: float, delta: float, r_p: float
) -> DualMaximum:
    """Maximize the dual objective over nu in [1/(1+rho), 1].

    The stationary point is nu* = u/(2u + rho - 1) (u = delta e^{r_p});
    it is clamped to the admissible interval, with the clamp direction
    recorded.  max(ell(nu*), 0) reproduces the lower bound.
    """
    _check_inputs(rho, delta, r_p)
    u = delta * float(np.exp(r_p))
    lo = 1.0 / (1.0 + rho)
    denom = 2.0 * u + rho - 1.0
    clamped = None
    if denom <= 0.0:
        nu_star = 1.0
        clamped = "upper"
    else:
        nu_star = u / denom
        if nu_star >= 1.0:
            nu_star, clamped = 1.0, ("upper" if nu_star > 1.0 else None)
        elif nu_star <= lo:
            nu_star, clamped = lo, ("lower" if nu_star < lo else None)
    state = dual_objective(nu_star, n_pair, rho, delta, r_p)
    point = RateRegionPoint(
        r_p=r_p,
        r_c=max(state.ell, 0.0),
        regime=classify_regime(rho, delta, r_p),
        kind=KIND_LOWER,
    )
    return DualMaximum(nu_star=nu_star, state=state, point=point, clamped=clamped)


def _pair_power(source: ValidatedSource, n_pair: EntropyPowerValue | None) -> EntropyPowerValue:
    if n_pair is None:
        return pair_entropy_power(source)
    return n_pair


def wyner_common_information(
    source: ValidatedSource, n_pair: EntropyPowerValue | None = None
) -> float:
    """ln(N(X,Y)/(1 - rho)); for Gaussian pairs 1/2 ln((1+rho)/(1-rho))."""
    if source.kind == KIND_DISCRETE:
        raise ValidationError("common information needs a source with a density")
    if source.rho == 0.0:
        return 0.0
    n = _pair_power(source, n_pair)
    return float(np.log(n.value / (1.0 - source.rho)))


@dataclass(frozen=True)
class AdditiveRateResult:
    """Exact value when available, otherwise the bound pair."""

    lower: RateRegionPoint
    upper: RateRegionPoint
    exact: RateRegionPoint | None
    bounds_only: bool
    n_pair: EntropyPowerValue


def additive_exact(
    source: ValidatedSource,
    delta: float,
    r_p: float,
    n_pair: EntropyPowerValue | None = None,
) -> AdditiveRateResult:
    """Trade-off for an additive-channel source, exact where known.

    Exact for u <= 1 - sigma_theta2 (the lower bound is achieved) and in the
    saturated regime (both bounds are 0).  On (1 - sigma_theta2, 1] only the
    sandwich is known and the result is flagged bounds-only.
    """
    if source.kind != KIND_ADDITIVE:
        raise ValidationError(f"expected an additive-channel source, got {source.kind!r}")
    d = source.scaled_delta(delta)
    n = _pair_power(source, n_pair)
    lower = common_rate_lower(n.value, source.rho, d, r_p)
    upper = common_rate_upper(source.rho, d, r_p)
    u = d * float(np.exp(r_p))
    if u > 1.0:
        exact = RateRegionPoint(r_p=r_p, r_c=0.0, regime=REGIME_SATURATED, kind=KIND_EXACT)
        return AdditiveRateResult(lower=lower, upper=upper, exact=exact,
                                  bounds_only=False, n_pair=n)
    if u <= 1.0 - source.sigma_theta2:
        exact = RateRegionPoint(r_p=r_p, r_c=lower.r_c, regime=lower.regime, kind=KIND_EXACT)
        return AdditiveRateResult(lower=lower, upper=upper, exact=exact,
                                  bounds_only=False, n_pair=n)
    return AdditiveRateResult(lower=lower, upper=upper, exact=None,
                              bounds_only=True, n_pair=n)


def scaled_sum_auxiliary(rho: float, delta: float, r_p: float) -> ScaledSumAuxiliary:
    """Scaled noisy-sum auxiliary for the high regime.

    W = alpha (X + Y) + N with alpha = sqrt(1-u)/(1+rho) and
    Var(N) = (2u + rho - 1)/(1 + rho); then Var(W) = 1, E[XW] = sqrt(1-u),
    I(X,Y; W) = 1/2 ln[(1+rho)/(2u + rho - 1)] (the high-regime upper bound)
    and E[Var(X|W)] <= u with equality for Gaussian pairs.
    """
    _check_inputs(rho, delta, r_p)
    u = delta * float(np.exp(r_p))
    if not (1.0 - rho - 1e-12 <= u <= 1.0 + 1e-12):
        raise RegimeViolation(
            f"scaled-sum auxiliary needs 1-rho <= delta e^(r_p) <= 1, got u={u}"
        )
    u = min(max(u, 1.0 - rho), 1.0)
    alpha = float(np.sqrt(1.0 - u)) / (1.0 + rho)
    noise_variance = (2.0 * u + rho - 1.0) / (1.0 + rho)
    var_w = alpha * alpha * 2.0 * (1.0 + rho) + noise_variance
    mi = 0.5 * log_plus((1.0 + rho) / (2.0 * u + rho - 1.0))
    return ScaledSumAuxiliary(
        alpha=alpha,
        noise_variance=noise_variance,
        var_w=var_w,
        mutual_information=mi,
        cross_correlation=float(np.sqrt(1.0 - u)),
        conditional_variance_bound=u,
    )


def shared_component_auxiliary(
    source: ValidatedSource, delta: float, r_p: float
) -> SharedComponentAuxiliary:
    """Shared-component auxiliary W = theta + sqrt(alpha_d) V.

    Valid for 1 - rho <= u <= 1 - sigma_theta2; alpha_d = 1 - sigma_theta2 - u
    lies in [0, rho - sigma_theta2].  Conditioned on W both coordinates have
    variance u, so the induced private sum rate is exactly ln(u/delta) = r_p.
    """
    if source.kind != KIND_ADDITIVE:
        raise ValidationError(f"expected an additive-channel source, got {source.kind!r}")
    d = source.scaled_delta(delta)
    _check_inputs(source.rho, d, r_p)
    s2 = source.sigma_theta2
    u = d * float(np.exp(r_p))
    if not (1.0 - source.rho - 1e-12 <= u <= 1.0 - s2 + 1e-12):
        raise RegimeViolation(
            f"shared-component auxiliary needs 1-rho <= delta e^(r_p) <= "
            f"1-sigma_theta2, got u={u}"
        )
    u = min(max(u, 1.0 - source.rho), 1.0 - s2)
    alpha_d = max(0.0, min(1.0 - s2 - u, source.rho - s2))
    cond_var = 1.0 - s2 - alpha_d
    residual = np.array(
        [
            [1.0 - s2 - alpha_d, source.rho - s2 - alpha_d],
            [source.rho - s2 - alpha_d, 1.0 - s2 - alpha_d],
        ]
    )
    eig_min = float(np.linalg.eigvalsh(residual).min())
    if eig_min < -1e-12:
        raise RegimeViolation(f"residual covariance not PSD (min eig {eig_min})")
    return SharedComponentAuxiliary(
        alpha_d=alpha_d,
        conditional_variance=cond_var,
        private_sum_rate=float(np.log(cond_var / d)),
        residual_covariance=residual,
    )


@dataclass(frozen=True)
class CurveRow:
    """One sweep row; ``exact`` is None when only bounds are known."""

    r_p: float
    lower: float
    upper: float
    exact: float | None
    regime: str
    flags: str  # "exact" | "bounds_only"


def sweep(
    source: ValidatedSource,
    delta: float,
    r_p_values: Sequence[float],
    n_pair: EntropyPowerValue | None = None,
) -> list[CurveRow]:
    """Evaluate the bound set on an R_p grid (closed forms only).

    Discrete tabulated sources have pair entropy power 0 (no density), so
    their lower-bound column is identically zero; the upper bound and the
    saturated-regime exact zero still apply.
    """
    d = source.scaled_delta(delta)
    if source.kind == KIND_DISCRETE:
        n_value = 0.0
    else:
        n_value = _pair_power(source, n_pair).value
    rows = []
    for r_p in r_p_values:
        lower = common_rate_lower(n_value, source.rho, d, r_p)
        upper = common_rate_upper(source.rho, d, r_p)
        if source.kind == KIND_GAUSSIAN:
            exact = gaussian_exact(source.rho, d, r_p).r_c
        elif lower.regime == REGIME_SATURATED:
            exact = 0.0
        elif source.kind == KIND_ADDITIVE and d * float(np.exp(r_p)) <= 1.0 - source.sigma_theta2:
            exact = lower.r_c
        else:
            exact = None
        rows.append(
            CurveRow(
                r_p=r_p,
                lower=lower.r_c,
                upper=upper.r_c,
                exact=exact,
                regime=lower.regime,
                flags="exact" if exact is not None else "bounds_only",
            )
        )
    return rows
