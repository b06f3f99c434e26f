"""Scalar and conditional rate-distortion bounds with MSE distortion.

The scalar Shannon sandwich is

    1/2 log+(N(X)/delta)  <=  R_X(delta)  <=  1/2 log+(Var(X)/delta)

with N(X) the entropy power.  Conditional versions average over the letters
of a finite conditioning variable; the distortion budget is split across
letters by reverse water-filling (``allocate_distortion``), and a per-letter
additive test channel certifies that the allocated point is achievable with
a Gaussian conditional law.

All rates are in nats.  log+(x) := max(ln x, 0).
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DeltaNotBelowVariance,
    EmptyProfile,
    NegativeDelta,
    NonPositiveInput,
)

# comparison slack for gamma <= Var_i decisions, scaled by max(1, Var_i)
CLAMP_TOL = 1e-12


def log_plus(x: float) -> float:
    """max(ln x, 0), with log+(0) = 0 by convention."""
    if x <= 1.0:
        return 0.0
    return float(np.log(x))


def rd_lower(entropy_power: float, delta: float) -> float:
    """Shannon lower bound 1/2 log+(N(X)/delta)."""
    if entropy_power < 0.0:
        raise NonPositiveInput(f"entropy power must be >= 0, got {entropy_power}")
    if delta <= 0.0:
        raise NonPositiveInput(f"distortion must be positive, got {delta}")
    return 0.5 * log_plus(entropy_power / delta)


def rd_upper(variance: float, delta: float) -> float:
    """Gaussian upper bound 1/2 log+(Var(X)/delta)."""
    if variance < 0.0:
        raise NonPositiveInput(f"variance must be >= 0, got {variance}")
    if delta <= 0.0:
        raise NonPositiveInput(f"distortion must be positive, got {delta}")
    return 0.5 * log_plus(variance / delta)


@dataclass(frozen=True, eq=False)
class ConditionalVarianceProfile:
    """Letters of a finite conditioning variable, sorted by variance.

    ``weights[i]`` is p(w_i), ``variances[i]`` is Var(X | W = w_i).  Entries
    are stored ascending by variance (ties broken by original index); the
    allocation result is invariant to the input order.  ``order`` holds the
    permutation such that ``weights == input_weights[order]``, so callers can
    map sorted per-letter results back to their own letter indexing.
    """

    weights: np.ndarray = field(repr=False)
    variances: np.ndarray = field(repr=False)
    order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        v = np.asarray(self.variances, dtype=float).ravel()
        if w.size == 0 or v.size == 0:
            raise EmptyProfile("profile needs at least one letter")
        if w.size != v.size:
            raise EmptyProfile(f"{w.size} weights vs {v.size} variances")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
            raise NonPositiveInput("weights and variances must be finite")
        if np.any(w < 0.0) or np.any(v < 0.0):
            raise NonPositiveInput("weights and variances must be nonnegative")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-12 * max(1.0, w.size):
            raise NonPositiveInput(f"weights sum to {total}, expected 1")
        order = np.argsort(v, kind="stable")
        object.__setattr__(self, "weights", w[order] / total)
        object.__setattr__(self, "variances", v[order])
        object.__setattr__(self, "order", order)
        self.weights.setflags(write=False)
        self.variances.setflags(write=False)
        self.order.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def mean_variance(self) -> float:
        """E[Var(X|W)]."""
        return float(self.weights @ self.variances)


@dataclass(frozen=True, eq=False)
class AllocationResult:
    """Reverse water-filling output, aligned with the sorted profile."""

    per_letter_delta: np.ndarray
    gamma: float
    clamp_count: int
    achieved_rate: float
    surplus: float = 0.0

    @property
    def clamped(self) -> np.ndarray:
        mask = np.zeros(self.per_letter_delta.size, dtype=bool)
        mask[: self.clamp_count] = True
        return mask


def allocate_distortion(
    profile: ConditionalVarianceProfile, delta: float
) -> AllocationResult:
    """Split a distortion budget across letters by reverse water-filling.

    Start with water level gamma = delta.  While some unclamped letter has
    variance below the water level, clamp it at its variance and recompute

        gamma = (delta - sum_{clamped} p_i Var_i) / (1 - sum_{clamped} p_i).

    Unclamped letters receive gamma.  The achieved rate is the sum of
    per-letter Gaussian rates (p_i/2) ln(Var_i/gamma) over unclamped letters.
    """
    if delta < 0.0:
        raise NegativeDelta(f"distortion budget must be >= 0, got {delta}")
    p = profile.weights
    v = profile.variances
    n = p.size
    mean_var = profile.mean_variance()

    if delta >= mean_var:
        # more budget than total conditional variance: all letters clamp
        deltas = v.copy()
        return AllocationResult(
            per_letter_delta=deltas,
            gamma=float(v[-1]),
            clamp_count=n,
            achieved_rate=0.0,
            surplus=float(delta - mean_var),
        )

    cum_p = np.concatenate(([0.0], np.cumsum(p)))
    cum_pv = np.concatenate(([0.0], np.cumsum(p * v)))
    k = 0
    gamma = delta
    while k < n and gamma > v[k] + CLAMP_TOL * max(1.0, v[k]):
        k += 1
        gamma = (delta - cum_pv[k]) / (1.0 - cum_p[k])

    deltas = np.where(np.arange(n) < k, v, gamma)
    if gamma <= 0.0:
        rate = float("inf") if np.any(v[k:] > 0.0) else 0.0
    else:
        rate = float(np.sum(p[k:] * 0.5 * np.log(np.maximum(v[k:] / gamma, 1.0))))
    return AllocationResult(
        per_letter_delta=deltas,
        gamma=float(gamma),
        clamp_count=k,
        achieved_rate=rate,
    )


def allocation_intermediate_bound(
    profile: ConditionalVarianceProfile, delta: float
) -> float:
    """E[1/2 log+(Var(X|W)/Delta_W)] at the water-filling allocation.

    This is the per-letter Gaussian bound averaged over letters, the
    quantity sandwiched between the conditional Shannon bounds.
    """
    return allocate_distortion(profile, delta).achieved_rate


def cond_rd_upper(profile: ConditionalVarianceProfile, delta: float) -> float:
    """Conditional upper bound 1/2 log+(E[Var(X|W)]/delta).

    Also asserts the allocation intermediate bound never exceeds it (the
    averaged per-letter bound is tighter than the pooled-variance bound).
    """
    if delta <= 0.0:
        raise NonPositiveInput(f"distortion must be positive, got {delta}")
    pooled = 0.5 * log_plus(profile.mean_variance() / delta)
    intermediate = allocation_intermediate_bound(profile, delta)
    assert intermediate <= pooled + 1e-10, (
        f"allocation bound {intermediate} exceeds pooled bound {pooled}"
    )
    return pooled


def cond_rd_lower(conditional_entropy_power: float, delta: float) -> float:
    """Conditional Shannon lower bound 1/2 log+(N(X|Y)/delta)."""
    return rd_lower(conditional_entropy_power, delta)


@dataclass(frozen=True)
class TestChannel:
    """Additive forward test channel X_hat = alpha (X + Z), Z ~ N(0, noise_variance)."""

    alpha: float
    noise_variance: float


def build_test_channel(variance: float, delta_w: float) -> TestChannel:
    """Per-letter test channel achieving distortion delta_w on variance Var(X_w).

    alpha = (Var - delta)/Var and Var(Z) = Var*delta/(Var - delta), so that
    (1 - alpha)^2 Var + alpha^2 Var(Z) = delta exactly and the Gaussian
    mutual information is 1/2 ln(Var/delta).
    """
    if not (0.0 < delta_w < variance):
        raise DeltaNotBelowVariance(
            f"need 0 < delta_w < variance, got delta_w={delta_w}, variance={variance}"
        )
    alpha = (variance - delta_w) / variance
    noise_variance = variance * delta_w / (variance - delta_w)
    return TestChannel(alpha=alpha, noise_variance=noise_variance)


def profile_from_pairs(entries: Sequence[Sequence[float]]) -> ConditionalVarianceProfile:
    """Build a profile from (weight, variance) pairs."""
    if len(entries) == 0:
        raise EmptyProfile("profile needs at least one letter")
    w = [e[0] for e in entries]
    v = [e[1] for e in entries]
    return ConditionalVarianceProfile(weights=np.array(w), variances=np.array(v))
