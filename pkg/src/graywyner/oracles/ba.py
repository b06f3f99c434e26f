"""Blahut-Arimoto rate-distortion solver for finite sources.

The fixed-slope inner loop lives in :mod:`graywyner.kernels` (compiled when
available, pure numpy otherwise); this module owns input validation, the
bracketed search for the slope that hits a target distortion, and the
tangent-line correction that turns the converged point into a rate at the
exact target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BadPmf, DeltaInfeasible, NotConverged
from .. import kernels

MAX_ITER = 10_000
RATE_TOL = 1e-9
#: relative distortion accuracy requested from the slope bisection
DIST_TOL_REL = 1e-8
DIST_TOL_ABS = 1e-11
_MAX_EXPANSIONS = 200
_MAX_BISECTIONS = 200
#: uniform mass blended into every warm start so zeroed points stay revivable
_DUST = 1e-6


@dataclass(frozen=True)
class BAFit:
    """Converged operating point of the solver.

    ``rate`` is already tangent-corrected to the requested distortion, i.e.
    ``rate = rate(beta) + beta * (distortion(beta) - target)``, which is a
    valid lower-envelope evaluation because the rate-distortion function is
    convex with slope ``-beta`` at the converged point; of all slopes the
    search visited, the one with the tightest such evaluation is reported.
    ``certified_gap`` is the Kuhn-Tucker residual of that winning solve; it
    bounds how far the tangent line can sit above the true one, so ``rate``
    can overstate the curve evaluation by at most that much, and it
    understates by at most the chord-tangent certificate the slope search
    drives down before stopping.
    """

    rate: float
    distortion: float
    beta: float
    reproduction_pmf: np.ndarray
    iterations: int
    distortion_floor: float
    zero_rate_distortion: float
    certified_gap: float


def _check_pmf(pmf: np.ndarray) -> np.ndarray:
    p = np.asarray(pmf, dtype=np.float64).ravel()
    if p.size == 0:
        raise BadPmf("probability vector is empty")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise BadPmf("probabilities must be finite and non-negative")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise BadPmf(f"probabilities sum to {total!r}, expected 1 within 1e-9")
    return p / total


def _solve_fixed_slope(
    p: np.ndarray,
    dist: np.ndarray,
    dmin: np.ndarray,
    beta: float,
    q0: np.ndarray,
    rate_tol: float = RATE_TOL,
    gap_tol: float = kernels.GAP_TOL,
) -> tuple[np.ndarray, float, float, int, float]:
    """Run the kernel and translate failure statuses into exceptions."""
    (
        q,
        rate,
        distortion,
        objective,
        iters,
        status,
        max_jump,
        gap,
    ) = kernels.ba_fixed_slope(p, dist, dmin, beta, q0, rate_tol, MAX_ITER,
                               gap_tol)
    if status == kernels.STATUS_NUMERIC:
        raise NotConverged(f"fixed-slope iteration lost positivity at beta={beta!r}")
    if status == kernels.STATUS_MAX_ITER:
        raise NotConverged(
            f"fixed-slope iteration hit max_iters={MAX_ITER} at beta={beta!r} "
            f"with certified optimality gap {gap!r}"
        )
    # The per-iteration objective is analytically non-increasing; any upward
    # jump beyond rounding noise means the kernel is broken.
    assert max_jump <= 1e-9 * max(1.0, abs(objective)), (
        f"objective increased by {max_jump!r} during fixed-slope iteration"
    )
    return q, float(rate), float(distortion), int(iters), float(gap)


def _secant_slope(
    beta_lo: float, d_lo: float, beta_hi: float, d_hi: float, delta: float
) -> float:
    """Secant proposal for the slope whose distortion hits ``delta``.

    Interpolates in log-log coordinates when the bracket permits (both
    slopes and both distortions positive), linearly otherwise, and degrades
    to the midpoint on a degenerate bracket.
    """
    if not d_lo > d_hi:
        return 0.5 * (beta_lo + beta_hi)
    if beta_lo > 0.0 and d_hi > 0.0 and delta > 0.0:
        t = (np.log(d_lo) - np.log(delta)) / (np.log(d_lo) - np.log(d_hi))
        return float(beta_lo * (beta_hi / beta_lo) ** t)
    t = (d_lo - delta) / (d_lo - d_hi)
    return beta_lo + t * (beta_hi - beta_lo)


def solve_rate_at_distortion(
    p: np.ndarray,
    dist: np.ndarray,
    dmin: np.ndarray,
    delta: float,
    q0: np.ndarray | None = None,
    beta_hint: float | None = None,
    rate_tol: float = RATE_TOL,
    gap_tol: float = kernels.GAP_TOL,
    dist_tol_rel: float = DIST_TOL_REL,
    dist_tol_abs: float = DIST_TOL_ABS,
) -> BAFit:
    """Rate at target distortion ``delta`` for a prepared distortion matrix.

    ``p`` must be a clean pmf over the rows of ``dist``; ``dmin`` holds the
    row-wise minima.  This low-level entry exists so callers that evaluate
    many nearby problems (the frontier search) can cache the distortion
    matrix and warm-start with ``beta_hint``, or trade accuracy for speed
    through the tolerance knobs.  The returned ``rate`` carries a two-sided
    accuracy statement tied to ``gap_tol``: it can overstate the curve at
    ``delta`` by at most the certified gap, and understate it by at most
    the bracket's chord-tangent certificate ``max(2 * gap_tol, rate_tol)``
    that the slope search drives down before stopping.
    """
    delta = float(delta)
    n_rows, n_cols = dist.shape
    floor = float(p @ dmin)
    col_mean = p @ dist
    zero_rate = float(col_mean.min())
    if delta < floor - 1e-12 * max(1.0, floor):
        raise DeltaInfeasible(
            f"target distortion {delta!r} is below the floor {floor!r} "
            "achievable on this reproduction grid"
        )
    if q0 is None:
        q0 = np.full(n_cols, 1.0 / n_cols)
    if delta >= zero_rate - 1e-15:
        q = np.zeros(n_cols)
        q[int(np.argmin(col_mean))] = 1.0
        return BAFit(
            rate=0.0,
            distortion=zero_rate,
            beta=0.0,
            reproduction_pmf=q,
            iterations=0,
            distortion_floor=floor,
            zero_rate_distortion=zero_rate,
            certified_gap=0.0,
        )

    total_iters = 0
    last_gap = 0.0
    # Every converged slope is a tangent point of the convex curve, so each
    # evaluation lower-bounds the rate at the target along its tangent; the
    # tightest one seen is the answer, and its operating point the witness.
    best: tuple[float, float, np.ndarray, float, float] | None = None

    def eval_beta(beta: float, q_start: np.ndarray) -> tuple[np.ndarray, float, float]:
        nonlocal total_iters, last_gap, best
        # Multiplicative updates can never regrow a reproduction point once
        # its mass hits exact zero, so a marginal carried over from another
        # slope could lock in a stale support.  Blending in a trace of the
        # uniform marginal keeps every point revivable; unwanted dust dies
        # off again within a few iterations.
        q_start = (1.0 - _DUST) * q_start + _DUST / q_start.size
        try:
            q, rate, distortion, iters, last_gap = _solve_fixed_slope(
                p, dist, dmin, beta, q_start, rate_tol, gap_tol
            )
        except NotConverged:
            # A warm start is an optimization, never load-bearing: a carried
            # marginal can sit so far from this slope's optimum that the
            # iteration budget runs out mid-migration.  Retry once from the
            # uniform marginal before giving up.
            uniform = np.full(q_start.size, 1.0 / q_start.size)
            if np.allclose(q_start, uniform):
                raise
            q, rate, distortion, iters, last_gap = _solve_fixed_slope(
                p, dist, dmin, beta, uniform, rate_tol, gap_tol
            )
        total_iters += iters
        corrected = rate + beta * (distortion - delta)
        if best is None or corrected > best[0]:
            best = (corrected, beta, q, distortion, last_gap)
        return q, rate, distortion

    # Distortion is non-increasing in beta: beta=0 gives the zero-rate point
    # above the target, and beta -> inf approaches the floor below it.
    beta_lo, rate_lo, d_lo = 0.0, 0.0, zero_rate
    if beta_hint is not None and beta_hint > 0.0:
        beta_hi = float(beta_hint)
    else:
        beta_hi = 1.0 / max(2.0 * (delta - floor), 1e-12)
    q = np.asarray(q0, dtype=np.float64)
    q, rate_hi, d_hi = eval_beta(beta_hi, q)
    expansions = 0
    while d_hi > delta:
        beta_lo, rate_lo, d_lo = beta_hi, rate_hi, d_hi
        beta_hi *= 2.0
        q, rate_hi, d_hi = eval_beta(beta_hi, q)
        expansions += 1
        if expansions > _MAX_EXPANSIONS:
            raise NotConverged(
                f"slope bracket expansion failed to cross distortion {delta!r}"
            )

    beta, rate, distortion = beta_hi, rate_hi, d_hi
    tol = max(dist_tol_abs, dist_tol_rel * delta)
    # The answer is the tangent-corrected rate at the target, and the
    # bracket certifies it: each endpoint tangent is a lower bound on the
    # convex curve there, the chord through the endpoints an upper bound.
    # Stop once the certificate pinches below the kernel's own rate
    # resolution (the certified gap can move any single rate by that much),
    # so the search never chases distortion placement the inner loop cannot
    # resolve.
    rate_cert = max(2.0 * gap_tol, rate_tol)
    # Shrink the bracket by secant steps in log-log coordinates (distortion
    # decays roughly as a power of the slope, so the secant there is nearly
    # exact), clipped away from the endpoints; whenever a step fails to cut
    # the bracket substantially, the next one falls back to the midpoint,
    # preserving the bisection worst case.
    force_mid = False
    for _ in range(_MAX_BISECTIONS):
        if abs(distortion - delta) <= tol:
            break
        if d_lo > d_hi:
            chord = rate_hi + (delta - d_hi) * (rate_lo - rate_hi) / (
                d_lo - d_hi
            )
            if chord - best[0] <= rate_cert:
                break
        width = beta_hi - beta_lo
        if width <= 1e-12 * (1.0 + beta_hi):
            break
        if force_mid:
            beta = 0.5 * (beta_lo + beta_hi)
        else:
            beta = _secant_slope(beta_lo, d_lo, beta_hi, d_hi, delta)
            guard = 0.01 * width
            beta = min(max(beta, beta_lo + guard), beta_hi - guard)
        q, rate, distortion = eval_beta(beta, q)
        if distortion > delta:
            beta_lo, rate_lo, d_lo = beta, rate, distortion
        else:
            beta_hi, rate_hi, d_hi = beta, rate, distortion
        force_mid = beta_hi - beta_lo > 0.7 * width
    else:
        raise NotConverged(
            f"slope bisection did not reach |distortion - {delta!r}| <= {tol!r}"
        )
    if best[3] > delta:
        # Give the winning tangent a chance to come from the feasible side
        # of the bracket, where the witness marginal also meets the target.
        eval_beta(beta_hi, q)

    corrected, beta, q, distortion, gap = best
    return BAFit(
        rate=float(max(corrected, 0.0)),
        distortion=float(distortion),
        beta=float(beta),
        reproduction_pmf=q,
        iterations=total_iters,
        distortion_floor=floor,
        zero_rate_distortion=zero_rate,
        certified_gap=float(gap),
    )


def fit_rate_distortion(
    pmf: np.ndarray,
    support: np.ndarray,
    grid: np.ndarray,
    delta: float,
) -> BAFit:
    """Solve the quadratic-distortion problem for a pmf on ``support``."""
    p = _check_pmf(pmf)
    x = np.asarray(support, dtype=np.float64).ravel()
    g = np.asarray(grid, dtype=np.float64).ravel()
    if x.size != p.size:
        raise BadPmf(
            f"support has {x.size} points but pmf has {p.size} probabilities"
        )
    if g.size == 0 or not np.all(np.isfinite(g)):
        raise BadPmf("reproduction grid must be non-empty and finite")
    if not np.all(np.isfinite(x)):
        raise BadPmf("support values must be finite")
    dist = (x[:, None] - g[None, :]) ** 2
    dmin = dist.min(axis=1)
    return solve_rate_at_distortion(p, dist, dmin, delta)


def ba_rate_distortion(
    pmf: np.ndarray,
    support: np.ndarray,
    grid: np.ndarray,
    delta: float,
) -> float:
    """Rate in nats at distortion ``delta``; see :func:`fit_rate_distortion`."""
    return fit_rate_distortion(pmf, support, grid, delta).rate
