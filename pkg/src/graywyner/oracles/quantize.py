"""Small discrete stand-ins for jointly Gaussian pairs.

A pair is quantized onto ``m`` equal-probability cells per axis (standard
normal quantile edges, infinite outer cells).  Support points are the exact
per-cell conditional means; cell probabilities come from integrating the
bivariate normal density over each rectangle.  The resulting tabulated source
is standardized by the usual source validation, so its correlation is the
(slightly shrunk) correlation of the cell means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre
from scipy.stats import norm

from ..errors import ValidationError
from ..sources import DiscreteJointSpec, ValidatedSource, validate_discrete

MAX_SUPPORT = 16
MAX_REPRODUCTION = 64
#: integration window in standard deviations; mass beyond is < 1.2e-19
_BOX = 9.0
_PANEL_WIDTH = 0.25
_GL_ORDER = 20


@dataclass(frozen=True, eq=False)
class QuantizedInstance:
    """A validated discrete source quantizing a continuous parent.

    ``source`` is standardized (unit marginal variances); ``reproduction`` is
    the shared per-axis reproduction grid in standardized units, built for
    distortion ``delta`` expressed in the parent's (unit-variance) scale.
    ``parent`` records what was quantized.
    """

    source: ValidatedSource
    reproduction: np.ndarray
    delta: float
    parent: dict

    @property
    def support_size(self) -> int:
        return len(self.source.x_support)


def reproduction_grid(
    support: np.ndarray, delta: float, points: int
) -> np.ndarray:
    """Uniform grid spanning [min - 3 sqrt(delta), max + 3 sqrt(delta)],
    merged with the support itself so zero distortion stays reachable."""
    support = np.asarray(support, dtype=np.float64).ravel()
    if points < 2:
        raise ValidationError(f"reproduction grid needs >= 2 points, got {points}")
    if delta <= 0.0:
        raise ValidationError(f"grid construction needs delta > 0, got {delta}")
    pad = 3.0 * float(np.sqrt(delta))
    base = np.linspace(support.min() - pad, support.max() + pad, points)
    grid = np.unique(np.concatenate([base, support]))
    if grid.size > MAX_REPRODUCTION:
        raise ValidationError(
            f"reproduction grid has {grid.size} points, cap is {MAX_REPRODUCTION}"
        )
    return grid


def _cell_edges(m: int) -> np.ndarray:
    inner = norm.ppf(np.arange(1, m) / m)
    return np.concatenate(([-np.inf], inner, [np.inf]))


def _cell_means(edges: np.ndarray) -> np.ndarray:
    a, b = edges[:-1], edges[1:]
    mass = norm.cdf(b) - norm.cdf(a)
    return (norm.pdf(a) - norm.pdf(b)) / mass


def _panel_nodes(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on [lo, hi]."""
    nodes, weights = roots_legendre(_GL_ORDER)
    n_panels = max(1, int(np.ceil((hi - lo) / _PANEL_WIDTH)))
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    ws = (half[:, None] * weights[None, :]).ravel()
    return xs, ws


def _rectangle_pmf(rho: float, edges: np.ndarray) -> np.ndarray:
    """P[i, j] = P(X in cell_i, Y in cell_j) for a standard bivariate normal.

    The y-integral is exact via the conditional normal cdf; the x-integral is
    composite Gauss-Legendre on the cell clipped to +-_BOX standard
    deviations.
    """
    m = edges.size - 1
    if rho == 0.0:
        masses = norm.cdf(edges[1:]) - norm.cdf(edges[:-1])
        return np.outer(masses, masses)
    s = float(np.sqrt(1.0 - rho * rho))
    pmf = np.empty((m, m))
    for i in range(m):
        lo = max(float(edges[i]), -_BOX)
        hi = min(float(edges[i + 1]), _BOX)
        xs, ws = _panel_nodes(lo, hi)
        cond_hi = norm.cdf((edges[None, 1:] - rho * xs[:, None]) / s)
        cond_lo = norm.cdf((edges[None, :-1] - rho * xs[:, None]) / s)
        pmf[i, :] = (ws * norm.pdf(xs)) @ (cond_hi - cond_lo)
    return pmf


def quantize_gaussian(
    rho: float,
    delta: float,
    m: int = 8,
    reproduction_points: int = 48,
) -> QuantizedInstance:
    """Quantize a standardized Gaussian pair with correlation ``rho``.

    ``delta`` is the symmetric per-coordinate distortion (per unit variance)
    the reproduction grid should serve; the standardized instance is treated
    as a unit-variance stand-in for the parent, so the same number applies
    to both.
    """
    if not (2 <= m <= MAX_SUPPORT):
        raise ValidationError(f"support size must be in [2, {MAX_SUPPORT}], got {m}")
    if not (0.0 <= rho < 1.0):
        raise ValidationError(f"rho must be in [0, 1), got {rho}")
    if delta <= 0.0:
        raise ValidationError(f"delta must be positive, got {delta}")
    edges = _cell_edges(m)
    means = _cell_means(edges)
    pmf = _rectangle_pmf(rho, edges)
    # Quadrature health check before normalizing away the residual error:
    # each axis was built from equal-probability cells.
    marginal_err = max(
        float(np.abs(pmf.sum(axis=1) - 1.0 / m).max()),
        float(np.abs(pmf.sum(axis=0) - 1.0 / m).max()),
    )
    assert marginal_err < 1e-10, (
        f"cell-probability quadrature off by {marginal_err} from equal mass"
    )
    pmf /= pmf.sum()
    source = validate_discrete(
        DiscreteJointSpec(
            x_support=tuple(float(t) for t in means),
            y_support=tuple(float(t) for t in means),
            pmf=pmf,
        )
    )
    # The standardized instance acts as a unit-variance stand-in for its
    # parent, so the distortion target carries over unscaled.
    grid = reproduction_grid(
        np.asarray(source.x_support), delta, reproduction_points
    )
    return QuantizedInstance(
        source=source,
        reproduction=grid,
        delta=float(delta),
        parent={
            "kind": "gaussian",
            "rho": float(rho),
            "m": int(m),
            "reproduction_points": int(reproduction_points),
        },
    )
