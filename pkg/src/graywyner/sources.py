"""Source models for the symmetric two-terminal setup.

Three kinds of sources are accepted:

* ``gaussian``          -- a jointly Gaussian pair with correlation rho and a
                           common marginal variance sigma2,
* ``additive_channel``  -- X = theta + Z_x, Y = theta + Z_y with a discrete
                           zero-mean common part theta and a jointly Gaussian
                           noise pair correlated so that corr(X, Y) = rho,
* ``discrete``          -- a tabulated joint pmf on finite supports.

Validation standardizes everything to zero-mean, unit-variance coordinates
(mean-square distortion is invariant to centering, and distortions against a
common marginal variance sigma2 rescale as delta / sigma2).  All downstream
formulas assume the standardized parameters stored on ``ValidatedSource``.
"""

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BadPmf,
    NonPSDCovariance,
    RhoOutOfRange,
    ValidationError,
    ZeroVariance,
)

PMF_TOL = 1e-12
VAR_MATCH_TOL = 1e-9

KIND_GAUSSIAN = "gaussian"
KIND_ADDITIVE = "additive_channel"
KIND_DISCRETE = "discrete"


@dataclass(frozen=True)
class GaussianPairSpec:
    """Jointly Gaussian pair, symmetric marginals."""

    rho: float
    sigma2: float = 1.0


@dataclass(frozen=True)
class AdditiveChannelSpec:
    """Discrete common part plus correlated Gaussian noise.

    ``theta_law`` is a sequence of ``(value, probability)`` atoms.  Either
    ``theta_law`` or ``sigma_theta2`` may be omitted: a missing law defaults
    to the symmetric two-point law with the requested variance, a missing
    variance is computed from the law.  If both are given they must agree.
    """

    rho: float
    sigma_theta2: float | None = None
    theta_law: tuple[tuple[float, float], ...] | None = None
    sigma2: float = 1.0


@dataclass(frozen=True)
class DiscreteJointSpec:
    """Tabulated joint pmf; ``pmf[i, j] = P(X = x_support[i], Y = y_support[j])``."""

    x_support: tuple[float, ...]
    y_support: tuple[float, ...]
    pmf: tuple[tuple[float, ...], ...]


@dataclass(frozen=True, eq=False)
class ValidatedSource:
    """Standardized source parameters consumed by every other module.

    ``rho`` is the correlation of the standardized pair, ``sigma2`` the
    original common marginal variance (distortions rescale as
    ``delta / sigma2``).  Kind-specific payloads are ``None`` when absent.
    """

    kind: str
    rho: float
    sigma2: float
    sigma_theta2: float | None = None
    theta_values: np.ndarray | None = field(default=None, repr=False)
    theta_probs: np.ndarray | None = field(default=None, repr=False)
    x_support: np.ndarray | None = field(default=None, repr=False)
    y_support: np.ndarray | None = field(default=None, repr=False)
    pmf: np.ndarray | None = field(default=None, repr=False)

    def scaled_delta(self, delta: float) -> float:
        """Distortion in standardized units."""
        if delta < 0:
            raise ValidationError(f"distortion must be nonnegative, got {delta}")
        return delta / self.sigma2

    def noise_covariance(self) -> np.ndarray:
        """Covariance of the standardized Gaussian noise pair (additive kind)."""
        if self.kind != KIND_ADDITIVE:
            raise ValidationError(f"noise covariance undefined for kind={self.kind!r}")
        s2 = self.sigma_theta2
        return np.array([[1.0 - s2, self.rho - s2], [self.rho - s2, 1.0 - s2]])

    def describe(self) -> dict:
        """JSON-friendly summary used in reports and sweep metadata."""
        out = {"kind": self.kind, "rho": self.rho, "sigma2": self.sigma2}
        if self.kind == KIND_ADDITIVE:
            out["sigma_theta2"] = self.sigma_theta2
            out["theta_law"] = [
                [float(v), float(p)]
                for v, p in zip(self.theta_values, self.theta_probs)
            ]
        if self.kind == KIND_DISCRETE:
            out["support_sizes"] = [len(self.x_support), len(self.y_support)]
        return out


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not np.isfinite(rho):
        raise RhoOutOfRange(f"rho must be finite, got {rho}")
    if rho < 0.0:
        raise RhoOutOfRange(
            f"rho must be nonnegative, got {rho}; negate one coordinate first"
        )
    if rho >= 1.0:
        raise RhoOutOfRange(f"rho must be strictly below 1, got {rho}")
    return rho


def _check_sigma2(sigma2: float) -> float:
    sigma2 = float(sigma2)
    if not np.isfinite(sigma2) or sigma2 <= 0.0:
        raise ZeroVariance(f"marginal variance must be positive, got {sigma2}")
    return sigma2


def validate_gaussian(spec: GaussianPairSpec) -> ValidatedSource:
    """Validate and standardize a jointly Gaussian pair."""
    rho = _check_rho(spec.rho)
    sigma2 = _check_sigma2(spec.sigma2)
    return ValidatedSource(kind=KIND_GAUSSIAN, rho=rho, sigma2=sigma2)


def _theta_from_law(law: Sequence[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    atoms = np.asarray([v for v, _ in law], dtype=float)
    probs = np.asarray([p for _, p in law], dtype=float)
    if atoms.size == 0:
        raise BadPmf("theta law must contain at least one atom")
    if not np.all(np.isfinite(atoms)):
        raise BadPmf("theta atoms must be finite")
    if np.any(probs < -PMF_TOL):
        raise BadPmf("theta probabilities must be nonnegative")
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-9:
        raise BadPmf(f"theta probabilities sum to {total}, expected 1")
    probs = np.clip(probs, 0.0, None) / np.clip(probs, 0.0, None).sum()
    keep = probs > 0.0
    return atoms[keep], probs[keep]


def validate_additive(spec: AdditiveChannelSpec) -> ValidatedSource:
    """Validate and standardize an additive-common-part source.

    Admissibility (in standardized units): 0 <= sigma_theta2 <= rho < 1, so
    the noise covariance is PSD with nonnegative correlation.
    """
    rho = _check_rho(spec.rho)
    sigma2 = _check_sigma2(spec.sigma2)

    if spec.theta_law is None and spec.sigma_theta2 is None:
        raise ValidationError("additive source needs theta_law or sigma_theta2")
    if spec.theta_law is not None:
        values, probs = _theta_from_law(spec.theta_law)
        values = values - float(probs @ values)
        var = float(probs @ values**2)
        if spec.sigma_theta2 is not None:
            if abs(var - float(spec.sigma_theta2)) > VAR_MATCH_TOL * max(1.0, var):
                raise ValidationError(
                    f"theta_law variance {var} disagrees with sigma_theta2="
                    f"{spec.sigma_theta2}"
                )
    else:
        var = float(spec.sigma_theta2)
        if var < 0.0:
            raise ValidationError(f"sigma_theta2 must be nonnegative, got {var}")
        if var == 0.0:
            values, probs = np.array([0.0]), np.array([1.0])
        else:
            values = np.array([-np.sqrt(var), np.sqrt(var)])
            probs = np.array([0.5, 0.5])

    # standardize: total marginal variance sigma2 -> 1
    scale = np.sqrt(sigma2)
    values = values / scale
    s_theta2 = var / sigma2
    if s_theta2 > rho + 1e-12:
        raise NonPSDCovariance(
            f"sigma_theta2={s_theta2} exceeds rho={rho}; the decomposition needs "
            "0 <= sigma_theta2 <= rho"
        )
    s_theta2 = min(s_theta2, rho)
    return ValidatedSource(
        kind=KIND_ADDITIVE,
        rho=rho,
        sigma2=sigma2,
        sigma_theta2=s_theta2,
        theta_values=values,
        theta_probs=probs,
    )


def validate_discrete(spec: DiscreteJointSpec) -> ValidatedSource:
    """Validate and standardize a tabulated joint pmf.

    Marginal variances must agree (within 1e-9 relative): after per-axis
    standardization a symmetric distortion budget stays symmetric only in
    that case; pre-scale the supports otherwise.
    """
    xs = np.asarray(spec.x_support, dtype=float)
    ys = np.asarray(spec.y_support, dtype=float)
    pmf = np.asarray(spec.pmf, dtype=float)
    if xs.ndim != 1 or ys.ndim != 1 or xs.size == 0 or ys.size == 0:
        raise ValidationError("supports must be non-empty 1-D sequences")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValidationError("support values must be finite")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise ValidationError("support values must be strictly increasing")
    if pmf.shape != (xs.size, ys.size):
        raise BadPmf(
            f"pmf shape {pmf.shape} does not match supports "
            f"({xs.size}, {ys.size})"
        )
    if np.any(pmf < -PMF_TOL):
        raise BadPmf("pmf entries must be nonnegative")
    total = float(pmf.sum())
    if abs(total - 1.0) > PMF_TOL * pmf.size + 1e-12:
        raise BadPmf(f"pmf sums to {total}, expected 1")
    pmf = np.clip(pmf, 0.0, None)
    pmf = pmf / pmf.sum()

    px = pmf.sum(axis=1)
    py = pmf.sum(axis=0)
    mx, my = float(px @ xs), float(py @ ys)
    vx = float(px @ (xs - mx) ** 2)
    vy = float(py @ (ys - my) ** 2)
    if vx <= 0.0 or vy <= 0.0:
        raise ZeroVariance("both coordinates must have positive variance")
    if abs(vx - vy) > VAR_MATCH_TOL * max(vx, vy):
        raise ValidationError(
            f"marginal variances differ ({vx} vs {vy}); symmetric distortion "
            "requires equal variances, pre-scale the supports"
        )
    sigma2 = vx
    xs_std = (xs - mx) / np.sqrt(vx)
    ys_std = (ys - my) / np.sqrt(vy)
    cov = float(((xs_std[:, None] * ys_std[None, :]) * pmf).sum())
    rho = _check_rho(cov)
    return ValidatedSource(
        kind=KIND_DISCRETE,
        rho=rho,
        sigma2=sigma2,
        x_support=xs_std,
        y_support=ys_std,
        pmf=pmf,
    )


def from_config(config: Mapping) -> ValidatedSource:
    """Build a validated source from a parsed configuration mapping."""
    if not isinstance(config, Mapping):
        raise ValidationError(f"source config must be a mapping, got {type(config)}")
    kind = config.get("kind")
    known = {"kind", "rho", "sigma2", "sigma_theta2", "theta_law", "x_support",
             "y_support", "pmf"}
    extra = set(config) - known
    if extra:
        raise ValidationError(f"unknown source config keys: {sorted(extra)}")
    if kind == KIND_GAUSSIAN:
        if "rho" not in config:
            raise ValidationError("gaussian source config requires rho")
        return validate_gaussian(
            GaussianPairSpec(rho=config["rho"], sigma2=config.get("sigma2", 1.0))
        )
    if kind == KIND_ADDITIVE:
        if "rho" not in config:
            raise ValidationError("additive source config requires rho")
        law = config.get("theta_law")
        if law is not None:
            law = tuple((float(v), float(p)) for v, p in law)
        return validate_additive(
            AdditiveChannelSpec(
                rho=config["rho"],
                sigma_theta2=config.get("sigma_theta2"),
                theta_law=law,
                sigma2=config.get("sigma2", 1.0),
            )
        )
    if kind == KIND_DISCRETE:
        for key in ("x_support", "y_support", "pmf"):
            if key not in config:
                raise ValidationError(f"discrete source config requires {key}")
        return validate_discrete(
            DiscreteJointSpec(
                x_support=tuple(float(v) for v in config["x_support"]),
                y_support=tuple(float(v) for v in config["y_support"]),
                pmf=tuple(tuple(float(p) for p in row) for row in config["pmf"]),
            )
        )
    raise ValidationError(
        f"unknown source kind {kind!r}; expected one of "
        f"{[KIND_GAUSSIAN, KIND_ADDITIVE, KIND_DISCRETE]}"
    )
