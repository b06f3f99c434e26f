"""Monte-Carlo checks of the two auxiliary-variable constructions.

Each check simulates the construction with batched, independently keyed
streams, estimates every claimed moment identity batchwise, and compares the
batch mean against the closed form at four standard errors.

Report convention: ``estimate`` is the worst absolute standardized deviation
max_k |observed_k - target_k| / stderr_k across all stochastic checks (an
exactly-satisfied algebraic identity contributes 0, a violated one inf), and
the window is ``(-inf, 4]``.  The individual checks, with their observed
values, targets and standard errors, are listed in ``details["checks"]``.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from ..bounds import scaled_sum_auxiliary, shared_component_auxiliary
from ..errors import ValidationError
from ..rng import stream
from ..sources import KIND_ADDITIVE, ValidatedSource
from .report import OracleReport, make_report

DEFAULT_BATCHES = 32
_MIN_PER_BATCH = 16
_Z_LIMIT = 4.0


def _batch_sizes(n_samples: int, batches: int) -> list[int]:
    if batches < 2:
        raise ValidationError(f"need at least 2 batches, got {batches}")
    if n_samples < batches * _MIN_PER_BATCH:
        raise ValidationError(
            f"n_samples={n_samples} too small for {batches} batches of "
            f">= {_MIN_PER_BATCH}"
        )
    base, rem = divmod(n_samples, batches)
    return [base + 1] * rem + [base] * (batches - rem)


def _stochastic_check(name: str, values: np.ndarray, target: float) -> dict[str, Any]:
    observed = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(values.size))
    diff = observed - target
    if stderr == 0.0:
        z = 0.0 if abs(diff) <= 1e-12 else math.inf
    else:
        z = abs(diff) / stderr
    return {
        "name": name,
        "observed": observed,
        "target": float(target),
        "stderr": stderr,
        "z": float(z),
        "pass": bool(z <= _Z_LIMIT),
    }


def _algebraic_check(name: str, observed: float, target: float,
                     tol: float = 1e-9) -> dict[str, Any]:
    ok = abs(observed - target) <= tol
    return {
        "name": name,
        "observed": float(observed),
        "target": float(target),
        "stderr": None,
        "z": 0.0 if ok else math.inf,
        "pass": bool(ok),
    }


def _finalize(name: str, checks: list[dict[str, Any]],
              mc_stderr: float, inputs: dict[str, Any],
              details: dict[str, Any]) -> OracleReport:
    worst = max(c["z"] for c in checks)
    details = dict(details)
    details["checks"] = checks
    return make_report(
        name=name,
        estimate=worst,
        closed_form_lower=None,
        closed_form_upper=_Z_LIMIT,
        tolerance=0.0,
        mc_stderr=mc_stderr,
        inputs=inputs,
        details=details,
    )


def mc_scaled_sum(
    rho: float,
    delta: float,
    r_p: float,
    n_samples: int,
    seed: int,
    batches: int = DEFAULT_BATCHES,
) -> OracleReport:
    """Simulate W = alpha (X + Y) + N on a Gaussian pair and check its claims.

    ``delta`` is in standardized (unit-variance) units.  Checks: Var(W) = 1,
    E[XW] = sqrt(1 - u), E[Var(X|W)] = u (equality since the pair is
    Gaussian), and the Gaussian closed-form I(X,Y;W) from sample covariances
    against the high-regime value.
    """
    aux = scaled_sum_auxiliary(rho, delta, r_p)
    assert abs(aux.var_w - 1.0) <= 1e-12, f"Var(W) = {aux.var_w} != 1 analytically"
    sizes = _batch_sizes(int(n_samples), batches)
    c = float(np.sqrt(1.0 - rho * rho))
    sd_n = float(np.sqrt(aux.noise_variance))

    var_w = np.empty(len(sizes))
    cross = np.empty(len(sizes))
    resid = np.empty(len(sizes))
    mutual = np.empty(len(sizes))
    for b, n_b in enumerate(sizes):
        g = stream(seed, b)
        z = g.standard_normal((3, n_b))
        x = z[0]
        y = rho * z[0] + c * z[1]
        w = aux.alpha * (x + y) + sd_n * z[2]
        cov = np.cov(np.stack([x, y, w]))
        var_w[b] = cov[2, 2]
        cross[b] = float(np.mean(x * w))
        resid[b] = cov[0, 0] - cov[0, 2] ** 2 / cov[2, 2]
        det_xy = cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2
        mutual[b] = 0.5 * np.log(det_xy * cov[2, 2] / np.linalg.det(cov))

    checks = [
        _stochastic_check("var_w", var_w, 1.0),
        _stochastic_check("cross_correlation", cross, aux.cross_correlation),
        _stochastic_check(
            "conditional_variance", resid, aux.conditional_variance_bound
        ),
        _stochastic_check("mutual_information", mutual, aux.mutual_information),
    ]
    mi = checks[-1]
    return _finalize(
        "mc_scaled_sum",
        checks,
        mc_stderr=mi["stderr"],
        inputs={
            "rho": rho, "delta": delta, "r_p": r_p,
            "n_samples": int(n_samples), "seed": int(seed), "batches": batches,
        },
        details={
            "mutual_information": {
                "observed": mi["observed"],
                "target": aux.mutual_information,
                "stderr": mi["stderr"],
            },
            "alpha": aux.alpha,
            "noise_variance": aux.noise_variance,
        },
    )


def mc_shared_component(
    source: ValidatedSource,
    delta: float,
    r_p: float,
    n_samples: int,
    seed: int,
    batches: int = DEFAULT_BATCHES,
) -> OracleReport:
    """Simulate W = theta + sqrt(alpha_d) V for an additive-channel source.

    The noise pair is sampled through its decomposition
    Z = sqrt(alpha_d) V + Z' with Cov(Z') the construction's residual
    covariance, which is what makes E[X|W] = W hold exactly.  Checks: the
    reassembled pair has the source covariance, the regression of X on W has
    slope 1, both conditional variances equal u, the residual cross-covariance
    matches, and the induced private sum rate equals r_p algebraically.
    """
    if source.kind != KIND_ADDITIVE:
        raise ValidationError(
            f"shared-component check needs an additive-channel source, got "
            f"{source.kind!r}"
        )
    d = source.scaled_delta(delta)
    aux = shared_component_auxiliary(source, delta, r_p)
    chol = np.linalg.cholesky(aux.residual_covariance)
    sd_v = float(np.sqrt(aux.alpha_d))
    sizes = _batch_sizes(int(n_samples), batches)

    cov_xy = np.empty(len(sizes))
    var_x = np.empty(len(sizes))
    slope = np.empty(len(sizes))
    resid_x = np.empty(len(sizes))
    resid_y = np.empty(len(sizes))
    resid_cross = np.empty(len(sizes))
    for b, n_b in enumerate(sizes):
        g = stream(seed, b)
        theta = g.choice(source.theta_values, size=n_b, p=source.theta_probs)
        v = g.standard_normal(n_b)
        zp = chol @ g.standard_normal((2, n_b))
        w = theta + sd_v * v
        x = w + zp[0]
        y = w + zp[1]
        cov = np.cov(np.stack([x, y, w]))
        cov_xy[b] = cov[0, 1]
        var_x[b] = cov[0, 0]
        slope[b] = cov[0, 2] / cov[2, 2]
        resid_x[b] = cov[0, 0] - cov[0, 2] ** 2 / cov[2, 2]
        resid_y[b] = cov[1, 1] - cov[1, 2] ** 2 / cov[2, 2]
        ex = x - w
        ey = y - w
        resid_cross[b] = float(np.mean(ex * ey) - np.mean(ex) * np.mean(ey))

    u = aux.conditional_variance
    checks = [
        _stochastic_check("source_variance", var_x, 1.0),
        _stochastic_check("source_covariance", cov_xy, source.rho),
        _stochastic_check("regression_slope", slope, 1.0),
        _stochastic_check("conditional_variance_x", resid_x, u),
        _stochastic_check("conditional_variance_y", resid_y, u),
        _stochastic_check(
            "residual_cross_covariance", resid_cross,
            float(aux.residual_covariance[0, 1]),
        ),
        _algebraic_check("induced_private_sum_rate", aux.private_sum_rate, r_p),
    ]
    cv = checks[3]
    return _finalize(
        "mc_shared_component",
        checks,
        mc_stderr=cv["stderr"],
        inputs={
            "source": source.describe(), "delta": delta, "r_p": r_p,
            "n_samples": int(n_samples), "seed": int(seed), "batches": batches,
        },
        details={
            "alpha_d": aux.alpha_d,
            "conditional_variance": u,
            "scaled_delta": d,
            "residual_covariance": aux.residual_covariance.tolist(),
        },
    )
