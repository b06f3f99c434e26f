"""Small-instance estimate of the common-rate frontier by direct search.

For a quantized source pair the frontier value at (delta, r_p) is

    min_{p(w|x,y)} I(X,Y; W)
    s.t.  R_{X|W}(delta) + R_{Y|W}(delta) <= r_p,

with each conditional rate evaluated as an achievable two-stage scheme: the
distortion budget is split across the letters of W by reverse water-filling
on the conditional variances, and each letter is charged the test-channel
rate (1/2) ln+(V_w / delta_w), achievable for any letter distribution by a
Gaussian codebook under squared error.  Charging the test-channel rate
rather than the letter's exact discrete rate-distortion value keeps the
constraint at least as tight as the parent source's conditional
rate-distortion machinery, so the finite support biases the estimate upward
rather than silently relaxing the constraint (a discrete letter's true rate
at this distortion sits well below its Gaussian form, which would admit
laws the continuous problem forbids).  Because every iterate corresponds to
a concrete code, the search yields an upper estimate of the true infimum;
the verdict is therefore one-sided against the parent source's closed-form
lower bound, with the quantization shift of the exact curve measured and
stored in the report.

The optimizer is multiplicative (Blahut-Arimoto style) in p(w|x,y): at each
step the exact mutual-information part is minimized in closed form against
the current marginal q(w) while the constraint enters through the linearized
quadratic penalty mu * max(rate_sum - r_p, 0)^2, whose gradient with respect
to the conditional law is assembled from the per-letter slopes (the BA
slopes -beta_w), the pointwise rates, and the water-filling level's response
to perturbations of the letter moments.  A damped step with backtracking
keeps the true penalized objective non-increasing; the penalty multiplier
grows by a factor of 10 over 6 continuation stages.  The best feasible
iterate ever seen is reported.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..bounds import gaussian_exact
from ..errors import NoFeasiblePointFound, ValidationError
from ..rng import stream
from ..scalar_rd import ConditionalVarianceProfile, allocate_distortion
from .quantize import QuantizedInstance
from .report import OracleReport, make_report

MAX_AUX_LETTERS = 5
MAX_SUPPORT = 8
PENALTY_STAGES = 6
PENALTY_GROWTH = 10.0
PENALTY_START = 1.0
INNER_TOL = 1e-8
MAX_INNER = 60
#: constraint slack below which an iterate counts as feasible
FEAS_TOL = 1e-6
#: extra tolerance on top of the measured quantization shift (solver noise)
SLACK_MARGIN = 2e-3
_Q_TINY = 1e-12
_V_TINY = 1e-12
_BACKTRACKS = 7


@dataclass
class _Evaluation:
    mutual_information: float
    rate_sum: float
    gap: float
    q: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray


@dataclass
class _SearchOutcome:
    best_feasible: float = math.inf
    best_rate_sum: float = math.nan
    best_gap: float = math.nan
    min_gap: float = math.inf
    evaluations: int = 0

    def absorb(self, ev: _Evaluation) -> None:
        self.evaluations += 1
        self.min_gap = min(self.min_gap, ev.gap)
        if ev.gap <= FEAS_TOL and ev.mutual_information < self.best_feasible:
            self.best_feasible = ev.mutual_information
            self.best_rate_sum = ev.rate_sum
            self.best_gap = ev.gap

    def merge(self, other: "_SearchOutcome") -> None:
        self.evaluations += other.evaluations
        self.min_gap = min(self.min_gap, other.min_gap)
        if other.best_feasible < self.best_feasible:
            self.best_feasible = other.best_feasible
            self.best_rate_sum = other.best_rate_sum
            self.best_gap = other.best_gap


class _Problem:
    """Evaluator for one (instance, delta, r_p, |W|) problem."""

    def __init__(
        self,
        pmf: np.ndarray,
        xs: np.ndarray,
        ys: np.ndarray,
        delta: float,
        r_p: float,
        n_letters: int,
    ) -> None:
        self.pmf = pmf
        self.delta = float(delta)
        self.r_p = float(r_p)
        self.k = int(n_letters)
        self.axes = (np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))

    def _axis_rates(
        self, axis_idx: int, q: np.ndarray, cond: np.ndarray
    ) -> tuple[float, np.ndarray]:
        """Rate contribution of one axis and the penalty-gradient matrix.

        ``cond[w]`` is p(x | w) (rows of dead letters are zero).  Returns
        (sum_w q_w R_w(delta_w), G) with G[w, i] = d(rate sum)/d T(w|..)
        per unit of probability moved onto support point i of this axis,
        holding the other axis fixed.  Each live unclamped letter is charged
        the test-channel rate (1/2) ln(V_w / delta_w) with slope
        beta_w = 1/(2 delta_w) and pointwise variance sensitivity
        d R_w / d p(x|w) = (x^2 - 2 mu_w x) / (2 V_w).
        """
        vals = self.axes[axis_idx]
        k, m = cond.shape

        mu = cond @ vals
        second = cond @ (vals * vals)
        var = np.maximum(second - mu * mu, 0.0)
        live = (q > _Q_TINY) & (var > _V_TINY)
        var_eff = np.where(live, var, 0.0)

        profile = ConditionalVarianceProfile(weights=q, variances=var_eff)
        alloc = allocate_distortion(profile, self.delta)
        deltas = np.empty(k)
        deltas[profile.order] = alloc.per_letter_delta
        clamped = np.zeros(k, dtype=bool)
        clamped[profile.order] = alloc.clamped
        gamma = alloc.gamma

        rates = np.zeros(k)
        betas = np.zeros(k)
        scores = np.zeros((k, m))
        for w in range(k):
            if not live[w] or clamped[w] or deltas[w] >= var[w]:
                continue  # zero rate, zero slope, zero scores
            rates[w] = 0.5 * math.log(var[w] / deltas[w])
            betas[w] = 0.5 / deltas[w]
            scores[w] = (vals * vals - 2.0 * mu[w] * vals) / (2.0 * var[w])

        rate_axis = float(q @ rates)

        # Penalty gradient: moving mass eps onto (w, x) changes q_w, p(.|w)
        # and hence (mu_w, V_w); the water level gamma responds through the
        # budget identity gamma * Qbar = delta - sum_clamped q V.
        unclamped = live & ~clamped
        q_bar = float(q[unclamped].sum())
        b_sum = float((q[unclamped] * betas[unclamped]).sum())
        grad = np.zeros((k, m))
        s_bar = np.einsum("wm,wm->w", cond, scores)
        for w in range(k):
            if not (q[w] > _Q_TINY):
                continue
            base = rates[w] + scores[w] - s_bar[w]
            if clamped[w]:
                # A clamped letter has zero rate of its own, but mass moved
                # onto (w, x) changes its budget consumption q_w V_w by
                # (x - mu_w)^2, and the water level absorbs it: every
                # unclamped rate responds through gamma.
                if q_bar > 0.0:
                    base = base + (b_sum / q_bar) * (vals - mu[w]) ** 2
            else:
                base = base + (b_sum * gamma / q_bar if q_bar > 0.0 else 0.0)
            grad[w] = base
        return rate_axis, grad

    def evaluate(self, t: np.ndarray) -> _Evaluation:
        """Exact objective/constraint and penalty gradients at t = p(w|x,y)."""
        joint = t * self.pmf[None, :, :]
        q = joint.sum(axis=(1, 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.log(t) - np.log(q)[:, None, None]
        mutual = float(np.sum(joint * np.where(joint > 0.0, log_ratio, 0.0)))

        pxw = joint.sum(axis=2)
        pyw = joint.sum(axis=1)
        safe_q = np.where(q > _Q_TINY, q, 1.0)
        rate_x, grad_x = self._axis_rates(0, q, pxw / safe_q[:, None])
        rate_y, grad_y = self._axis_rates(1, q, pyw / safe_q[:, None])
        rate_sum = rate_x + rate_y
        return _Evaluation(
            mutual_information=mutual,
            rate_sum=rate_sum,
            gap=rate_sum - self.r_p,
            q=q,
            grad_x=grad_x,
            grad_y=grad_y,
        )


def _step(
    t: np.ndarray, q: np.ndarray, pen_grad: np.ndarray, eta: float
) -> np.ndarray:
    """Damped multiplicative update t <- t^(1-eta) (q e^(-pen_grad))^eta.

    At eta = 1 this is the exact row-wise minimizer of
    sum_w t ln(t/q_w) + t . pen_grad (the mutual-information part is handled
    in closed form, the penalty enters linearized); smaller eta interpolates
    toward the current iterate in log space.
    """
    mask = t > 0.0
    log_t = np.log(np.where(mask, t, 1.0))
    with np.errstate(divide="ignore"):
        log_q = np.log(q)[:, None, None]
    z = np.where(mask, (1.0 - eta) * log_t + eta * (log_q - pen_grad), -np.inf)
    z -= z.max(axis=0, keepdims=True)
    out = np.exp(z)
    out /= out.sum(axis=0, keepdims=True)
    return out


def _optimize(problem: _Problem, t0: np.ndarray) -> _SearchOutcome:
    outcome = _SearchOutcome()
    t = t0
    ev = problem.evaluate(t)
    outcome.absorb(ev)
    mu = PENALTY_START
    for _ in range(PENALTY_STAGES):
        value = ev.mutual_information + mu * max(ev.gap, 0.0) ** 2
        eta = 1.0
        for _ in range(MAX_INNER):
            scale = 2.0 * mu * max(ev.gap, 0.0)
            pen_grad = scale * (
                ev.grad_x[:, :, None] + ev.grad_y[:, None, :]
            )
            accepted = False
            eta_try = eta
            for _ in range(_BACKTRACKS):
                t_new = _step(t, ev.q, pen_grad, eta_try)
                ev_new = problem.evaluate(t_new)
                outcome.absorb(ev_new)
                value_new = ev_new.mutual_information + mu * max(ev_new.gap, 0.0) ** 2
                if value_new <= value + 1e-12:
                    accepted = True
                    break
                eta_try *= 0.5
            if not accepted:
                break
            drop = value - value_new
            t, ev, value = t_new, ev_new, value_new
            eta = min(eta_try * 1.3, 1.0)
            if drop <= INNER_TOL * max(1.0, abs(value)):
                break
        mu *= PENALTY_GROWTH
    return outcome


def _init_dirichlet(rng: np.random.Generator, k: int, mx: int, my: int) -> np.ndarray:
    t = rng.dirichlet(np.ones(k), size=(mx, my))
    return np.ascontiguousarray(np.transpose(t, (2, 0, 1)))


def _init_sum_quantizer(
    rng: np.random.Generator,
    k: int,
    xs: np.ndarray,
    ys: np.ndarray,
    pmf: np.ndarray,
) -> np.ndarray:
    """Soft quantizer of x + y: good seeds for high-regime optima."""
    s = xs[:, None] + ys[None, :]
    flat = s.ravel()
    weights = pmf.ravel()
    order = np.argsort(flat)
    cdf = np.cumsum(weights[order])
    picks = np.searchsorted(cdf, (np.arange(k) + 0.5) / k)
    centers = flat[order][np.minimum(picks, flat.size - 1)]
    tau = rng.uniform(0.3, 6.0)
    logits = -tau * (s[None, :, :] - centers[:, None, None]) ** 2
    logits += 0.1 * rng.standard_normal(logits.shape)
    logits -= logits.max(axis=0, keepdims=True)
    t = np.exp(logits)
    t /= t.sum(axis=0, keepdims=True)
    return t


def _constant_letter(k: int, mx: int, my: int) -> np.ndarray:
    t = np.zeros((k, mx, my))
    t[0] = 1.0
    return t


def _restart_init(problem: _Problem, seed: int, index: int) -> np.ndarray:
    rng = stream(seed, 1 + index)
    mx, my = problem.pmf.shape
    if index % 2 == 0:
        return _init_dirichlet(rng, problem.k, mx, my)
    return _init_sum_quantizer(
        rng, problem.k, problem.axes[0], problem.axes[1], problem.pmf
    )


def _run_restart_batch(args: tuple) -> _SearchOutcome:
    pmf, xs, ys, delta, r_p, k, seed, indices = args
    problem = _Problem(pmf, xs, ys, delta, r_p, k)
    outcome = _SearchOutcome()
    for index in indices:
        outcome.merge(_optimize(problem, _restart_init(problem, seed, index)))
    return outcome


def gw_frontier_estimate(
    instance: QuantizedInstance,
    delta: float,
    r_p: float,
    restarts: int = 32,
    seed: int | None = None,
    aux_letters: int = 4,
    jobs: int = 1,
) -> OracleReport:
    """Estimate the frontier value of a quantized instance at (delta, r_p).

    The instance's standardized supports act as a unit-variance stand-in for
    the parent, so ``delta`` is used unscaled, exactly as in the parent's
    closed forms.  The verdict is one-sided: the estimate must not fall more
    than the measured quantization slack below the parent's lower bound.
    When the parent is Gaussian the report also records the two-sided
    comparison window against the exact value.
    """
    if instance.support_size > MAX_SUPPORT:
        raise ValidationError(
            f"frontier search supports at most {MAX_SUPPORT} support points, "
            f"got {instance.support_size}"
        )
    if not (1 <= aux_letters <= MAX_AUX_LETTERS):
        raise ValidationError(
            f"auxiliary alphabet must have 1..{MAX_AUX_LETTERS} letters, "
            f"got {aux_letters}"
        )
    if restarts < 1:
        raise ValidationError(f"need at least one restart, got {restarts}")
    stream(seed, 0)  # fail fast on a missing/invalid seed
    delta = float(delta)
    r_p = float(r_p)

    src = instance.source
    pmf = src.pmf
    xs, ys = src.x_support, src.y_support
    problem = _Problem(pmf, xs, ys, delta, r_p, aux_letters)

    outcome = _SearchOutcome()
    mx, my = pmf.shape
    outcome.absorb(problem.evaluate(_constant_letter(aux_letters, mx, my)))

    indices = list(range(restarts))
    if jobs > 1 and restarts > 1:
        chunks = [indices[j::jobs] for j in range(jobs) if indices[j::jobs]]
        payloads = [
            (pmf, xs, ys, delta, r_p, aux_letters, seed, tuple(chunk))
            for chunk in chunks
        ]
        with ProcessPoolExecutor(max_workers=len(payloads)) as pool:
            for part in pool.map(_run_restart_batch, payloads):
                outcome.merge(part)
    else:
        outcome.merge(
            _run_restart_batch(
                (pmf, xs, ys, delta, r_p, aux_letters, seed, tuple(indices))
            )
        )

    if not math.isfinite(outcome.best_feasible):
        raise NoFeasiblePointFound(
            f"no conditional law met the rate constraint at r_p={r_p}; "
            f"smallest constraint gap seen was {outcome.min_gap:.6g}"
        )

    details: dict = {
        "aux_letters": aux_letters,
        "rate_sum_at_best": outcome.best_rate_sum,
        "constraint_gap_at_best": outcome.best_gap,
        "evaluations": outcome.evaluations,
        "effective_rho": src.rho,
    }
    inputs = {
        "delta": delta,
        "r_p": r_p,
        "restarts": restarts,
        "seed": seed,
        "jobs": jobs,
        "parent": instance.parent,
        "support_size": instance.support_size,
    }
    if instance.parent.get("kind") == "gaussian":
        parent_rho = float(instance.parent["rho"])
        exact = gaussian_exact(parent_rho, delta, r_p).r_c
        effective = gaussian_exact(src.rho, delta, r_p).r_c
        slack = abs(exact - effective)
        budget = 0.16 / instance.parent.get("m", instance.support_size)
        details["two_sided"] = {
            "target": exact,
            "low": exact - 0.02,
            "high": exact + 0.08,
            "within": bool(exact - 0.02 <= outcome.best_feasible <= exact + 0.08),
        }
        details["measured_quantization_slack"] = slack
        details["slack_budget"] = budget
        details["slack_within_budget"] = bool(slack <= budget)
        return make_report(
            name="gw_frontier_estimate",
            estimate=outcome.best_feasible,
            closed_form_lower=exact,
            closed_form_upper=None,
            tolerance=slack + SLACK_MARGIN,
            inputs=inputs,
            details=details,
        )
    return make_report(
        name="gw_frontier_estimate",
        estimate=outcome.best_feasible,
        closed_form_lower=None,
        closed_form_upper=None,
        tolerance=0.0,
        inputs=inputs,
        details=details,
    )
