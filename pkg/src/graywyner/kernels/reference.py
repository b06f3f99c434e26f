"""Pure-numpy fixed-slope Blahut-Arimoto kernel.

Reference implementation of the backend contract; the compiled module in
``_native`` is a drop-in twin.  See ``graywyner.kernels`` for selection.

The iteration runs in row-shifted form: with A[x,j] = exp(-beta (d[x,j] -
dmin[x])) the partition values Z'[x] = sum_j q[j] A[x,j] stay in a benign
range for any slope, and ln Z[x] = ln Z'[x] - beta dmin[x].

The textbook multiplicative update converges too slowly for a tight
iteration budget whenever the reproduction grid holds nearly-redundant
points: support shifts then move mass between points at rates 1 + o(1),
and the optimal marginal is non-unique when the support outnumbers the
source letters, leaving near-zero curvature directions.  Each pass of
this kernel therefore applies two plain updates q -> q1 -> q2 and then
composes two safeguarded correctors:

* Per-coordinate geometric extrapolation (vector Aitken in log space).
  The two log-steps predict each coordinate's fixed point; contracting
  coordinates jump to their predicted limits.  Per-coordinate rates
  matter because a support shift moves some coordinates at 1 + o(1)
  while others bounce around their optima, so no global step size serves
  both.  Overshoots are retried at geometrically damped fractions.

* A damped Newton step on the stationarity system (all live Kuhn-Tucker
  factors equal 1, masses summing to 1), solved through the Hessian's
  eigendecomposition over a short Levenberg ladder of dampings; the best
  improving candidate wins.  Newton repairs the residual within the
  current support, complementing the extrapolation's mass migration.

Every candidate must keep the objective E_p[-ln Z] from rising (up to
rounding slack), so the objective stays provably non-increasing along
the pass sequence.  Candidates are floored at a relative mass level low
enough to be statistically invisible but high enough to regrow quickly,
because a zeroed point can never regrow through multiplicative updates;
points that start at exactly zero mass stay at zero (callers own the
support).

Termination is certified: along a migration path the mutual information
I and distortion D trade off at slope -beta while the Lagrangian
L = I + beta D (= objective - KL correction) settles much faster, so a
small change in L alone does not mean the support has settled.  The
loop exits when successive L iterates differ by less than ``tol`` *and*
the Kuhn-Tucker residual ln max_j f_j - a certified upper bound on the
remaining Lagrangian gap - is below ``gap_tol`` (or immediately once
the residual is below ``KT_TOL``).  L is, up to the constant
beta * target, exactly the tangent-corrected rate estimate the slope
search reports, and the certified bound makes the exit error one-sided:
rates can be overstated by at most the returned gap, never understated.
"""

import numpy as np

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_NUMERIC = 2

#: unconditional exit threshold on the Kuhn-Tucker residual
KT_TOL = 1e-10
#: default certificate required alongside the iterate-difference test
GAP_TOL = 1e-5
#: relative mass floor for live reproduction points (log scale)
LOG_FLOOR = -100.0
#: largest log-space jump a single extrapolation may apply per coordinate
MAX_LEAP = 30.0
#: per-coordinate contraction ratios are clamped below this
RATIO_CAP = 1.0 - 1e-6
#: damped retries of a rejected extrapolation, shrinking by the factor below
BACKTRACKS = 2
BACKTRACK_SHRINK = 0.25
#: coordinates above this fraction of the largest mass join the Newton system
NEWTON_SUPPORT = 1e-13
#: Levenberg dampings tried per pass, as fractions of the top eigenvalue
LEVENBERG_LADDER = (1e-12, 1e-8, 1e-5, 1e-2, 1.0)


def ba_fixed_slope(p, dist, dmin, beta, q0, tol=1e-9, max_iter=10000,
                   gap_tol=GAP_TOL):
    """Alternating minimization at a fixed slope beta >= 0.

    Arguments: source pmf ``p`` (m,), distortion matrix ``dist`` (m, r) with
    row minima ``dmin`` (m,), initial output marginal ``q0`` (r,).

    Returns ``(q, rate, distortion, objective, iters, status, max_jump,
    gap)`` where rate/distortion belong to the final conditional,
    ``objective`` is the monotone quantity E_p[-ln Z] (non-increasing
    across iterations; ``max_jump`` records the largest observed increase,
    which should be floating-point noise), ``gap`` is the Kuhn-Tucker
    residual at exit, and status is 0 converged / 1 iteration cap /
    2 numerical failure.  ``iters`` counts plain-update applications; each
    pass of the loop applies two.
    """
    p = np.asarray(p, dtype=float)
    dist = np.asarray(dist, dtype=float)
    dmin = np.asarray(dmin, dtype=float)
    q = np.asarray(q0, dtype=float).copy().ravel()
    m, r = p.shape[0], dist.shape[1]
    if dist.shape[0] != m or dmin.shape[0] != m or q.shape[0] != r:
        raise ValueError(
            f"shape mismatch: p {(m,)}, dist {tuple(dist.shape)}, "
            f"dmin {tuple(dmin.shape)}, q0 {tuple(q.shape)}"
        )
    live = p > 0.0
    A = np.exp(-beta * (dist - dmin[:, None]))
    Ad = A * dist
    base = float(p @ (beta * dmin))
    floor_scale = np.exp(LOG_FLOOR)

    def partition(qv):
        zv = A @ qv
        if np.any(zv[live] <= 0.0):
            return zv, None
        return zv, base - float(p[live] @ np.log(zv[live]))

    def plain_step(qv, zv):
        wv = np.where(live, p / np.where(zv > 0.0, zv, 1.0), 0.0)
        qn = (wv @ A) * qv
        keep = qn > 0.0
        qn = np.where(keep, np.maximum(qn, qn.max() * floor_scale), 0.0)
        return qn / qn.sum()

    def aitken_candidate(qa, qb, qc, obj_ref, best_obj):
        """Extrapolate the per-coordinate log-steps of qa -> qb -> qc."""
        alive = (qa > 0.0) & (qb > 0.0) & (qc > 0.0)
        safe_a = np.where(alive, qa, 1.0)
        safe_b = np.where(alive, qb, 1.0)
        safe_c = np.where(alive, qc, 1.0)
        s1 = np.log(safe_b) - np.log(safe_a)
        s2 = np.log(safe_c) - np.log(safe_b)
        usable = alive & (np.abs(s2) < np.abs(s1)) & (np.abs(s1) > 1e-14)
        ratio = np.where(usable, s2 / np.where(usable, s1, 1.0), 0.0)
        ratio = np.minimum(ratio, RATIO_CAP)
        leap = np.where(usable, s2 * ratio / (1.0 - ratio), 0.0)
        leap = np.clip(leap, -MAX_LEAP, MAX_LEAP)
        if not np.any(leap != 0.0):
            return None
        # The predicted limit can overshoot (the prediction is only
        # first-order), but a damped fraction of the same jump usually
        # still beats the plain step, so back off geometrically before
        # giving up.  Near a flat optimum candidates differ below float
        # resolution, hence the rounding slack in the acceptance test.
        slack = 1e-12 * max(1.0, abs(obj_ref))
        theta = 1.0
        for _ in range(BACKTRACKS + 1):
            log_acc = np.where(qc > 0.0, np.log(safe_c) + theta * leap,
                               -np.inf)
            peak = log_acc.max()
            if not np.isfinite(peak):
                return None
            q_acc = np.where(
                qc > 0.0, np.exp(np.maximum(log_acc - peak, LOG_FLOOR)), 0.0
            )
            q_acc /= q_acc.sum()
            z_acc, obj_acc = partition(q_acc)
            if (
                obj_acc is not None
                and obj_acc <= obj_ref + slack
                and obj_acc <= best_obj + slack
            ):
                return q_acc, z_acc, obj_acc
            theta *= BACKTRACK_SHRINK
        return None

    def newton_candidate(qc, zc, obj_ref):
        """Damped stationarity-system step from the point (qc, zc)."""
        support = qc > NEWTON_SUPPORT * qc.max()
        s = int(support.sum())
        if s < 1:
            return None
        wc = np.where(live, p / np.where(zc > 0.0, zc, 1.0), 0.0)
        fc = wc @ A
        As = A[:, support]
        # The curvature matrix As.T diag(weight) As has rank at most the
        # number of live source rows, so its eigensystem comes cheaper from
        # the Gram matrix over those rows; the orthogonal complement sees
        # only the Levenberg shift.
        sqw = np.sqrt(np.where(live, wc * wc / np.where(live, p, 1.0), 0.0))
        b_mat = As[live] * sqw[live, None]
        try:
            gval, gvec = np.linalg.eigh(b_mat @ b_mat.T)
        except np.linalg.LinAlgError:
            return None
        lmax = float(gval[-1])
        if lmax <= 0.0:
            return None
        keep = gval > lmax * 1e-14
        lam = gval[keep]
        vecs = (b_mat.T @ gvec[:, keep]) / np.sqrt(lam)[None, :]
        rhs = fc[support] - 1.0
        ones = np.ones(s)
        cr = vecs.T @ rhs
        co = vecs.T @ ones
        qs = qc[support]
        slack = 1e-12 * max(1.0, abs(obj_ref))
        best = None
        for damping in LEVENBERG_LADDER:
            shift = damping * lmax
            inv_rhs = vecs @ (cr / (lam + shift)) + (rhs - vecs @ cr) / shift
            inv_ones = vecs @ (co / (lam + shift)) + (ones - vecs @ co) / shift
            scale = float(np.ones(s) @ inv_ones)
            if scale <= 0.0:
                continue
            nu = float(np.ones(s) @ inv_rhs) / scale
            step = inv_rhs - nu * inv_ones
            if not np.all(np.isfinite(step)):
                continue
            # Project rather than shorten: coordinates the step drives
            # negative park at the mass floor (a dying coordinate must not
            # veto everyone else's move), and the objective test has the
            # final word.
            q_newton = qc.copy()
            q_newton[support] = np.maximum(qs + step, qc.max() * floor_scale)
            q_newton /= q_newton.sum()
            z_newton, obj_newton = partition(q_newton)
            if obj_newton is None:
                continue
            bar = obj_ref + slack if best is None else best[2]
            if obj_newton <= bar:
                best = (q_newton, z_newton, obj_newton)
        return best

    z, obj = partition(q)
    if obj is None:
        return q, np.nan, np.nan, np.nan, 0, STATUS_NUMERIC, 0.0, np.inf

    lagrangian = np.inf
    rate = np.nan
    distortion = np.nan
    gap = np.inf
    max_jump = 0.0
    status = STATUS_MAX_ITER
    iters = 0
    while iters < max_iter:
        # Statistics of the current iterate (also the exit test).
        w = np.where(live, p / np.where(z > 0.0, z, 1.0), 0.0)
        factor = w @ A
        qm = factor * q
        distortion = float(w @ (Ad @ q))
        pos = qm > 0.0
        kl = float(qm[pos] @ np.log(factor[pos]))
        new_lagrangian = obj - kl
        rate = new_lagrangian - beta * distortion
        gap = float(np.log(factor.max()))
        converged = (
            abs(new_lagrangian - lagrangian) < tol and gap <= gap_tol
        ) or gap < KT_TOL
        lagrangian = new_lagrangian
        if converged:
            status = STATUS_CONVERGED
            break

        # Two plain updates, then the composed correctors.
        q1 = np.where(pos, np.maximum(qm, qm.max() * floor_scale), 0.0)
        q1 /= q1.sum()
        z1, obj1 = partition(q1)
        if obj1 is None:
            return q, np.nan, np.nan, np.nan, iters, STATUS_NUMERIC, max_jump, gap
        q2 = plain_step(q1, z1)
        z2, obj2 = partition(q2)
        if obj2 is None:
            return q, np.nan, np.nan, np.nan, iters, STATUS_NUMERIC, max_jump, gap
        iters += 2

        picked = aitken_candidate(q, q1, q2, obj2, obj2)
        if picked is None:
            picked = (q2, z2, obj2)
        polished = newton_candidate(picked[0], picked[1], picked[2])
        if polished is not None:
            picked = polished
        if picked[2] > obj:
            max_jump = max(max_jump, picked[2] - obj)
        q, z, obj = picked
    return q, max(rate, 0.0), distortion, obj, iters, status, max_jump, gap
