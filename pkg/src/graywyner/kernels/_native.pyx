# cython: language_level=3
"""Compiled fixed-slope Blahut-Arimoto kernel; drop-in twin of ``reference``.

Same algorithm, same contract, same constants (kept in sync by the backend
agreement tests): each pass applies two plain multiplicative updates, then a
per-coordinate log-space extrapolation with damped retries, then a
Levenberg-damped Newton step on the stationarity system, every candidate
guarded by a monotone-objective test.  Termination requires the certified
Kuhn-Tucker residual alongside the Lagrangian-difference test.  See the
reference module docstring for the full rationale.

The elementwise and matrix-vector work runs in C loops over memoryviews;
the small symmetric eigenproblem of the Newton corrector is delegated to
``numpy.linalg.eigh``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, fabs, sqrt, NAN, INFINITY

cnp.import_array()

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_NUMERIC = 2

#: default certificate required alongside the iterate-difference test
GAP_TOL = 1e-5

# Constants below mirror the reference kernel; keep them in sync.
cdef double C_KT_TOL = 1e-10
cdef double C_LOG_FLOOR = -100.0
cdef double C_MAX_LEAP = 30.0
cdef double C_RATIO_CAP = 1.0 - 1e-6
cdef int C_BACKTRACKS = 2
cdef double C_BACKTRACK_SHRINK = 0.25
cdef double C_NEWTON_SUPPORT = 1e-13
cdef int C_LADDER_LEN = 5


cdef double _partition(double[:, ::1] A, double[::1] p,
                       unsigned char[::1] live, double base,
                       double[::1] qv, double[::1] zv,
                       Py_ssize_t m, Py_ssize_t r, int* ok) nogil:
    """Fill ``zv = A @ qv`` and return the objective; ``ok=0`` if a live
    row lost positivity (the caller must then discard the candidate)."""
    cdef Py_ssize_t x, j
    cdef double z, obj = base
    ok[0] = 1
    for x in range(m):
        z = 0.0
        for j in range(r):
            z += A[x, j] * qv[j]
        zv[x] = z
        if live[x]:
            if z <= 0.0:
                ok[0] = 0
                return NAN
            obj -= p[x] * log(z)
    return obj


cdef void _plain_step(double[:, ::1] A, double[::1] p,
                      unsigned char[::1] live, double floor_scale,
                      double[::1] qv, double[::1] zv,
                      double[::1] fac, double[::1] qout,
                      Py_ssize_t m, Py_ssize_t r) nogil:
    """One multiplicative update of ``qv`` (with partition ``zv``) into
    ``qout``, floored at a relative mass level and renormalized."""
    cdef Py_ssize_t x, j
    cdef double wx, v, qmax, level, tot
    for j in range(r):
        fac[j] = 0.0
    for x in range(m):
        if not live[x]:
            continue
        wx = p[x] / zv[x]
        for j in range(r):
            fac[j] += wx * A[x, j]
    qmax = 0.0
    for j in range(r):
        v = fac[j] * qv[j]
        qout[j] = v
        if v > qmax:
            qmax = v
    level = qmax * floor_scale
    tot = 0.0
    for j in range(r):
        if qout[j] > 0.0:
            if qout[j] < level:
                qout[j] = level
            tot += qout[j]
    for j in range(r):
        qout[j] /= tot


def ba_fixed_slope(p, dist, dmin, double beta, q0, double tol=1e-9,
                   int max_iter=10000, double gap_tol=1e-5):
    """Alternating minimization at a fixed slope; see the reference kernel.

    Returns ``(q, rate, distortion, objective, iters, status, max_jump,
    gap)`` with the same semantics as the reference implementation.
    """
    p_arr = np.ascontiguousarray(p, dtype=np.float64)
    d_arr = np.ascontiguousarray(dist, dtype=np.float64)
    dmin_arr = np.ascontiguousarray(dmin, dtype=np.float64)
    cdef double[::1] p_mv = p_arr
    cdef double[:, ::1] d_mv = d_arr
    cdef double[::1] dmin_mv = dmin_arr
    cdef Py_ssize_t m = p_mv.shape[0]
    cdef Py_ssize_t r = d_mv.shape[1]

    q_arr = np.array(q0, dtype=np.float64, copy=True).ravel()
    if d_mv.shape[0] != m or dmin_mv.shape[0] != m or q_arr.shape[0] != r:
        raise ValueError(
            f"shape mismatch: p {(m,)}, dist {tuple(d_arr.shape)}, "
            f"dmin {tuple(dmin_arr.shape)}, q0 {tuple(q_arr.shape)}"
        )

    live_arr = np.ascontiguousarray(p_arr > 0.0).view(np.uint8)
    cdef unsigned char[::1] live = live_arr

    a_arr = np.empty((m, r), dtype=np.float64)
    cdef double[:, ::1] A = a_arr
    cdef Py_ssize_t x, j, a, b, s
    for x in range(m):
        for j in range(r):
            A[x, j] = exp(-beta * (d_mv[x, j] - dmin_mv[x]))

    cdef double base = 0.0
    for x in range(m):
        base += p_mv[x] * beta * dmin_mv[x]
    cdef double floor_scale = exp(C_LOG_FLOOR)

    # Current iterate and per-pass scratch buffers.
    cdef double[::1] q = q_arr
    z_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef double[::1] q1 = np.empty(r, dtype=np.float64)
    cdef double[::1] z1 = np.empty(m, dtype=np.float64)
    cdef double[::1] q2 = np.empty(r, dtype=np.float64)
    cdef double[::1] z2 = np.empty(m, dtype=np.float64)
    cdef double[::1] qacc = np.empty(r, dtype=np.float64)
    cdef double[::1] zacc = np.empty(m, dtype=np.float64)
    cdef double[::1] qtry = np.empty(r, dtype=np.float64)
    cdef double[::1] ztry = np.empty(m, dtype=np.float64)
    cdef double[::1] qnb = np.empty(r, dtype=np.float64)
    cdef double[::1] znb = np.empty(m, dtype=np.float64)
    cdef double[::1] fac = np.empty(r, dtype=np.float64)
    cdef double[::1] leap = np.empty(r, dtype=np.float64)
    cdef double[::1] lgq2 = np.empty(r, dtype=np.float64)
    idx_arr = np.empty(r, dtype=np.intp)
    cdef Py_ssize_t[::1] idx = idx_arr

    # Live source rows, fixed for the whole solve; the Newton corrector's
    # curvature matrix has rank at most their count.
    lidx_arr = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] lidx = lidx_arr
    cdef Py_ssize_t mL = 0
    for x in range(m):
        if live[x]:
            lidx[mL] = x
            mL += 1

    # Newton scratch: factored curvature rows, Gram matrix, kept spectrum,
    # back-projected eigenvectors and the ladder vectors over the support.
    bmat_arr = np.empty((mL if mL > 0 else 1, r), dtype=np.float64)
    cdef double[:, ::1] bmat = bmat_arr
    g_arr = np.empty((mL if mL > 0 else 1, mL if mL > 0 else 1),
                     dtype=np.float64)
    cdef double[:, ::1] gmat = g_arr
    vmat_arr = np.empty((r, m), dtype=np.float64)
    cdef double[:, ::1] vmat = vmat_arr
    cdef double[::1] lam_b = np.empty(m, dtype=np.float64)
    cdef double[::1] crb = np.empty(m, dtype=np.float64)
    cdef double[::1] cob = np.empty(m, dtype=np.float64)
    cdef double[::1] drb = np.empty(m, dtype=np.float64)
    cdef double[::1] dob = np.empty(m, dtype=np.float64)
    cdef double[::1] fcs = np.empty(r, dtype=np.float64)
    cdef double[::1] rhsb = np.empty(r, dtype=np.float64)
    cdef double[::1] prb = np.empty(r, dtype=np.float64)
    cdef double[::1] pob = np.empty(r, dtype=np.float64)
    cdef double[::1] invr = np.empty(r, dtype=np.float64)
    cdef double[::1] invo = np.empty(r, dtype=np.float64)
    cdef double[::1] stepb = np.empty(r, dtype=np.float64)

    cdef double[5] ladder
    ladder[0] = 1e-12
    ladder[1] = 1e-8
    ladder[2] = 1e-5
    ladder[3] = 1e-2
    ladder[4] = 1.0

    cdef int ok = 0
    cdef double obj = _partition(A, p_mv, live, base, q, z, m, r, &ok)
    if not ok:
        return q_arr, float("nan"), float("nan"), float("nan"), 0, \
            STATUS_NUMERIC, 0.0, float("inf")

    cdef double lagrangian = INFINITY
    cdef double rate = NAN
    cdef double distortion = NAN
    cdef double gap = INFINITY
    cdef double max_jump = 0.0
    cdef int status = STATUS_MAX_ITER
    cdef int iters = 0
    cdef int converged, bt, li, any_leap, have_best, have_pick
    cdef int ok_eig, bad
    cdef Py_ssize_t i, i2, kk, k
    cdef double wx, row, dist_acc, kl, fmax, qmj, new_lagrangian
    cdef double qa, qb, qc, s1v, s2v, ratio, lp, slack, theta, peak, la
    cdef double v, tot, obj1, obj2, obj_acc, qcmax, sq, acc, acc2, shift
    cdef double lmax, scale, nu, bar, obj_try, best_obj, pobj, level
    cdef double[::1] pq, pz
    cdef double[::1] gval
    cdef double[:, ::1] gvec

    while iters < max_iter:
        # Statistics of the current iterate (also the exit test):
        # factor = w @ A, distortion, Lagrangian, Kuhn-Tucker residual.
        for j in range(r):
            fac[j] = 0.0
        dist_acc = 0.0
        for x in range(m):
            if not live[x]:
                continue
            wx = p_mv[x] / z[x]
            row = 0.0
            for j in range(r):
                fac[j] += wx * A[x, j]
                row += A[x, j] * d_mv[x, j] * q[j]
            dist_acc += wx * row
        distortion = dist_acc
        kl = 0.0
        fmax = 0.0
        for j in range(r):
            if fac[j] > fmax:
                fmax = fac[j]
            qmj = fac[j] * q[j]
            if qmj > 0.0:
                kl += qmj * log(fac[j])
        new_lagrangian = obj - kl
        rate = new_lagrangian - beta * distortion
        gap = log(fmax)
        converged = ((fabs(new_lagrangian - lagrangian) < tol
                      and gap <= gap_tol) or gap < C_KT_TOL)
        lagrangian = new_lagrangian
        if converged:
            status = STATUS_CONVERGED
            break

        # Two plain updates, then the composed correctors.
        qcmax = 0.0
        for j in range(r):
            v = fac[j] * q[j]
            q1[j] = v
            if v > qcmax:
                qcmax = v
        level = qcmax * floor_scale
        tot = 0.0
        for j in range(r):
            if q1[j] > 0.0:
                if q1[j] < level:
                    q1[j] = level
                tot += q1[j]
        for j in range(r):
            q1[j] /= tot
        obj1 = _partition(A, p_mv, live, base, q1, z1, m, r, &ok)
        if not ok:
            return q_arr, float("nan"), float("nan"), float("nan"), \
                iters, STATUS_NUMERIC, max_jump, gap
        _plain_step(A, p_mv, live, floor_scale, q1, z1, fac, q2, m, r)
        obj2 = _partition(A, p_mv, live, base, q2, z2, m, r, &ok)
        if not ok:
            return q_arr, float("nan"), float("nan"), float("nan"), \
                iters, STATUS_NUMERIC, max_jump, gap
        iters += 2

        # Per-coordinate geometric extrapolation of the log-steps of
        # q -> q1 -> q2, with geometrically damped retries.
        any_leap = 0
        for j in range(r):
            qa = q[j]
            qb = q1[j]
            qc = q2[j]
            lp = 0.0
            if qc > 0.0:
                lgq2[j] = log(qc)
            else:
                lgq2[j] = 0.0
            if qa > 0.0 and qb > 0.0 and qc > 0.0:
                s1v = log(qb) - log(qa)
                s2v = lgq2[j] - log(qb)
                if fabs(s2v) < fabs(s1v) and fabs(s1v) > 1e-14:
                    ratio = s2v / s1v
                    if ratio > C_RATIO_CAP:
                        ratio = C_RATIO_CAP
                    lp = s2v * ratio / (1.0 - ratio)
                    if lp > C_MAX_LEAP:
                        lp = C_MAX_LEAP
                    elif lp < -C_MAX_LEAP:
                        lp = -C_MAX_LEAP
            leap[j] = lp
            if lp != 0.0:
                any_leap = 1

        have_pick = 0
        if any_leap:
            slack = 1e-12 * (1.0 if fabs(obj2) < 1.0 else fabs(obj2))
            theta = 1.0
            for bt in range(C_BACKTRACKS + 1):
                peak = -INFINITY
                for j in range(r):
                    if q2[j] > 0.0:
                        la = lgq2[j] + theta * leap[j]
                        if la > peak:
                            peak = la
                if peak == -INFINITY or peak != peak:
                    break
                tot = 0.0
                for j in range(r):
                    if q2[j] > 0.0:
                        la = lgq2[j] + theta * leap[j] - peak
                        if la < C_LOG_FLOOR:
                            la = C_LOG_FLOOR
                        qacc[j] = exp(la)
                        tot += qacc[j]
                    else:
                        qacc[j] = 0.0
                for j in range(r):
                    qacc[j] /= tot
                obj_acc = _partition(A, p_mv, live, base, qacc, zacc,
                                     m, r, &ok)
                if ok and obj_acc <= obj2 + slack:
                    have_pick = 1
                    break
                theta *= C_BACKTRACK_SHRINK

        if have_pick:
            pq = qacc
            pz = zacc
            pobj = obj_acc
        else:
            pq = q2
            pz = z2
            pobj = obj2

        # Damped Newton step on the stationarity system (live Kuhn-Tucker
        # factors equal 1, masses summing to 1) over the current support,
        # with a short Levenberg ladder; the best improving candidate wins.
        # The curvature matrix has rank at most the number of live source
        # rows, so its eigensystem comes from the Gram matrix over those
        # rows; the orthogonal complement sees only the Levenberg shift.
        qcmax = 0.0
        for j in range(r):
            if pq[j] > qcmax:
                qcmax = pq[j]
        s = 0
        for j in range(r):
            if pq[j] > C_NEWTON_SUPPORT * qcmax:
                idx[s] = j
                s += 1
        if s >= 1 and mL >= 1:
            for a in range(s):
                fcs[a] = 0.0
            for i in range(mL):
                x = lidx[i]
                wx = p_mv[x] / pz[x]
                sq = sqrt(wx * wx / p_mv[x])
                for a in range(s):
                    v = A[x, idx[a]]
                    fcs[a] += wx * v
                    bmat[i, a] = sq * v
            for i in range(mL):
                for i2 in range(i, mL):
                    acc = 0.0
                    for a in range(s):
                        acc += bmat[i, a] * bmat[i2, a]
                    gmat[i, i2] = acc
                    gmat[i2, i] = acc
            ok_eig = 1
            try:
                gval_arr, gvec_arr = np.linalg.eigh(g_arr)
            except np.linalg.LinAlgError:
                ok_eig = 0
            if ok_eig:
                gval = gval_arr
                gvec = np.ascontiguousarray(gvec_arr)
                lmax = gval[mL - 1]
            if ok_eig and lmax > 0.0:
                # Kept spectrum, its eigenvectors pulled back to the
                # support, and the components of the right-hand sides
                # inside and orthogonal to that spectrum.
                k = 0
                for i in range(mL):
                    if gval[i] > lmax * 1e-14:
                        lam_b[k] = gval[i]
                        sq = sqrt(gval[i])
                        for a in range(s):
                            acc = 0.0
                            for i2 in range(mL):
                                acc += bmat[i2, a] * gvec[i2, i]
                            vmat[a, k] = acc / sq
                        k += 1
                for a in range(s):
                    rhsb[a] = fcs[a] - 1.0
                for kk in range(k):
                    acc = 0.0
                    acc2 = 0.0
                    for a in range(s):
                        acc += vmat[a, kk] * rhsb[a]
                        acc2 += vmat[a, kk]
                    crb[kk] = acc
                    cob[kk] = acc2
                for a in range(s):
                    acc = 0.0
                    acc2 = 0.0
                    for kk in range(k):
                        acc += vmat[a, kk] * crb[kk]
                        acc2 += vmat[a, kk] * cob[kk]
                    prb[a] = rhsb[a] - acc
                    pob[a] = 1.0 - acc2
                slack = 1e-12 * (1.0 if fabs(pobj) < 1.0 else fabs(pobj))
                have_best = 0
                best_obj = 0.0
                bar = pobj + slack
                level = qcmax * floor_scale
                for li in range(C_LADDER_LEN):
                    shift = ladder[li] * lmax
                    for kk in range(k):
                        drb[kk] = crb[kk] / (lam_b[kk] + shift)
                        dob[kk] = cob[kk] / (lam_b[kk] + shift)
                    scale = 0.0
                    nu = 0.0
                    for a in range(s):
                        acc = 0.0
                        acc2 = 0.0
                        for kk in range(k):
                            acc += vmat[a, kk] * drb[kk]
                            acc2 += vmat[a, kk] * dob[kk]
                        invr[a] = acc + prb[a] / shift
                        invo[a] = acc2 + pob[a] / shift
                        scale += invo[a]
                        nu += invr[a]
                    if scale <= 0.0:
                        continue
                    nu /= scale
                    bad = 0
                    for a in range(s):
                        v = invr[a] - nu * invo[a]
                        stepb[a] = v
                        if v != v or v == INFINITY or v == -INFINITY:
                            bad = 1
                            break
                    if bad:
                        continue
                    for j in range(r):
                        qtry[j] = pq[j]
                    for a in range(s):
                        v = pq[idx[a]] + stepb[a]
                        if v < level:
                            v = level
                        qtry[idx[a]] = v
                    tot = 0.0
                    for j in range(r):
                        tot += qtry[j]
                    for j in range(r):
                        qtry[j] /= tot
                    obj_try = _partition(A, p_mv, live, base, qtry, ztry,
                                         m, r, &ok)
                    if not ok or not obj_try <= bar:
                        continue
                    for j in range(r):
                        qnb[j] = qtry[j]
                    for x in range(m):
                        znb[x] = ztry[x]
                    best_obj = obj_try
                    have_best = 1
                    bar = best_obj
                if have_best:
                    pq = qnb
                    pz = znb
                    pobj = best_obj

        if pobj > obj:
            if pobj - obj > max_jump:
                max_jump = pobj - obj
        for j in range(r):
            q[j] = pq[j]
        for x in range(m):
            z[x] = pz[x]
        obj = pobj

    if rate < 0.0:
        rate = 0.0
    return q_arr, rate, distortion, obj, iters, status, max_jump, gap
