"""Compiled inner loops.

Each kernel is written once as plain Python over scalars and float64
arrays and compiled through :func:`ssmdrift._accel.jit_kernel`; with
``SSMDRIFT_NUMBA=0`` the same functions run uncompiled.  Kernels call
each other through module globals so the whole chain compiles nopython.

Status codes shared by the integrator kernels:

====  ==========================
0     ok
1     step-size underflow
2     singularity (too close to a primary)
3     no section crossing within the horizon
====  ==========================
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import jit_kernel

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_SINGULAR = 2
STATUS_NO_CROSSING = 3

SINGULARITY_RADIUS = 1e-12

# ---------------------------------------------------------------------------
# Runge-Kutta-Fehlberg 7(8) tableau (13 stages).  The 8th-order solution is
# propagated (local extrapolation); the embedded error estimate is
# (41/840) h (f0 + f10 - f11 - f12).

_RKF_C = np.array(
    [0.0, 2.0 / 27, 1.0 / 9, 1.0 / 6, 5.0 / 12, 0.5, 5.0 / 6, 1.0 / 6,
     2.0 / 3, 1.0 / 3, 1.0, 0.0, 1.0]
)

_RKF_A = np.zeros((13, 12))
_RKF_A[1, 0] = 2.0 / 27
_RKF_A[2, 0] = 1.0 / 36
_RKF_A[2, 1] = 1.0 / 12
_RKF_A[3, 0] = 1.0 / 24
_RKF_A[3, 2] = 1.0 / 8
_RKF_A[4, 0] = 5.0 / 12
_RKF_A[4, 2] = -25.0 / 16
_RKF_A[4, 3] = 25.0 / 16
_RKF_A[5, 0] = 1.0 / 20
_RKF_A[5, 3] = 1.0 / 4
_RKF_A[5, 4] = 1.0 / 5
_RKF_A[6, 0] = -25.0 / 108
_RKF_A[6, 3] = 125.0 / 108
_RKF_A[6, 4] = -65.0 / 27
_RKF_A[6, 5] = 125.0 / 54
_RKF_A[7, 0] = 31.0 / 300
_RKF_A[7, 4] = 61.0 / 225
_RKF_A[7, 5] = -2.0 / 9
_RKF_A[7, 6] = 13.0 / 900
_RKF_A[8, 0] = 2.0
_RKF_A[8, 3] = -53.0 / 6
_RKF_A[8, 4] = 704.0 / 45
_RKF_A[8, 5] = -107.0 / 9
_RKF_A[8, 6] = 67.0 / 90
_RKF_A[8, 7] = 3.0
_RKF_A[9, 0] = -91.0 / 108
_RKF_A[9, 3] = 23.0 / 108
_RKF_A[9, 4] = -976.0 / 135
_RKF_A[9, 5] = 311.0 / 54
_RKF_A[9, 6] = -19.0 / 60
_RKF_A[9, 7] = 17.0 / 6
_RKF_A[9, 8] = -1.0 / 12
_RKF_A[10, 0] = 2383.0 / 4100
_RKF_A[10, 3] = -341.0 / 164
_RKF_A[10, 4] = 4496.0 / 1025
_RKF_A[10, 5] = -301.0 / 82
_RKF_A[10, 6] = 2133.0 / 4100
_RKF_A[10, 7] = 45.0 / 82
_RKF_A[10, 8] = 45.0 / 164
_RKF_A[10, 9] = 18.0 / 41
_RKF_A[11, 0] = 3.0 / 205
_RKF_A[11, 5] = -6.0 / 41
_RKF_A[11, 6] = -3.0 / 205
_RKF_A[11, 7] = -3.0 / 41
_RKF_A[11, 8] = 3.0 / 41
_RKF_A[11, 9] = 6.0 / 41
_RKF_A[12, 0] = -1777.0 / 4100
_RKF_A[12, 3] = -341.0 / 164
_RKF_A[12, 4] = 4496.0 / 1025
_RKF_A[12, 5] = -289.0 / 82
_RKF_A[12, 6] = 2193.0 / 4100
_RKF_A[12, 7] = 51.0 / 82
_RKF_A[12, 8] = 33.0 / 164
_RKF_A[12, 9] = 12.0 / 41
_RKF_A[12, 11] = 1.0

_RKF_B8 = np.zeros(13)
_RKF_B8[5] = 34.0 / 105
_RKF_B8[6] = 9.0 / 35
_RKF_B8[7] = 9.0 / 35
_RKF_B8[8] = 9.0 / 280
_RKF_B8[9] = 9.0 / 280
_RKF_B8[11] = 41.0 / 840
_RKF_B8[12] = 41.0 / 840

_ERR_COEF = 41.0 / 840

# PI step controller (order-8 error estimate).
_SAFETY = 0.9
_PI_ALPHA = 0.7 / 8.0
_PI_BETA = 0.4 / 8.0
_FAC_MIN = 0.2
_FAC_MAX = 5.0

_TWO_PI = 2.0 * math.pi


def _rtbp_field_impl(y, mu, out):
    """Rotating-frame RTBP vector field into ``out``; returns min(r1, r2)."""
    x = y[0]
    yy = y[1]
    z = y[2]
    dx1 = x - mu
    dx2 = x - mu + 1.0
    r1sq = dx1 * dx1 + yy * yy + z * z
    r2sq = dx2 * dx2 + yy * yy + z * z
    r1 = math.sqrt(r1sq)
    r2 = math.sqrt(r2sq)
    inv_r13 = 1.0 / (r1sq * r1)
    inv_r23 = 1.0 / (r2sq * r2)
    omu = 1.0 - mu
    # gradient of the effective potential
    gx = x - omu * dx1 * inv_r13 - mu * dx2 * inv_r23
    gy = yy - omu * yy * inv_r13 - mu * yy * inv_r23
    gz = -omu * z * inv_r13 - mu * z * inv_r23
    out[0] = y[3]
    out[1] = y[4]
    out[2] = y[5]
    out[3] = gx + 2.0 * y[4]
    out[4] = gy - 2.0 * y[3]
    out[5] = gz
    return r1 if r1 < r2 else r2


rtbp_field = jit_kernel(_rtbp_field_impl)


def _rkf78_step_impl(y, h, mu, f, ynew, work):
    """One RKF78 attempt from ``y`` with step ``h``.

    Returns (max-norm error estimate, min primary distance over stages).
    ``f`` is (13, 6) stage storage, ``ynew`` receives the 8th-order result.
    """
    rmin = rtbp_field(y, mu, f[0])
    for k in range(1, 13):
        for i in range(6):
            acc = 0.0
            for j in range(k):
                a = _RKF_A[k, j]
                if a != 0.0:
                    acc += a * f[j, i]
            work[i] = y[i] + h * acc
        r = rtbp_field(work, mu, f[k])
        if r < rmin:
            rmin = r
    errmax = 0.0
    for i in range(6):
        acc = 0.0
        for k in range(13):
            b = _RKF_B8[k]
            if b != 0.0:
                acc += b * f[k, i]
        ynew[i] = y[i] + h * acc
        e = abs(_ERR_COEF * h * (f[0, i] + f[10, i] - f[11, i] - f[12, i]))
        if e > errmax:
            errmax = e
    return errmax, rmin


rkf78_step = jit_kernel(_rkf78_step_impl)


def _propagate_impl(y0, mu, t_final, tol, h0, hmin, hmax):
    """Integrate the RTBP field for a signed duration ``t_final``.

    Returns (state, last accepted |h|, status).
    """
    y = y0.copy()
    if t_final == 0.0:
        return y, h0, STATUS_OK
    sgn = 1.0 if t_final > 0.0 else -1.0
    f = np.empty((13, 6))
    ynew = np.empty(6)
    work = np.empty(6)
    t = 0.0
    h = sgn * min(abs(h0), abs(t_final), hmax)
    err_prev = 1.0
    last_h = abs(h)
    while sgn * (t_final - t) > 0.0:
        rem = t_final - t
        h_step = h if abs(h) <= abs(rem) else rem
        errmax, rmin = rkf78_step(y, h_step, mu, f, ynew, work)
        if rmin < SINGULARITY_RADIUS:
            return y, last_h, STATUS_SINGULAR
        err = errmax / tol
        if err < 1e-16 or err != err:
            err = 1e-16
        if err <= 1.0:
            t += h_step
            for i in range(6):
                y[i] = ynew[i]
            last_h = abs(h_step)
            fac = _SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA
            if fac > _FAC_MAX:
                fac = _FAC_MAX
            elif fac < _FAC_MIN:
                fac = _FAC_MIN
            h = h_step * fac
            err_prev = err
        else:
            fac = _SAFETY * err ** (-1.0 / 8.0)
            if fac < 0.1:
                fac = 0.1
            h = h_step * fac
        if abs(h) > hmax:
            h = sgn * hmax
        if abs(h) < hmin:
            if abs(t_final - t) <= hmin:
                h = t_final - t
            else:
                return y, last_h, STATUS_UNDERFLOW
    return y, last_h, STATUS_OK


propagate = jit_kernel(_propagate_impl)


def _section_crossing_impl(y0, mu, direction, tol, h0, hmin, hmax, t_max):
    """Advance to the next XZ-plane crossing with sign(VY) = ``direction``.

    Returns (state at crossing, crossing time, status).  The crossing is
    bracketed on accepted steps, then refined with Newton iterations on
    Y(t), re-integrated from the bracketing step start; bisection takes
    over whenever a Newton update leaves the bracket.
    """
    y = y0.copy()
    f = np.empty((13, 6))
    ynew = np.empty(6)
    work = np.empty(6)
    t = 0.0
    h = min(abs(h0), hmax)
    err_prev = 1.0
    while t < t_max:
        if t + h > t_max:
            h = t_max - t
            if h <= 0.0:
                break
        errmax, rmin = rkf78_step(y, h, mu, f, ynew, work)
        if rmin < SINGULARITY_RADIUS:
            return y, t, STATUS_SINGULAR
        err = errmax / tol
        if err < 1e-16 or err != err:
            err = 1e-16
        if err > 1.0:
            fac = _SAFETY * err ** (-1.0 / 8.0)
            if fac < 0.1:
                fac = 0.1
            h = h * fac
            if h < hmin:
                return y, t, STATUS_UNDERFLOW
            continue
        h_step = h
        y_a = y[1]
        if t == 0.0 and y_a == 0.0:
            # starting exactly on the section: the sign of the motion
            # decides, so the crossing at t=0 is not re-reported
            y_a = y[4]
        y_b = ynew[1]
        if direction > 0:
            crossed = y_a < 0.0 and y_b >= 0.0
        else:
            crossed = y_a > 0.0 and y_b <= 0.0
        if crossed:
            lo = 0.0
            hi = h_step
            tau = h_step * y_a / (y_a - y_b) if y_a != y_b else 0.5 * h_step
            if tau <= lo or tau >= hi:
                tau = 0.5 * (lo + hi)
            yc = y.copy()
            for _ in range(30):
                yc, _lh, st = propagate(y, mu, tau, tol, h0, hmin, hmax)
                if st != STATUS_OK:
                    return yc, t + tau, st
                yval = yc[1]
                if abs(yval) < 1e-13:
                    break
                if (yval > 0.0) == (direction > 0):
                    hi = tau
                else:
                    lo = tau
                vy = yc[4]
                if vy != 0.0:
                    tau_new = tau - yval / vy
                else:
                    tau_new = 0.5 * (lo + hi)
                if tau_new <= lo or tau_new >= hi:
                    tau_new = 0.5 * (lo + hi)
                tau = tau_new
            return yc, t + tau, STATUS_OK
        t += h_step
        for i in range(6):
            y[i] = ynew[i]
        fac = _SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA
        if fac > _FAC_MAX:
            fac = _FAC_MAX
        elif fac < _FAC_MIN:
            fac = _FAC_MIN
        h = h_step * fac
        err_prev = err
        if h > hmax:
            h = hmax
        if h < hmin:
            return y, t, STATUS_UNDERFLOW
    return y, t, STATUS_NO_CROSSING


section_crossing = jit_kernel(_section_crossing_impl)


# ---------------------------------------------------------------------------
# Scattering-map series kernels.  The model is passed as packed arrays:
#   n_arr    (H,)  int64   even harmonic indices
#   a_dd     (H, La)       divided differences of A_n on ab_nodes
#   b_dd     (H, La)       divided differences of B_n on ab_nodes
#   ab_nodes (La,)
#   w_dd     (Lw,)         divided differences of omega on w_nodes
#   w_nodes  (Lw,)


def _newton012_impl(nodes, dd, x):
    """Newton-form polynomial with first and second derivative at ``x``."""
    m = dd.shape[0]
    p = dd[m - 1]
    p1 = 0.0
    p2 = 0.0
    for j in range(m - 2, -1, -1):
        d = x - nodes[j]
        p2 = p2 * d + 2.0 * p1
        p1 = p1 * d + p
        p = dd[j] + d * p
    return p, p1, p2


newton012 = jit_kernel(_newton012_impl)


def _series_eval_impl(I, phip, n_arr, a_dd, b_dd, ab_nodes):
    """Oscillatory generating term and its partials at (I, phi').

    Returns (gen, d/dphi', d/dI, d2/dI2, d2/dphi'dI).
    """
    gen = 0.0
    dphi = 0.0
    dI = 0.0
    dI2 = 0.0
    dphidI = 0.0
    for k in range(n_arr.shape[0]):
        n = n_arr[k]
        a, a1, a2 = newton012(ab_nodes, a_dd[k], I)
        b, b1, b2 = newton012(ab_nodes, b_dd[k], I)
        c = math.cos(n * phip)
        s = math.sin(n * phip)
        gen += (-b * c + a * s) / n
        dphi += a * c + b * s
        dI += (-b1 * c + a1 * s) / n
        dI2 += (-b2 * c + a2 * s) / n
        dphidI += a1 * c + b1 * s
    return gen, dphi, dI, dI2, dphidI


series_eval = jit_kernel(_series_eval_impl)


def _sm_apply_impl(I, phi, n_arr, a_dd, b_dd, ab_nodes, w_dd, w_nodes, tol,
                   max_iter):
    """Solve the implicit angle equation by fixed-point iteration.

    phi' = phi - omega(I) - dL~/dI(I, phi'), seeded with phi - omega(I).
    Returns (I', phi' unreduced, iterations, converged).
    """
    w, _w1, _w2 = newton012(w_nodes, w_dd, I)
    base = phi - w
    phip = base
    converged = False
    iters = 0
    for it in range(max_iter):
        iters = it + 1
        _g, _dp, dI, _d2, _dpd = series_eval(I, phip, n_arr, a_dd, b_dd,
                                             ab_nodes)
        phip_new = base - dI
        if abs(phip_new - phip) < tol:
            phip = phip_new
            converged = True
            break
        phip = phip_new
    _g, dphi, _dI, _d2, _dpd = series_eval(I, phip, n_arr, a_dd, b_dd,
                                           ab_nodes)
    return I + dphi, phip, iters, converged


sm_apply = jit_kernel(_sm_apply_impl)


def _portrait_impl(I0, n_iters, n_arr, a_dd, b_dd, ab_nodes, w_dd, w_nodes,
                   tol, max_iter, I_lo, I_hi):
    """Iterate the map from each seed on the phi = 0 line.

    Returns (points (n_orbits, n_iters+1, 2), length per orbit, flag per
    orbit).  Flags: 0 = completed, 1 = left (I_lo, I_hi], 2 = fixed point
    failed.  Orbits are truncated at the offending iterate; the exiting
    point itself is kept.
    """
    n_orbits = I0.shape[0]
    pts = np.empty((n_orbits, n_iters + 1, 2))
    lengths = np.zeros(n_orbits, dtype=np.int64)
    flags = np.zeros(n_orbits, dtype=np.int64)
    for j in range(n_orbits):
        I = I0[j]
        phi = 0.0
        pts[j, 0, 0] = I
        pts[j, 0, 1] = phi
        count = 1
        for _k in range(n_iters):
            Ip, phip, _it, ok = sm_apply(I, phi, n_arr, a_dd, b_dd, ab_nodes,
                                         w_dd, w_nodes, tol, max_iter)
            if not ok:
                flags[j] = 2
                break
            I = Ip
            phi = phip % _TWO_PI
            pts[j, count, 0] = I
            pts[j, count, 1] = phi
            count += 1
            if I <= I_lo or I > I_hi:
                flags[j] = 1
                break
        lengths[j] = count
    return pts, lengths, flags


portrait = jit_kernel(_portrait_impl)


def warmup():
    """Trigger JIT compilation of every kernel (cached across runs)."""
    y = np.array([0.5, 0.1, 0.05, 0.0, 0.3, 0.0])
    propagate(y, 0.01, 1e-3, 1e-10, 1e-3, 1e-12, 0.5)
    section_crossing(y, 0.01, 1, 1e-10, 1e-3, 1e-12, 0.5, 2.0)
    n_arr = np.array([2], dtype=np.int64)
    a_dd = np.array([[0.0, 0.1]])
    b_dd = np.array([[0.0, -0.05]])
    nodes = np.array([0.0, 1.0])
    w_dd = np.array([2.0, -0.02])
    w_nodes = np.array([1.0, 2.0])
    sm_apply(1.0, 0.3, n_arr, a_dd, b_dd, nodes, w_dd, w_nodes, 1e-8, 50)
    portrait(np.array([1.0]), 3, n_arr, a_dd, b_dd, nodes, w_dd, w_nodes,
             1e-8, 50, 1e-9, 7.0)
