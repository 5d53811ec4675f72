"""Compiled Dormand–Prince 5(4) stepping loop with in-loop terminal checks.

The loop stores every accepted step (time, state and field value, the latter
being the FSAL stage) so that events can be located afterwards on the cubic
Hermite interpolant.  Terminal conditions are tested after each accepted
step; they are the only way the loop stops before the end of the span.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .dynsys import field_rhs

# status codes returned by the loop (terminal codes share the namespace)
ST_RUNNING = 0
ST_HIT_P0 = 1
ST_HIT_Q1 = 2
ST_ESC_Q2 = 3
ST_ESC_Q3 = 4
ST_ESC_Q5 = 5
ST_VANISH = 6
ST_HIT_P1 = 7
ST_HIT_P2 = 8
ST_STRIP_EXIT = 9
ST_BLOWUP = 10
ST_SPAN = 20
ST_STEP_FAIL = 21
ST_MAX_STEPS = 22
ST_BUFFER_FULL = 23
ST_SINGULAR = 24

# threshold vector layout
T_Y_ESC, T_P0_BALL, T_X_STRIP, T_Q5_X, T_Q5_Z, T_Q5_Y, T_CRIT_BALL, T_BLOWUP = range(8)
(
    F_P0,
    F_Q1,
    F_Q2,
    F_Q3,
    F_Q5,
    F_P1,
    F_P2,
    F_STRIP_EXIT,
    F_VANISH,
    F_BLOWUP,
) = range(8, 18)
N_THRESH = 18

# loop-state vector layout (carried across buffer refills)
S_H, S_FACOLD, S_STRIP_SEEN, S_STRIP_OK, S_IN_PREV, S_ZSIGN, S_NCROSS, S_NSTEPS, S_NFEV, S_NREJ = range(10)
N_STATE = 10

# Dormand–Prince coefficients
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@njit(cache=True)
def phase_components(chart, u, prm, xyz, dev):
    """Fill xyz = (X, Y, Z) and dev = (Y − Y_stat, Z − Z0); False for non-phase charts."""
    ys = prm[3]
    z0 = prm[4]
    if chart == 0:
        xyz[0] = u[0]
        xyz[1] = u[1]
        xyz[2] = u[2]
        dev[0] = u[1] - ys
        dev[1] = u[2] - z0
    elif chart == 10:
        xyz[0] = u[0]
        xyz[1] = u[1] + ys
        xyz[2] = u[2] + z0
        dev[0] = u[1]
        dev[1] = u[2]
    elif chart == 5:
        xyz[0] = 0.0
        xyz[1] = u[0]
        xyz[2] = u[1]
        dev[0] = u[0] - ys
        dev[1] = u[1] - z0
    elif chart == 6:
        xyz[0] = u[0]
        xyz[1] = u[1]
        xyz[2] = 0.0
        dev[0] = u[1] - ys
        dev[1] = -z0
    else:
        return False
    return True


@njit(cache=True)
def check_terminal(chart, u, prm, tp, st, xyz, dev):
    """Return a terminal code (0 = keep going) for state ``u``; updates strip bookkeeping in ``st``."""
    for i in range(u.shape[0]):
        if not math.isfinite(u[i]):
            return ST_STEP_FAIL
    if chart == 1:
        if tp[F_VANISH] > 0.0 and u[0] <= 0.0:
            return ST_VANISH
        if tp[F_BLOWUP] > 0.0 and (abs(u[0]) > tp[T_BLOWUP] or abs(u[1]) > tp[T_BLOWUP]):
            return ST_BLOWUP
        return ST_RUNNING
    if not phase_components(chart, u, prm, xyz, dev):
        if tp[F_BLOWUP] > 0.0:
            for i in range(u.shape[0]):
                if abs(u[i]) > tp[T_BLOWUP]:
                    return ST_BLOWUP
        return ST_RUNNING
    X = xyz[0]
    Y = xyz[1]
    Z = xyz[2]
    in_strip = dev[0] > 0.0 and Y < 0.0
    if tp[F_Q2] > 0.0 and Y > tp[T_Y_ESC]:
        return ST_ESC_Q2
    if tp[F_Q3] > 0.0 and Y < -tp[T_Y_ESC]:
        return ST_ESC_Q3
    if tp[F_STRIP_EXIT] > 0.0:
        if st[S_IN_PREV] > 0.0 and not in_strip:
            return ST_STRIP_EXIT
        st[S_IN_PREV] = 1.0 if in_strip else 0.0
    if tp[F_Q1] > 0.0 and X >= tp[T_X_STRIP]:
        # the stationary line itself (zero offset) is the orbit entering Q1 along the strip edge
        on_strip = dev[0] >= 0.0 and Y < 0.0
        if st[S_STRIP_SEEN] == 0.0:
            st[S_STRIP_SEEN] = 1.0
            st[S_STRIP_OK] = 1.0 if on_strip else 0.0
        if st[S_STRIP_OK] > 0.0:
            if on_strip:
                return ST_HIT_Q1
            st[S_STRIP_OK] = 0.0
    if tp[F_P0] > 0.0:
        if X < tp[T_P0_BALL] and abs(Y) < tp[T_P0_BALL] and abs(Z) < tp[T_P0_BALL]:
            return ST_HIT_P0
    if tp[F_P1] > 0.0:
        n2 = prm[0] - 2.0
        if X < tp[T_CRIT_BALL] and abs(Y + n2) < tp[T_CRIT_BALL] and abs(Z) < tp[T_CRIT_BALL]:
            return ST_HIT_P1
    if tp[F_P2] > 0.0:
        if X < tp[T_CRIT_BALL] and abs(dev[0]) < tp[T_CRIT_BALL] and abs(dev[1]) < tp[T_CRIT_BALL]:
            return ST_HIT_P2
    if tp[F_Q5] > 0.0 and X > tp[T_Q5_X]:
        if abs(Z) / X < tp[T_Q5_Z] and abs(Y / X - prm[5]) < tp[T_Q5_Y]:
            return ST_ESC_Q5
    return ST_RUNNING


@njit(cache=True)
def _err_norm(y, ynew, err, rtol, atol):
    acc = 0.0
    n = y.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        r = err[i] / sc
        acc += r * r
    return math.sqrt(acc / n)


@njit(cache=True)
def _eval(chart, tdir, t0, tau, y, prm, out):
    code = field_rhs(chart, t0 + tdir * tau, y, prm, out)
    for i in range(out.shape[0]):
        out[i] *= tdir
    return code


@njit(cache=True)
def initial_step(chart, prm, t0, y0, tdir, span, rtol, atol):
    n = y0.shape[0]
    f0 = np.empty(n)
    f1 = np.empty(n)
    y1 = np.empty(n)
    if _eval(chart, tdir, t0, 0.0, y0, prm, f0) != 0:
        return -1.0
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    for i in range(n):
        y1[i] = y0[i] + h0 * f0[i]
    if _eval(chart, tdir, t0, h0, y1, prm, f1) != 0:
        return h0 * 1e-3
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = math.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


@njit(cache=True)
def dopri_run(chart, prm, t0, tau0, y0, tdir, span, rtol, atol, max_steps, tp, st, out_t, out_y, out_f):
    """Advance from τ = tau0 (t = t0 + tdir·τ) up to τ = span.

    Accepted steps are written to ``out_*`` starting at row 0; the first row is
    the initial point.  Returns (status, rows_written, tau_reached).
    """
    n = y0.shape[0]
    cap = out_t.shape[0]
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    yt = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)
    xyz = np.empty(3)
    dev = np.empty(2)

    safe = 0.9
    beta = 0.04
    expo1 = 0.2 - beta * 0.75
    facc1 = 5.0  # largest shrink 1/0.2
    facc2 = 0.1  # largest growth 1/10

    tau = tau0
    if _eval(chart, tdir, t0, tau, y, prm, k1) != 0:
        return ST_SINGULAR, 0, tau
    st[S_NFEV] += 1
    out_t[0] = t0 + tdir * tau
    for i in range(n):
        out_y[0, i] = y[i]
        out_f[0, i] = tdir * k1[i]
    rows = 1
    if tau0 == 0.0:
        code = check_terminal(chart, y, prm, tp, st, xyz, dev)
        if phase_components(chart, y, prm, xyz, dev):
            st[S_ZSIGN] = 1.0 if dev[1] > 0.0 else (-1.0 if dev[1] < 0.0 else 0.0)
        if code != ST_RUNNING:
            return code, rows, tau
    h = st[S_H]
    facold = st[S_FACOLD]
    reject = False
    while True:
        if tau >= span:
            return ST_SPAN, rows, tau
        if st[S_NSTEPS] >= max_steps:
            return ST_MAX_STEPS, rows, tau
        if rows >= cap:
            st[S_H] = h
            st[S_FACOLD] = facold
            return ST_BUFFER_FULL, rows, tau
        last = False
        if tau + h >= span:
            h = span - tau
            last = True
        if h < 1e-14 * max(1.0, abs(tau)):
            return ST_STEP_FAIL, rows, tau
        for i in range(n):
            yt[i] = y[i] + h * A21 * k1[i]
        bad = _eval(chart, tdir, t0, tau + C2 * h, yt, prm, k2)
        for i in range(n):
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        bad += _eval(chart, tdir, t0, tau + C3 * h, yt, prm, k3)
        for i in range(n):
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        bad += _eval(chart, tdir, t0, tau + C4 * h, yt, prm, k4)
        for i in range(n):
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        bad += _eval(chart, tdir, t0, tau + C5 * h, yt, prm, k5)
        for i in range(n):
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        bad += _eval(chart, tdir, t0, tau + h, yt, prm, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        bad += _eval(chart, tdir, t0, tau + h, ynew, prm, k7)
        st[S_NFEV] += 6
        finite = bad == 0
        if finite:
            for i in range(n):
                err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                if not (math.isfinite(ynew[i]) and math.isfinite(err[i])):
                    finite = False
        if not finite:
            h *= 0.25
            reject = True
            st[S_NREJ] += 1
            continue
        enorm = _err_norm(y, ynew, err, rtol, atol)
        fac11 = enorm**expo1 if enorm > 0.0 else 0.0
        fac = fac11 / facold**beta
        fac = max(facc2, min(facc1, fac / safe))
        hnew = h / fac
        if enorm <= 1.0:
            facold = max(enorm, 1e-4)
            tau = span if last else tau + h
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            st[S_NSTEPS] += 1
            out_t[rows] = t0 + tdir * tau
            for i in range(n):
                out_y[rows, i] = y[i]
                out_f[rows, i] = tdir * k7[i]
            rows += 1
            code = check_terminal(chart, y, prm, tp, st, xyz, dev)
            if phase_components(chart, y, prm, xyz, dev):
                sg = 1.0 if dev[1] > 0.0 else (-1.0 if dev[1] < 0.0 else 0.0)
                if sg != 0.0:
                    if st[S_ZSIGN] != 0.0 and sg != st[S_ZSIGN]:
                        st[S_NCROSS] += 1
                    st[S_ZSIGN] = sg
            if reject:
                hnew = min(hnew, h)
            reject = False
            h = hnew
            st[S_H] = h
            st[S_FACOLD] = facold
            if code != ST_RUNNING:
                return code, rows, tau
        else:
            h = h / min(facc1, fac11 / safe)
            reject = True
            st[S_NREJ] += 1
