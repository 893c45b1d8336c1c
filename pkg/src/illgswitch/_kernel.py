"""Compiled Dormand-Prince 5(4) stepper for the 6-D macrospin system.

Kept separate from the public integrator module so everything here can
stay scalar-level numba code: the inertial term makes the system stiff
on the nutation scale (frequency of order 1/eta), and Python-level
stepping would dominate the run time by orders of magnitude.

The stepper integrates one constant-field segment.  Field switching is
handled by the caller, which chains segments and lands each one exactly
on its endpoint.
"""

import math

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau with the FSAL property: the 7th stage of
# an accepted step is the 1st stage of the next.
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# Difference between the 5th- and 4th-order solutions.
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)

# Segment status codes.
STATUS_REACHED_END = 0
STATUS_CONVERGED = 1
STATUS_STEP_UNDERFLOW = 2
STATUS_BUDGET_EXHAUSTED = 3
STATUS_NORM_BREACH = 4

# Raw outcome codes (mapped to SwitchOutcome by the wrapper).
OUTCOME_NONE = 0
OUTCOME_MINUS_E1 = 1
OUTCOME_PLUS_E1 = 2
OUTCOME_OTHER_EQ = 3


@njit(cache=True, nogil=True)
def rhs(y, h1, h2, h3, D1, D2, D3, alpha, inv_eta, out):
    """dm/dt = v; dv/dt = -|v|^2 m - (1/eta)[m x v + m x (m x h_eff)
    + alpha v]."""
    m1, m2, m3, v1, v2, v3 = y[0], y[1], y[2], y[3], y[4], y[5]
    he1 = h1 - D1 * m1
    he2 = h2 - D2 * m2
    he3 = h3 - D3 * m3
    mxv1 = m2 * v3 - m3 * v2
    mxv2 = m3 * v1 - m1 * v3
    mxv3 = m1 * v2 - m2 * v1
    # m x (m x h) = (m.h) m - |m|^2 h
    mdh = m1 * he1 + m2 * he2 + m3 * he3
    mm = m1 * m1 + m2 * m2 + m3 * m3
    t1 = mdh * m1 - mm * he1
    t2 = mdh * m2 - mm * he2
    t3 = mdh * m3 - mm * he3
    vv = v1 * v1 + v2 * v2 + v3 * v3
    out[0] = v1
    out[1] = v2
    out[2] = v3
    out[3] = -vv * m1 - inv_eta * (mxv1 + t1 + alpha * v1)
    out[4] = -vv * m2 - inv_eta * (mxv2 + t2 + alpha * v2)
    out[5] = -vv * m3 - inv_eta * (mxv3 + t3 + alpha * v3)


@njit(cache=True, nogil=True)
def dp45_segment(y0, t0, t1, h_field, D, alpha, eta, rtol, atol, max_step,
                 renormalize, detect, conv_tol, max_steps, breach_tol):
    """Adaptive integration of one constant-field segment [t0, t1].

    Parameters are plain scalars/arrays so the whole loop stays in
    machine code.  Returns

        (ts, ys, status, n_accepted, n_rejected, norm_drift,
         mv_drift, outcome)

    where ts, ys hold every accepted sample (including y0), norm_drift
    is the largest | |m| - 1 | seen before any renormalization,
    mv_drift the largest |m . v| relative to (1 + |v|), and outcome is
    an OUTCOME_* code (only set when detect is on and status is
    STATUS_CONVERGED).

    Detection (convergence to an equilibrium) is meaningful only while
    the active field is zero; callers enable it per segment.
    """
    D1, D2, D3 = D[0], D[1], D[2]
    h1, h2, h3 = h_field[0], h_field[1], h_field[2]
    inv_eta = 1.0 / eta
    cap = 4096
    ts = np.empty(cap)
    ys = np.empty((cap, 6))
    n = 0
    ts[n] = t0
    ys[n] = y0
    n += 1
    y = y0.copy()
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    k5 = np.empty(6)
    k6 = np.empty(6)
    k7 = np.empty(6)
    ytmp = np.empty(6)
    ynew = np.empty(6)
    rhs(y, h1, h2, h3, D1, D2, D3, alpha, inv_eta, k1)
    # Initial step: a small fraction of the local timescale |y| / |y'|.
    f0 = 0.0
    ymax = 0.0
    for i in range(6):
        f0 = max(f0, abs(k1[i]))
        ymax = max(ymax, abs(y[i]))
    hstep = min(1e-2 * (1.0 + ymax) / (f0 + 1e-300), t1 - t0, max_step)
    t = t0
    n_acc = 0
    n_rej = 0
    norm_drift = 0.0
    mv_drift = 0.0
    status = STATUS_REACHED_END
    outcome = OUTCOME_NONE
    hmin = max(abs(t0), abs(t1), 1.0) * 1e-15
    while t < t1:
        if n_acc + n_rej >= max_steps:
            status = STATUS_BUDGET_EXHAUSTED
            break
        if hstep < hmin:
            status = STATUS_STEP_UNDERFLOW
            break
        landing = t + hstep >= t1
        if landing:
            hstep = t1 - t
        for i in range(6):
            ytmp[i] = y[i] + hstep * _A21 * k1[i]
        rhs(ytmp, h1, h2, h3, D1, D2, D3, alpha, inv_eta, k2)
        for i in range(6):
            ytmp[i] = y[i] + hstep * (_A31 * k1[i] + _A32 * k2[i])
        rhs(ytmp, h1, h2, h3, D1, D2, D3, alpha, inv_eta, k3)
        for i in range(6):
            ytmp[i] = y[i] + hstep * (_A41 * k1[i] + _A42 * k2[i]
                                      + _A43 * k3[i])
        rhs(ytmp, h1, h2, h3, D1, D2, D3, alpha, inv_eta, k4)
        for i in range(6):
            ytmp[i] = y[i] + hstep * (_A51 * k1[i] + _A52 * k2[i]
                                      + _A53 * k3[i] + _A54 * k4[i])
        rhs(ytmp, h1, h2, h3, D1, D2, D3, alpha, inv_eta, k5)
        for i in range(6):
            ytmp[i] = y[i] + hstep * (_A61 * k1[i] + _A62 * k2[i]
                                      + _A63 * k3[i] + _A64 * k4[i]
                                      + _A65 * k5[i])
        rhs(ytmp, h1, h2, h3, D1, D2, D3, alpha, inv_eta, k6)
        for i in range(6):
            ynew[i] = y[i] + hstep * (_B1 * k1[i] + _B3 * k3[i]
                                      + _B4 * k4[i] + _B5 * k5[i]
                                      + _B6 * k6[i])
        rhs(ynew, h1, h2, h3, D1, D2, D3, alpha, inv_eta, k7)
        errnorm = 0.0
        for i in range(6):
            err_i = hstep * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                             + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            errnorm += (err_i / sc) ** 2
        errnorm = math.sqrt(errnorm / 6.0)
        if errnorm <= 1.0:
            t = t1 if landing else t + hstep
            n_acc += 1
            nm = math.sqrt(ynew[0] * ynew[0] + ynew[1] * ynew[1]
                           + ynew[2] * ynew[2])
            d = abs(nm - 1.0)
            if d > norm_drift:
                norm_drift = d
            if renormalize:
                ynew[0] /= nm
                ynew[1] /= nm
                ynew[2] /= nm
                mv = (ynew[0] * ynew[3] + ynew[1] * ynew[4]
                      + ynew[2] * ynew[5])
                ynew[3] -= mv * ynew[0]
                ynew[4] -= mv * ynew[1]
                ynew[5] -= mv * ynew[2]
            else:
                mv = (ynew[0] * ynew[3] + ynew[1] * ynew[4]
                      + ynew[2] * ynew[5])
            vmag = math.sqrt(ynew[3] * ynew[3] + ynew[4] * ynew[4]
                             + ynew[5] * ynew[5])
            rel_mv = abs(mv) / (1.0 + vmag)
            if rel_mv > mv_drift:
                mv_drift = rel_mv
            for i in range(6):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if n >= cap:
                cap *= 2
                ts_new = np.empty(cap)
                ys_new = np.empty((cap, 6))
                ts_new[:n] = ts[:n]
                ys_new[:n] = ys[:n]
                ts = ts_new
                ys = ys_new
            ts[n] = t
            ys[n] = y
            n += 1
            if (not renormalize) and norm_drift > breach_tol:
                status = STATUS_NORM_BREACH
                break
            if detect and vmag < conv_tol:
                for ax in range(3):
                    for sgn in (-1.0, 1.0):
                        d0 = y[ax] - sgn
                        dist_sq = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]
                                   - y[ax] * y[ax] + d0 * d0)
                        if dist_sq < conv_tol * conv_tol:
                            if ax == 0:
                                outcome = (OUTCOME_MINUS_E1 if sgn < 0.0
                                           else OUTCOME_PLUS_E1)
                            else:
                                outcome = OUTCOME_OTHER_EQ
                            status = STATUS_CONVERGED
                            break
                    if status == STATUS_CONVERGED:
                        break
                if status == STATUS_CONVERGED:
                    break
            fac = 5.0 if errnorm < 1e-30 else 0.9 * errnorm ** -0.2
            if fac > 5.0:
                fac = 5.0
            hstep = min(hstep * fac, max_step)
        else:
            n_rej += 1
            fac = 0.9 * errnorm ** -0.2
            if fac < 0.2:
                fac = 0.2
            hstep *= fac
    return (ts[:n], ys[:n], status, n_acc, n_rej, norm_drift, mv_drift,
            outcome)
