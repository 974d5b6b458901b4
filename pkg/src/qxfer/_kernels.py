"""Compiled fixed-step RK4 loops for the field equations.

Coefficients are pre-evaluated by the callers at every grid node and every
step midpoint, so the kernels only do arithmetic.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _rhs(G, B, ce, cr, ae, ar, s):
    A = s * ce * G
    dG = ae * G
    dB = ar * B + cr * A
    F = np.conj(cr) * B - A
    return dG, dB, F.real * F.real + F.imag * F.imag


@njit(cache=True, nogil=True)
def rk4_transfer(t, ce_n, ce_m, cr_n, cr_m, ae_n, ae_m, ar_n, ar_m, s, G0, B0):
    """Integrate the circulator-case equations.

    ``ce``/``cr`` are t/sqrt(tau_rt) (so |c|^2 is the leakage rate), ``ae``/``ar``
    the complex diagonal rates ``-i*dw - (kappa + gamma)/2``; suffix ``_n``
    marks node values, ``_m`` midpoint values.  ``s = sqrt(eta_tl)``.
    Returns G, B and the running integral of |F|^2 at the nodes.
    """
    n = t.size - 1
    G = np.empty(n + 1, dtype=np.complex128)
    B = np.empty(n + 1, dtype=np.complex128)
    Q = np.empty(n + 1, dtype=np.float64)
    G[0] = G0
    B[0] = B0
    Q[0] = 0.0
    g = G0
    b = B0
    q = 0.0
    for k in range(n):
        h = t[k + 1] - t[k]
        k1g, k1b, k1q = _rhs(g, b, ce_n[k], cr_n[k], ae_n[k], ar_n[k], s)
        k2g, k2b, k2q = _rhs(g + 0.5 * h * k1g, b + 0.5 * h * k1b, ce_m[k], cr_m[k], ae_m[k], ar_m[k], s)
        k3g, k3b, k3q = _rhs(g + 0.5 * h * k2g, b + 0.5 * h * k2b, ce_m[k], cr_m[k], ae_m[k], ar_m[k], s)
        k4g, k4b, k4q = _rhs(g + h * k3g, b + h * k3b, ce_n[k + 1], cr_n[k + 1], ae_n[k + 1], ar_n[k + 1], s)
        g = g + h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        b = b + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        q = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        G[k + 1] = g
        B[k + 1] = b
        Q[k + 1] = q
    return G, B, Q


@njit(cache=True, nogil=True)
def _delay_rhs(G, B, ce, cr, ae, ar, W):
    A = ce * G - W
    dG = ae * G + ce * W
    dB = ar * B + cr * A
    return dG, dB


@njit(cache=True, nogil=True)
def rk4_delay(x, lag, ce_n, ce_m, cr_n, cr_m, ae_n, ae_m, ar_n, ar_m, phase, G0, B0):
    """Integrate the delay equations with real coupling coefficients.

    The grid ``x`` is invariant under a shift by the delay, and ``lag[j]``
    is the index of the step one delay earlier than step ``j`` (-1 if that
    lies before t = 0).  The reflected field of every step is stored at its
    left end, midpoint and right end, so the delayed term ``W = phase * F``
    is read back without interpolation.  Midpoint states use cubic Hermite
    interpolation of the step.
    """
    n = x.size - 1
    G = np.empty(n + 1, dtype=np.complex128)
    B = np.empty(n + 1, dtype=np.complex128)
    Fl = np.empty(n, dtype=np.complex128)
    Fm = np.empty(n, dtype=np.complex128)
    Fr = np.empty(n, dtype=np.complex128)
    G[0] = G0
    B[0] = B0
    g = G0
    b = B0
    zero = 0j
    for j in range(n):
        h = x[j + 1] - x[j]
        p = lag[j]
        if p >= 0:
            wa = phase * Fl[p]
            wm = phase * Fm[p]
            wb = phase * Fr[p]
        else:
            wa = zero
            wm = zero
            wb = zero
        k1g, k1b = _delay_rhs(g, b, ce_n[j], cr_n[j], ae_n[j], ar_n[j], wa)
        k2g, k2b = _delay_rhs(g + 0.5 * h * k1g, b + 0.5 * h * k1b, ce_m[j], cr_m[j], ae_m[j], ar_m[j], wm)
        k3g, k3b = _delay_rhs(g + 0.5 * h * k2g, b + 0.5 * h * k2b, ce_m[j], cr_m[j], ae_m[j], ar_m[j], wm)
        k4g, k4b = _delay_rhs(g + h * k3g, b + h * k3b, ce_n[j + 1], cr_n[j + 1], ae_n[j + 1], ar_n[j + 1], wb)
        g1 = g + h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        b1 = b + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        d1g, d1b = _delay_rhs(g1, b1, ce_n[j + 1], cr_n[j + 1], ae_n[j + 1], ar_n[j + 1], wb)
        gm = 0.5 * (g + g1) + 0.125 * h * (k1g - d1g)
        bm = 0.5 * (b + b1) + 0.125 * h * (k1b - d1b)
        Fl[j] = cr_n[j] * b - (ce_n[j] * g - wa)
        Fm[j] = cr_m[j] * bm - (ce_m[j] * gm - wm)
        Fr[j] = cr_n[j + 1] * b1 - (ce_n[j + 1] * g1 - wb)
        g = g1
        b = b1
        G[j + 1] = g
        B[j + 1] = b
    return G, B, Fl, Fm, Fr
