"""Transfer without a circulator: the reflected field returns to the emitter.

With real, positive coupling coefficients the equations read::

    W(t)  = exp(i phi) F(t - t_d)          (zero for t < t_d)
    A     = sqrt(kappa_e) G - W
    dG/dt = -kappa_e G / 2 + sqrt(kappa_e) W
    dB/dt = -kappa_r B / 2 + sqrt(kappa_r) A
    F     = sqrt(kappa_r) B - A

``t_d`` is the round-trip delay of the line and ``phi`` the round-trip phase.
Detuning and resonator relaxation enter the diagonal terms as in
:mod:`qxfer.dynamics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import FieldTrajectory, SimConfig, TransferOutcome, _coefficients, _outcome
from .errors import ConfigError, ParameterError

__all__ = ["DelayConfig", "delay_grid", "simulate_with_delay", "worst_case_bound"]

_SNAP = 1e-9


@dataclass(frozen=True)
class DelayConfig:
    """Round-trip delay ``t_d`` (ns) and phase ``phi`` (rad, reduced to [0, 2 pi))."""

    t_d: float
    phi: float = 0.0

    def __post_init__(self):
        if not (self.t_d >= 0 and math.isfinite(self.t_d)):
            raise ParameterError("t_d must be finite and >= 0")
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))


def delay_grid(t_f: float, t_d: float, breakpoints, dt: float):
    """Grid on ``[0, t_f]`` that is closed under shifts by ``t_d``.

    Nodes are the multiples of ``h = t_d / k`` (``k = ceil(t_d / dt)``) plus
    every breakpoint, and ``t_f``, shifted by all multiples of ``t_d`` that
    stay inside the interval.  Returns ``(x, lag, h)`` where ``lag[j]`` is the
    step lying one delay before step ``j`` or -1.
    """
    if not t_d > 0:
        raise ConfigError("zero delay has no history buffer; use the circulator model")
    k = max(1, int(math.ceil(t_d / dt - 1e-12)))
    h = t_d / k
    span = t_f / h
    top = int(math.floor(span + _SNAP))
    nodes = {(i, 0.0) for i in range(top + 1)}
    fractions = []
    for p in sorted(breakpoints) + [t_f]:
        q = p / h
        i0 = int(math.floor(q))
        f = q - i0
        if f < _SNAP:
            f = 0.0
        elif f > 1.0 - _SNAP:
            i0, f = i0 + 1, 0.0
        if f == 0.0:
            continue
        # reuse an equal offset so shifted copies coincide exactly
        f = next((g for g in fractions if abs(g - f) < _SNAP), f)
        if f not in fractions:
            fractions.append(f)
        i = i0 - k * (i0 // k)
        while i + f <= span * (1 + 1e-15):
            nodes.add((i, f))
            i += k
    keys = sorted(nodes, key=lambda n: n[0] + n[1])
    index = {n: j for j, n in enumerate(keys)}
    x = np.array([(i + f) * h for i, f in keys])
    lag = np.full(len(keys) - 1, -1, dtype=np.int64)
    for j, (i, f) in enumerate(keys[:-1]):
        if i >= k:
            p = index[(i - k, f)]
            if keys[p + 1] != (keys[j + 1][0] - k, keys[j + 1][1]):
                raise ConfigError("delay grid is not shift invariant")
            lag[j] = p
    return x, lag, h


def simulate_with_delay(config: SimConfig, delay: DelayConfig):
    """Integrate the delay equations; returns ``(FieldTrajectory, TransferOutcome)``.

    Coupler amplitudes enter through their magnitudes.  The step is reduced
    so the delay is an integer number of lattice steps.  ``reflected`` in the
    ledger is the energy still travelling in the line at ``t_f``, i.e. the
    reflected field emitted during the last ``t_d``.
    """
    if config.eta_tl != 1.0:
        raise ConfigError("line loss is not modelled together with reflections")
    warnings = []
    dt = config.step()
    tau_min = config.tau_min()
    if dt > tau_min / 100.0 * (1 + 1e-12):
        raise ParameterError(f"dt_int = {dt:g} ns exceeds tau_min/100 = {tau_min / 100:g} ns")
    if delay.t_d / tau_min < 0.1:
        warnings.append("t_d/tau < 0.1: delay equations are poorly resolved in this regime")
    t_f = config.t_f
    bps = set(config.pulse_e.breakpoints) | set(config.pulse_r.breakpoints)
    x, lag, _ = delay_grid(t_f, delay.t_d, bps, dt)
    mid = 0.5 * (x[1:] + x[:-1])

    class _Abs:
        def __init__(self, p):
            self.p = p

        def __call__(self, t):
            return np.abs(self.p(t))

    coeff = {}
    for tag, pulse, rt, det, T1, extra in (
        ("e", config.pulse_e, config.tau_rt_e, config.detuning_e, config.T1_e, config.extra_decay_e),
        ("r", config.pulse_r, config.tau_rt_r, config.detuning_r, config.T1_r, config.extra_decay_r),
    ):
        mag = _Abs(pulse)
        coeff[f"c{tag}_n"], coeff[f"a{tag}_n"] = _coefficients(mag, rt, det, T1, extra, x)
        coeff[f"c{tag}_m"], coeff[f"a{tag}_m"] = _coefficients(mag, rt, det, T1, extra, mid)

    G, B, Fl, Fm, Fr = _kernels.rk4_delay(
        x, lag, coeff["ce_n"], coeff["ce_m"], coeff["cr_n"], coeff["cr_m"],
        coeff["ae_n"], coeff["ae_m"], coeff["ar_n"], coeff["ar_m"],
        complex(np.exp(1j * delay.phi)), complex(config.G0), complex(config.B0),
    )
    h = np.diff(x)
    in_line = x[:-1] >= t_f - delay.t_d - _SNAP * h
    flux = np.abs(Fl) ** 2 + 4.0 * np.abs(Fm) ** 2 + np.abs(Fr) ** 2
    reflected = float(np.sum(h[in_line] * flux[in_line]) / 6.0)

    F = np.append(Fl, Fr[-1])
    W = np.zeros_like(F)
    has = lag >= 0
    W[:-1][has] = np.exp(1j * delay.phi) * Fl[lag[has]]
    if lag[-1] >= 0:
        W[-1] = np.exp(1j * delay.phi) * Fr[lag[-1]]
    A = coeff["ce_n"] * G - W
    traj = FieldTrajectory(x, G, B, A, F)
    return traj, _outcome(config, G, B, reflected, warnings)


def worst_case_bound(loss_G: float, loss_F: float):
    """Largest inefficiency when the reflected field interferes with the residual.

    Returns ``((sqrt(l_G) + sqrt(l_F))**2, 2 (l_G + l_F))``.
    """
    if loss_G < 0 or loss_F < 0:
        raise ParameterError("losses must be non-negative")
    tight = (math.sqrt(loss_G) + math.sqrt(loss_F)) ** 2
    return tight, 2.0 * (loss_G + loss_F)
