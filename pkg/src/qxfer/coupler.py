"""Circuit model of the SQUID-based tunable coupler.

The coupler is an effective transformer (inductances ``L1 = L1g + Mg + M``,
``L2 = L2g + Mg + M``, mutual inductance ``M``) tapped into the resonator
close to its shorted end; the tap acts as an inductance ``Le``.  Scattering
amplitudes are first computed in the ``exp(+i w t)`` frame and conjugated,
so every public result refers to the ``exp(-i w t)`` rotating frame used by
the field equations.

Units: inductances in pH, angular frequencies in rad/ns, impedances in Ohm
(``omega * L * 1e-3`` is a reactance in Ohm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError, ParameterError, RangeError, SingularConfigurationError
from .pulse import PulseShape

__all__ = [
    "FLUX_QUANTUM",
    "CouplerParams",
    "CouplerPoint",
    "DetuningLinearization",
    "effective_inductance",
    "flux_to_LJ",
    "amplitudes",
    "small_b_approximations",
    "invert_M",
    "detuning",
    "detuning_linear",
    "schedule",
]

#: Magnetic flux quantum h/2e in Wb.
FLUX_QUANTUM = 2.067833848e-15

_X = 1e-3  # (rad/ns) * pH -> Ohm


def effective_inductance(R_res: float, omega: float, d_over_lambda: float) -> float:
    """Inductance (pH) seen at a tap a distance ``d`` from the shorted end."""
    if not 0.0 < d_over_lambda < 0.25:
        raise DomainError("d/lambda must lie in (0, 0.25)")
    return R_res / (omega * _X) * math.tan(2.0 * math.pi * d_over_lambda)


def flux_to_LJ(Ic1: float, Ic2: float, Phi_ext: float) -> float:
    """Josephson inductance (pH) of a dc SQUID.

    Critical currents in uA; ``Phi_ext`` is the external flux in units of
    the flux quantum.
    """
    if not (Ic1 > 0 and Ic2 > 0):
        raise ParameterError("critical currents must be positive")
    i2 = Ic1**2 + Ic2**2 + 2.0 * Ic1 * Ic2 * math.cos(2.0 * math.pi * Phi_ext)
    if i2 <= 1e-24 * (Ic1 + Ic2) ** 2:
        raise SingularConfigurationError("SQUID critical current vanishes: infinite L_J")
    return FLUX_QUANTUM / (2.0 * math.pi * math.sqrt(i2) * 1e-6) * 1e12


@dataclass(frozen=True)
class CouplerParams:
    """Circuit constants of one coupler."""

    R_res: float
    R_tl: float
    omega0: float
    L1g: float
    L2g: float
    Mg: float
    Le: float
    Ic1: Optional[float] = None
    Ic2: Optional[float] = None

    def __post_init__(self):
        for name in ("R_res", "R_tl", "omega0", "L1g", "L2g", "Mg", "Le"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not self.omega0 * self.Le * _X / self.R_res < 1.0:
            raise ParameterError("tap too far from the shorted end (omega*Le/R_res >= 1)")

    @classmethod
    def from_tap(cls, R_res, R_tl, omega0, L1g, L2g, Mg, d_over_lambda, **kw) -> "CouplerParams":
        return cls(R_res, R_tl, omega0, L1g, L2g, Mg, effective_inductance(R_res, omega0, d_over_lambda), **kw)

    @classmethod
    def reference(cls) -> "CouplerParams":
        """80 Ohm resonator, 50 Ohm line, 6 GHz, L1g = L2g = 480 pH, Mg = 140 pH, Le = 180 pH."""
        return cls(80.0, 50.0, 2.0 * math.pi * 6.0, 480.0, 480.0, 140.0, 180.0)

    def M_from_flux(self, Phi_ext: float) -> float:
        """Effective mutual inductance ``L_J - Mg`` for the given flux (units of the flux quantum)."""
        if self.Ic1 is None or self.Ic2 is None:
            raise ParameterError("junction critical currents are not set")
        return flux_to_LJ(self.Ic1, self.Ic2, Phi_ext) - self.Mg


@dataclass(frozen=True)
class CouplerPoint:
    """Scattering data at one mutual inductance (``exp(-i w t)`` frame)."""

    M: float
    t: complex
    r_in: complex
    r_out: complex
    b: complex
    delta_omega: float

    def conjugate(self) -> "CouplerPoint":
        """The same point expressed in the ``exp(+i w t)`` frame."""
        return CouplerPoint(
            self.M, self.t.conjugate(), self.r_in.conjugate(), self.r_out.conjugate(),
            self.b.conjugate(), -self.delta_omega,
        )


def _raw(p: CouplerParams, M):
    """``(b, r_in, t)`` in the exp(+i w t) frame; vectorized over M."""
    M = np.asarray(M, dtype=float)
    w = p.omega0 * _X
    L1 = p.L1g + p.Mg + M
    L2 = p.L2g + p.Mg + M
    if np.any(L1 <= 0) or np.any(L2 <= 0):
        raise ParameterError("L1 and L2 must stay positive")
    line = 1.0 + 1j * w * L2 / p.R_tl
    b = (1j * w * L1 / p.R_res) / (L1 / p.Le + 1.0 / (1.0 - 1j * w * M**2 / (p.R_tl * L1 * line)))
    one_b = 1.0 + b
    if np.any(np.abs(one_b) < 1e-14):
        raise SingularConfigurationError("1 + b = 0")
    r_in = -(1.0 - b) / one_b
    t_tilde = 1j * 2.0 * w * M / one_b * (1.0 / p.R_res + 1j * b / (w * p.Le)) / line
    t = math.sqrt(p.R_res / p.R_tl) * t_tilde
    return b, r_in, t


def _delta_omega(p: CouplerParams, r_in, r_in0):
    return -(p.omega0 / math.pi) * np.angle(r_in / r_in0)


def amplitudes(params: CouplerParams, M: float) -> CouplerPoint:
    """Transmission and reflection amplitudes at mutual inductance ``M`` (pH)."""
    b, r_in, t = (np.conj(v) for v in _raw(params, M))
    r_in0 = np.conj(_raw(params, 0.0)[1])
    t = complex(t)
    r_in = complex(r_in)
    r_out = -r_in.conjugate() * complex(np.exp(2j * np.angle(t)))
    return CouplerPoint(float(M), t, r_in, r_out, complex(b), float(_delta_omega(params, r_in, r_in0)))


def transmission(params: CouplerParams, M):
    """Complex effective transmission amplitude, vectorized over ``M``."""
    return np.conj(_raw(params, M)[2])


def detuning(params: CouplerParams, M):
    """Coupling-induced frequency pull (rad/ns), vectorized over ``M``."""
    r_in = np.conj(_raw(params, M)[1])
    r_in0 = np.conj(_raw(params, 0.0)[1])
    out = _delta_omega(params, r_in, r_in0)
    return float(out) if np.ndim(out) == 0 else out


def small_b_approximations(params: CouplerParams, M):
    """Weak-coupling forms of ``(b, r_in, t)`` in the ``exp(-i w t)`` frame.

    Valid when ``w M << R_tl`` and ``w Le << R_res``.
    """
    M = np.asarray(M, dtype=float)
    w = params.omega0 * _X
    L1 = params.L1g + params.Mg + M
    L2 = params.L2g + params.Mg + M
    Le = params.Le
    b = 1j * (w * Le / params.R_res) / (1.0 + Le / L1)
    r_in = -np.exp(-2j * w * Le * L1 / (params.R_res * (L1 + Le)))
    t = 1j * 2.0 * w * Le * M / (math.sqrt(params.R_res * params.R_tl) * (L1 + Le)) / (1.0 + 1j * w * L2 / params.R_tl)
    return np.conj(b), np.conj(r_in), np.conj(t)


def _upper_bracket(params, target):
    M_hi = params.Mg
    for _ in range(64):
        if np.abs(transmission(params, M_hi)) > target:
            return M_hi
        M_hi *= 2.0
    raise RangeError(f"|t| = {target:g} is not reached on the monotone branch")


def invert_M(params: CouplerParams, t_abs_target, iterations: int = 200):
    """Mutual inductance ``M >= 0`` giving the requested ``|t|``.

    Works on scalars and arrays (vectorized bisection on ``[0, M_hi]``,
    where ``M_hi`` is found by doubling).
    """
    target = np.asarray(t_abs_target, dtype=float)
    if np.any(target < 0) or np.any(~np.isfinite(target)):
        raise RangeError("target |t| must be finite and non-negative")
    top = float(np.max(target)) if target.size else 0.0
    if top == 0.0:
        out = np.zeros_like(target)
        return float(out) if out.ndim == 0 else out
    M_hi = _upper_bracket(params, top)
    probe = np.abs(transmission(params, np.linspace(0.0, M_hi, 257)))
    if np.any(np.diff(probe) <= 0):
        raise ConfigError("|t(M)| is not monotone on the search bracket")
    lo = np.zeros_like(target)
    hi = np.full_like(target, M_hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = np.abs(transmission(params, mid)) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= 1e-14 * M_hi):
            break
    out = np.where(target == 0, 0.0, 0.5 * (lo + hi))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DetuningLinearization:
    """Weak-coupling estimates of the frequency pull.

    ``slope`` is the ratio ``dw / |t|`` (rad/ns); ``per_M`` the linear
    coefficient ``dw / M`` (rad/ns/pH).  :meth:`improved` keeps the ``M``
    dependence of the tap factor.
    """

    slope: float
    per_M: float
    params: CouplerParams
    b_abs: float

    def linear(self, M):
        return self.per_M * np.asarray(M, dtype=float)

    def improved(self, M):
        p = self.params
        M = np.asarray(M, dtype=float)
        w0 = p.omega0
        L10 = p.L1g + p.Mg
        num = 2.0 * w0 * w0 * _X * p.Le**2 / (1.0 + self.b_abs**2)
        return -num * M / (math.pi * p.R_res * (L10 + p.Le) * (L10 + p.Le + M))


def detuning_linear(params: CouplerParams) -> DetuningLinearization:
    """Closed-form linearizations of the frequency pull around ``M = 0``."""
    w0 = params.omega0
    w = w0 * _X
    L1 = params.L1g + params.Mg
    L2 = params.L2g + params.Mg
    Le = params.Le
    b_abs = (w * Le / params.R_res) / (1.0 + Le / L1)
    slope = (
        -(w0 / math.pi)
        * math.sqrt(1.0 + (w * L2 / params.R_tl) ** 2)
        / math.sqrt(1.0 + b_abs**2)
        * math.sqrt(params.R_tl / params.R_res)
        * Le / (L1 + Le)
    )
    per_M = -(w0 / math.pi) * 2.0 / (1.0 + b_abs**2) * w * Le**2 / (params.R_res * (L1 + Le) ** 2)
    return DetuningLinearization(slope, per_M, params, b_abs)


class _CouplerPulse(PulseShape):
    def __init__(self, params, source: PulseShape):
        self.source = source
        self.params = params
        super().__init__(self._eval, source.t_f, source.breakpoints, source.n_grid)

    def mutual(self, t):
        return invert_M(self.params, np.abs(self.source(t)))

    def _eval(self, t):
        return transmission(self.params, self.mutual(t))


def schedule(params: CouplerParams, pulse_abs: PulseShape, compensation: float = 0.0):
    """Complex coupler pulse and applied detuning for a target ``|t(t)|``.

    Returns ``(pulse, detuning)``: ``pulse`` is a :class:`PulseShape` whose
    magnitude follows ``pulse_abs`` and whose phase is set by the circuit;
    ``detuning(t)`` is the uncompensated part ``(1 - c)`` of the frequency
    pull, in rad/ns.
    """
    if not 0.0 <= compensation <= 1.0:
        raise ParameterError("compensation must lie in [0, 1]")
    top = pulse_abs.peak()
    _upper_bracket(params, top * (1 - 1e-12))
    pulse = _CouplerPulse(params, pulse_abs)
    scale = 1.0 - compensation

    def detuning_schedule(t):
        if scale == 0.0:
            return np.zeros(np.shape(t))
        return scale * np.asarray(detuning(params, pulse.mutual(t)))

    return pulse, detuning_schedule
