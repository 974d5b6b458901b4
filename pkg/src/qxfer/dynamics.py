"""Classical field dynamics of the emitting and receiving resonators.

Rotating-frame equations (times in ns, rates in 1/ns, detunings in rad/ns)::

    dG/dt = -i dw_e G - (kappa_e + 1/T1_e) G / 2
    dB/dt = -i dw_r B - (kappa_r + 1/T1_r) B / 2 + (t_r/|t_r|) sqrt(kappa_r) A
    A     = sqrt(eta_tl) (t_e/|t_e|) sqrt(kappa_e) G
    F     = (t_r*/|t_r|) sqrt(kappa_r) B - A

with ``kappa = |t|**2 / tau_rt``.  ``F`` is the field reflected back from the
receiving resonator, which a circulator routes away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import _kernels
from .errors import ParameterError
from .pulse import ProtocolParams, PulseShape, ideal_pulses

__all__ = [
    "SimConfig",
    "FieldTrajectory",
    "TransferOutcome",
    "simulate",
    "analytic_inefficiency",
    "dissipation_scaling",
    "detuning_coefficient",
    "round_trip_time",
    "time_grid",
]

Schedule = Union[float, Callable]


def round_trip_time(freq_GHz: float) -> float:
    """Round-trip time ``pi / omega`` (ns) of a quarter-wavelength resonator."""
    return np.pi / (2.0 * np.pi * freq_GHz)


@dataclass(frozen=True)
class SimConfig:
    """One complete transfer experiment.

    ``detuning_*`` and ``extra_decay_*`` are constants or vectorized callables
    of time.  ``extra_decay_*`` adds an energy decay rate to the diagonal term
    only, leaving the transfer term unchanged.
    """

    pulse_e: PulseShape
    pulse_r: PulseShape
    tau_rt_e: float
    tau_rt_r: float
    detuning_e: Schedule = 0.0
    detuning_r: Schedule = 0.0
    T1_e: float = math.inf
    T1_r: float = math.inf
    eta_tl: float = 1.0
    G0: complex = 1.0
    B0: complex = 0.0
    dt_int: float | None = None
    extra_decay_e: Schedule = 0.0
    extra_decay_r: Schedule = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta_tl <= 1.0:
            raise ParameterError("eta_tl must lie in (0, 1]")
        if not (self.T1_e > 0 and self.T1_r > 0):
            raise ParameterError("T1 must be positive (inf allowed)")
        if self.dt_int is not None and not self.dt_int > 0:
            raise ParameterError("dt_int must be positive")
        if not (self.tau_rt_e > 0 and self.tau_rt_r > 0):
            raise ParameterError("round-trip times must be positive")
        if abs(self.pulse_e.t_f - self.pulse_r.t_f) > 1e-9 * self.pulse_e.t_f:
            raise ParameterError("both pulses must share the same duration")

    @classmethod
    def from_params(cls, params: ProtocolParams, **kwargs) -> "SimConfig":
        """Configuration driven by the ideal pulses of ``params``."""
        pe, pr = ideal_pulses(params)
        return cls(pe, pr, params.tau_rt_e, params.tau_rt_r, **kwargs)

    @property
    def t_f(self) -> float:
        return self.pulse_e.t_f

    def tau_min(self) -> float:
        """Shortest leakage time ``tau_rt / max|t|^2`` reached by either pulse."""
        taus = []
        for p, rt in ((self.pulse_e, self.tau_rt_e), (self.pulse_r, self.tau_rt_r)):
            peak = p.peak()
            if peak > 0:
                taus.append(rt / peak**2)
        return min(taus) if taus else self.t_f

    def step(self) -> float:
        return self.tau_min() / 1000.0 if self.dt_int is None else float(self.dt_int)


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FieldTrajectory:
    """Field amplitudes on the integration grid.

    The grid is uniform within each interval between pulse breakpoints.
    ``|A|**2`` and ``|F|**2`` are photon fluxes (1/ns).
    """

    t: np.ndarray
    G: np.ndarray
    B: np.ndarray
    A: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        for name in ("t", "G", "B", "A", "F"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


@dataclass(frozen=True)
class TransferOutcome:
    """Efficiency, final phase and energy ledger of one run.

    Ledger entries are photon numbers.  ``dissipated`` is the remainder
    ``|G0|^2 - residual_emitter - received - reflected``.
    """

    eta: float
    phi_f: float
    residual_emitter: float
    received: float
    reflected: float
    dissipated: float
    warnings: tuple = field(default=())

    def ledger(self) -> dict:
        return {
            "residual_emitter": self.residual_emitter,
            "received": self.received,
            "reflected": self.reflected,
            "dissipated": self.dissipated,
        }


def time_grid(t_f: float, breakpoints, dt: float):
    """Piecewise-uniform grid on ``[0, t_f]`` with nodes on every breakpoint."""
    edges = [0.0] + [b for b in sorted(breakpoints) if 0.0 < b < t_f] + [t_f]
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / dt - 1e-9)))
        parts.append(np.linspace(a, b, n + 1)[:-1])
    parts.append(np.array([t_f]))
    return np.concatenate(parts)


def _sample(schedule, t):
    if callable(schedule):
        return np.broadcast_to(np.asarray(schedule(t), dtype=float), t.shape)
    return np.full(t.shape, float(schedule))


def _coefficients(pulse, tau_rt, detuning, T1, extra, t):
    c = np.asarray(pulse(t), dtype=complex)
    if not np.all(np.isfinite(c)):
        raise ParameterError("pulse evaluates to NaN or inf")
    scaled = c / math.sqrt(tau_rt)
    kappa = np.abs(scaled) ** 2
    gamma = (0.0 if math.isinf(T1) else 1.0 / T1) + _sample(extra, t)
    diag = -1j * _sample(detuning, t) - 0.5 * (kappa + gamma)
    return scaled, diag


def prepare(config: SimConfig):
    """Grid and pre-sampled coefficients shared by the integrators."""
    dt = config.step()
    tau_min = config.tau_min()
    if dt > tau_min / 100.0 * (1 + 1e-12):
        raise ParameterError(f"dt_int = {dt:g} ns exceeds tau_min/100 = {tau_min / 100:g} ns")
    bps = set(config.pulse_e.breakpoints) | set(config.pulse_r.breakpoints)
    t = time_grid(config.t_f, bps, dt)
    mid = 0.5 * (t[1:] + t[:-1])
    out = {"t": t}
    for tag, pulse, rt, det, T1, extra in (
        ("e", config.pulse_e, config.tau_rt_e, config.detuning_e, config.T1_e, config.extra_decay_e),
        ("r", config.pulse_r, config.tau_rt_r, config.detuning_r, config.T1_r, config.extra_decay_r),
    ):
        out[f"c{tag}_n"], out[f"a{tag}_n"] = _coefficients(pulse, rt, det, T1, extra, t)
        out[f"c{tag}_m"], out[f"a{tag}_m"] = _coefficients(pulse, rt, det, T1, extra, mid)
    return out


def _outcome(config, G, B, reflected, warnings=()):
    norm = abs(config.G0) ** 2
    residual = abs(G[-1]) ** 2
    received = abs(B[-1]) ** 2
    phi = float(np.angle(B[-1] / config.G0)) if received > 0 else 0.0
    return TransferOutcome(
        eta=float(received / norm),
        phi_f=phi,
        residual_emitter=float(residual),
        received=float(received),
        reflected=float(reflected),
        dissipated=float(norm + abs(config.B0) ** 2 - residual - received - reflected),
        warnings=tuple(warnings),
    )


def simulate(config: SimConfig):
    """Integrate the field equations with fixed-step RK4.

    Returns ``(FieldTrajectory, TransferOutcome)``.  The efficiency is
    ``|B(t_f)|^2 / |G0|^2``; the final phase is reported separately.
    """
    c = prepare(config)
    s = math.sqrt(config.eta_tl)
    G, B, Q = _kernels.rk4_transfer(
        c["t"], c["ce_n"], c["ce_m"], c["cr_n"], c["cr_m"],
        c["ae_n"], c["ae_m"], c["ar_n"], c["ar_m"],
        s, complex(config.G0), complex(config.B0),
    )
    A = s * c["ce_n"] * G
    F = np.conj(c["cr_n"]) * B - A
    traj = FieldTrajectory(c["t"], G, B, A, F)
    return traj, _outcome(config, G, B, Q[-1])


def analytic_inefficiency(tau_e: float, tau_r: float, t_m: float, t_f: float):
    """Closed-form inefficiency predictions ``(two_term, optimized)``.

    ``two_term`` holds for any mid-time; ``optimized`` assumes the optimal
    mid-time and equals ``exp(-t_f / (tau_e + tau_r))``.
    """
    for v in (tau_e, tau_r, t_m, t_f):
        if not v > 0:
            raise ParameterError("times must be positive")
    two_term = (tau_r * math.exp(-t_m / tau_r) + tau_e * math.exp(-(t_f - t_m) / tau_e)) / (tau_e + tau_r)
    optimized = math.exp(-t_f / (tau_e + tau_r))
    return two_term, optimized


def dissipation_scaling(eta_design, eta_tl, T1_e, T1_r, t_f) -> float:
    """Efficiency with line loss and resonator energy relaxation folded in."""
    return float(eta_design * eta_tl * np.exp(-t_f / (2.0 * T1_e)) * np.exp(-t_f / (2.0 * T1_r)))


def detuning_coefficient(eta_design: float) -> float:
    """Coefficient ``c`` in ``delta_eta = -c (dw tau)^2`` for a constant detuning."""
    if not 0.0 < eta_design < 1.0:
        raise ParameterError("eta_design must lie in (0, 1)")
    ine = 1.0 - eta_design
    L = math.log(ine)
    return 2.0 - ine * (2.0 - 2.0 * L + L * L)
