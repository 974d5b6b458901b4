"""Transmission-amplitude pulse shapes for the two tunable couplers.

All times are in ns.  Transmission amplitudes are the dimensionless,
direction-independent effective amplitudes; leakage rates follow as
``kappa = |t|**2 / tau_rt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, ParameterError

__all__ = [
    "DEFAULT_GRID_POINTS",
    "ProtocolParams",
    "PulseShape",
    "SampledPulse",
    "DeformationSpec",
    "NoiseTrace",
    "design_protocol",
    "eval_ideal",
    "on_off_ratios",
    "ideal_pulses",
    "apply_deformations",
    "generate_noise_trace",
    "interpolated_noise_variance",
    "gaussian_filter",
    "single_coupler_bounds",
    "couplings_from_waveform",
]

#: Number of intervals of the default uniform sampling grid on [0, t_f].
DEFAULT_GRID_POINTS = 2**14

_T_MAX_LIMIT = 0.2


@dataclass(frozen=True)
class ProtocolParams:
    """Design parameters of the two-coupler transfer protocol.

    The buildup/leakage times are derived, ``tau = tau_rt / |t_max|**2``.
    """

    t_max_e: complex
    t_max_r: complex
    tau_rt_e: float
    tau_rt_r: float
    t_m_e: float
    t_m_r: float
    t_f: float
    eta_design: float

    def __post_init__(self):
        for name in ("t_max_e", "t_max_r"):
            mag = abs(getattr(self, name))
            if not 0.0 < mag <= _T_MAX_LIMIT:
                raise ParameterError(f"|{name}| = {mag:g} outside (0, {_T_MAX_LIMIT}]")
        if not (self.tau_rt_e > 0 and self.tau_rt_r > 0):
            raise ParameterError("round-trip times must be positive")
        if not 0.0 < self.eta_design < 1.0:
            raise ParameterError(f"eta_design = {self.eta_design!r} outside (0, 1)")
        if not self.t_f > 0:
            raise ParameterError("t_f must be positive")
        for name in ("t_m_e", "t_m_r"):
            if not 0.0 < getattr(self, name) < self.t_f:
                raise ParameterError(f"{name} must lie in (0, t_f)")

    @property
    def tau_e(self) -> float:
        return self.tau_rt_e / abs(self.t_max_e) ** 2

    @property
    def tau_r(self) -> float:
        return self.tau_rt_r / abs(self.t_max_r) ** 2

    @property
    def quality_e(self) -> float:
        """Minimum loaded quality factor of the emitting resonator, pi/|t|^2."""
        return np.pi / abs(self.t_max_e) ** 2

    @property
    def quality_r(self) -> float:
        return np.pi / abs(self.t_max_r) ** 2

    def with_amplitudes(self, t_max_e: complex, t_max_r: complex) -> "ProtocolParams":
        """Same timing, different maximum amplitudes (durations are not rescaled)."""
        return replace(self, t_max_e=t_max_e, t_max_r=t_max_r)


def design_protocol(t_max_e, t_max_r, tau_rt, eta_design) -> ProtocolParams:
    """Build the optimal-duration protocol for a target efficiency.

    ``tau_rt`` is a scalar or an ``(emitter, receiver)`` pair.  The duration
    follows from ``1 - eta = exp(-t_f / (tau_e + tau_r))`` and the mid-time
    from ``t_m / tau_r = (t_f - t_m) / tau_e``.
    """
    if not 0.0 < eta_design < 1.0:
        raise ParameterError(f"eta_design = {eta_design!r} outside (0, 1)")
    for name, val in (("t_max_e", t_max_e), ("t_max_r", t_max_r)):
        if not 0.0 < abs(val) <= _T_MAX_LIMIT:
            raise ParameterError(f"|{name}| = {abs(val):g} outside (0, {_T_MAX_LIMIT}]")
    tau_rt_e, tau_rt_r = np.broadcast_to(np.asarray(tau_rt, dtype=float), (2,))
    tau_e = tau_rt_e / abs(t_max_e) ** 2
    tau_r = tau_rt_r / abs(t_max_r) ** 2
    t_f = -(tau_e + tau_r) * np.log1p(-eta_design)
    t_m = t_f * tau_r / (tau_e + tau_r)
    return ProtocolParams(
        t_max_e=complex(t_max_e),
        t_max_r=complex(t_max_r),
        tau_rt_e=float(tau_rt_e),
        tau_rt_r=float(tau_rt_r),
        t_m_e=float(t_m),
        t_m_r=float(t_m),
        t_f=float(t_f),
        eta_design=float(eta_design),
    )


def _ramp(s, t_max, ratio, tau):
    # s: distance from the mid-time into the varying part (s <= 0 -> at maximum)
    s = np.maximum(s, 0.0)
    return t_max * np.sqrt(ratio) / np.sqrt((1.0 + ratio) * np.exp(s / tau) - 1.0)


def _emitter_shape(t, t_max, tau_e, tau_r, t_m):
    return _ramp(t_m - t, t_max, tau_e / tau_r, tau_r)


def _receiver_shape(t, t_max, tau_e, tau_r, t_m):
    return _ramp(t - t_m, t_max, tau_r / tau_e, tau_e)


def eval_ideal(params: ProtocolParams, t):
    """Ideal coupler amplitudes ``(t_e(t), t_r(t))`` for ``t >= 0``.

    The receiving coupler is switched off after ``t_f``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(~np.isfinite(t)):
        raise DomainError("pulse shapes are defined for 0 <= t")
    te = _emitter_shape(t, params.t_max_e, params.tau_e, params.tau_r, params.t_m_e)
    tr = _receiver_shape(t, params.t_max_r, params.tau_e, params.tau_r, params.t_m_r)
    tr = np.where(t > params.t_f, 0.0, tr)
    return np.asarray(te, dtype=complex), np.asarray(tr, dtype=complex)


def on_off_ratios(params: ProtocolParams):
    """Approximate ON/OFF ratios ``t_max / t(start)`` of the two couplers."""
    ine = 1.0 - params.eta_design
    ratio_e = np.sqrt((1.0 + params.tau_r / params.tau_e) / ine)
    ratio_r = np.sqrt((1.0 + params.tau_e / params.tau_r) / ine)
    return float(ratio_e), float(ratio_r)


class PulseShape:
    """Complex coupler amplitude on ``[0, t_f]``.

    ``func`` must be vectorized over a float array of times.  ``breakpoints``
    lists interior times where the shape has a kink; the integrator aligns
    its steps to them.  Evaluation is exact (``interpolation == "exact"``);
    the uniform sample grid is kept for export and inspection.
    """

    interpolation = "exact"

    def __init__(self, func: Callable, t_f: float, breakpoints=(), n_grid: int = DEFAULT_GRID_POINTS):
        self._func = func
        self.t_f = float(t_f)
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints if 0.0 < b < t_f))
        self.n_grid = int(n_grid)
        self._samples = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(np.isnan(t)):
            raise DomainError("NaN time")
        return np.asarray(self._func(t), dtype=complex)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_f, self.n_grid + 1)

    @property
    def values(self) -> np.ndarray:
        if self._samples is None:
            self._samples = self(self.grid)
        return self._samples

    def peak(self) -> float:
        """Largest sampled magnitude."""
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"{type(self).__name__}(t_f={self.t_f:g}, breakpoints={self.breakpoints})"


class SampledPulse(PulseShape):
    """Pulse stored on a uniform grid and evaluated by cubic-spline interpolation."""

    interpolation = "cubic"

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=complex)
        if grid.ndim != 1 or grid.size < 4 or grid.shape != values.shape:
            raise ParameterError("grid and values must be matching 1-D arrays of length >= 4")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ParameterError("grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ParameterError("grid must be uniform")
        if grid[0] != 0.0:
            raise ParameterError("grid must start at t = 0")
        spline = CubicSpline(grid, values)
        super().__init__(spline, grid[-1], (), grid.size - 1)
        self._grid = grid
        self._samples = values

    @property
    def grid(self) -> np.ndarray:
        return self._grid


def ideal_pulses(params: ProtocolParams, n_grid: int = DEFAULT_GRID_POINTS):
    """Ideal pulse shapes as a ``(PulseShape, PulseShape)`` pair."""
    pe = PulseShape(lambda t: eval_ideal(params, t)[0], params.t_f, (params.t_m_e,), n_grid)
    pr = PulseShape(lambda t: eval_ideal(params, t)[1], params.t_f, (params.t_m_r,), n_grid)
    return pe, pr


@dataclass(frozen=True)
class NoiseTrace:
    """Smooth random function through i.i.d. standard-normal nodes.

    ``variance`` is the time average of ``xi(t)**2`` over ``[0, t_f]``.
    """

    dt_grid: float
    nodes: np.ndarray
    node_values: np.ndarray
    variance: float
    _spline: CubicSpline = field(repr=False, compare=False)

    def __call__(self, t):
        return self._spline(np.asarray(t, dtype=float))


def generate_noise_trace(dt_grid: float, t_f: float, seed) -> NoiseTrace:
    """Natural cubic spline through standard-normal values at ``t = n * dt_grid``.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    if not dt_grid > 0:
        raise ParameterError("dt_grid must be positive")
    n_nodes = int(np.floor(t_f / dt_grid)) + 2
    nodes = dt_grid * np.arange(n_nodes)
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(n_nodes)
    spline = CubicSpline(nodes, values, bc_type="natural")
    fine = np.linspace(0.0, t_f, 16 * (n_nodes - 1) + 1)
    variance = float(np.trapezoid(spline(fine) ** 2, fine) / t_f)
    return NoiseTrace(float(dt_grid), nodes, values, variance, spline)


def interpolated_noise_variance(n_nodes: int = 81, n_sub: int = 400) -> float:
    """Ensemble variance of the spline-interpolated noise, averaged over an interval.

    Computed from the interpolation weights of a natural cubic spline through
    unit-variance white noise, evaluated on an interval far from the ends.
    """
    x = np.arange(n_nodes, dtype=float)
    weights = CubicSpline(x, np.eye(n_nodes), bc_type="natural")
    mid = n_nodes // 2
    s = np.linspace(mid, mid + 1, n_sub + 1)
    var = np.sum(weights(s) ** 2, axis=1)
    return float(np.trapezoid(var, s))


@dataclass(frozen=True)
class DeformationSpec:
    """Pulse-level imperfections.

    ``None`` for an actual-parameter override keeps the design value.
    Deformations compose in the fixed order: parameters, warp, noise, filter.
    """

    t_max_e: Optional[complex] = None
    t_max_r: Optional[complex] = None
    tau_e: Optional[float] = None
    tau_r: Optional[float] = None
    t_m_e: Optional[float] = None
    t_m_r: Optional[float] = None
    alpha_e: float = 0.0
    alpha_r: float = 0.0
    sigma: float = 0.0
    noise: str = "none"
    noise_a: float = 0.0
    noise_dt: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ParameterError("filter width sigma must be >= 0")
        if self.noise_a < 0:
            raise ParameterError("noise amplitude must be >= 0")
        if not self.noise_dt > 0:
            raise ParameterError("noise grid step must be positive")
        if self.noise not in ("none", "multiplicative", "additive"):
            raise ParameterError(f"unknown noise kind {self.noise!r}")


def _warp(f, t_max, alpha):
    if alpha == 0.0:
        return f
    return lambda t: (lambda v: v * (1.0 + alpha * (v - t_max) / t_max))(f(t))


def _add_noise(f, t_max, kind, a, xi):
    if kind == "none" or a == 0.0:
        return f
    if kind == "multiplicative":
        return lambda t: f(t) * (1.0 + a * xi(t))
    return lambda t: f(t) + a * t_max * xi(t)


def gaussian_filter(grid, values, sigma: float):
    """Normalized Gaussian convolution of uniformly sampled values.

    Values are continued as constants beyond both ends; the kernel is cut at
    six standard deviations and normalized on the grid so constants pass
    through unchanged.
    """
    values = np.asarray(values)
    if sigma == 0.0:
        return values.copy()
    h = grid[1] - grid[0]
    half = int(np.ceil(6.0 * sigma / h))
    offsets = h * np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    padded = np.concatenate([np.full(half, values[0]), values, np.full(half, values[-1])])
    if np.iscomplexobj(padded):
        out = np.convolve(padded.real, kernel, "valid") + 1j * np.convolve(padded.imag, kernel, "valid")
    else:
        out = np.convolve(padded, kernel, "valid")
    return out


def apply_deformations(params: ProtocolParams, spec: DeformationSpec, n_grid: int = DEFAULT_GRID_POINTS):
    """Deformed ``(PulseShape, PulseShape)`` for the emitting and receiving couplers."""
    if spec.sigma > params.t_f / 2:
        raise ParameterError("filter width exceeds t_f/2")
    te_max = params.t_max_e if spec.t_max_e is None else complex(spec.t_max_e)
    tr_max = params.t_max_r if spec.t_max_r is None else complex(spec.t_max_r)
    tau_e = params.tau_e if spec.tau_e is None else float(spec.tau_e)
    tau_r = params.tau_r if spec.tau_r is None else float(spec.tau_r)
    t_m_e = params.t_m_e if spec.t_m_e is None else float(spec.t_m_e)
    t_m_r = params.t_m_r if spec.t_m_r is None else float(spec.t_m_r)
    t_f = params.t_f

    def fe(t):
        return _emitter_shape(t, te_max, tau_e, tau_r, t_m_e).astype(complex)

    def fr(t):
        return np.asarray(_receiver_shape(t, tr_max, tau_e, tau_r, t_m_r), dtype=complex)

    fe = _warp(fe, te_max, spec.alpha_e)
    fr = _warp(fr, tr_max, spec.alpha_r)

    if spec.noise != "none" and spec.noise_a > 0:
        seed_e, seed_r = np.random.SeedSequence(spec.seed).spawn(2)
        xi_e = generate_noise_trace(spec.noise_dt, t_f, seed_e)
        xi_r = generate_noise_trace(spec.noise_dt, t_f, seed_r)
        fe = _add_noise(fe, te_max, spec.noise, spec.noise_a, xi_e)
        fr = _add_noise(fr, tr_max, spec.noise, spec.noise_a, xi_r)

    pe = PulseShape(fe, t_f, (t_m_e,), n_grid)
    pr = PulseShape(fr, t_f, (t_m_r,), n_grid)
    if spec.sigma > 0:
        grid = pe.grid
        pe = SampledPulse(grid, gaussian_filter(grid, pe.values, spec.sigma))
        pr = SampledPulse(grid, gaussian_filter(grid, pr.values, spec.sigma))
    return pe, pr


def single_coupler_bounds(kappa_max: float, eta: float):
    """Shortest duration, ON/OFF ratio and optimal fixed receiver rate with one tunable coupler.

    Returns ``(t_f, on_off_ratio, kappa_r_opt)`` using ``LN = 3 + ln(1/(1-eta))``.
    """
    if not 0.0 < eta < 1.0:
        raise ParameterError("eta must lie in (0, 1)")
    if not kappa_max > 0:
        raise ParameterError("kappa_max must be positive")
    ine = 1.0 - eta
    ln_factor = 3.0 + np.log(1.0 / ine)
    t_f = ln_factor / (kappa_max * ine)
    kappa_r = ine * kappa_max / (1.0 + 1.0 / ln_factor)
    on_off = np.sqrt(ln_factor) / ine
    return float(t_f), float(on_off), float(kappa_r)


def couplings_from_waveform(A, dt: float, G0: float, kappa_e_max: float, kappa_r_max: float):
    """Leakage-rate schedules producing a prescribed real transmitted field.

    ``A`` holds non-negative samples on a uniform grid of step ``dt``
    (``|A|**2`` in photons/ns).  Returns ``(kappa_e, kappa_r, loss_e, loss_r)``
    where the losses are the untransmitted and back-reflected fractions.
    """
    A = np.asarray(A, dtype=float)
    if np.any(A < 0):
        raise ParameterError("A must be non-negative")
    a2 = A**2
    # cumulative transmitted photon number, trapezoid rule
    sent = np.concatenate([[0.0], np.cumsum(0.5 * (a2[1:] + a2[:-1]) * dt)])
    remaining = abs(G0) ** 2 - sent
    received = a2[0] / kappa_r_max + sent

    limit_e = kappa_e_max * remaining
    tol = 1e-12 * max(1.0, float(np.max(a2)))
    bad = np.nonzero(a2 > limit_e + tol)[0]
    if bad.size:
        i = int(bad[0])
        raise ParameterError(f"sample {i}: A^2 exceeds kappa_e_max * remaining emitter energy")
    bad = np.nonzero(a2 > kappa_r_max * received + tol)[0]
    if bad.size:
        i = int(bad[0])
        raise ParameterError(f"sample {i}: A rises faster than the receiver can follow")

    with np.errstate(divide="ignore", invalid="ignore"):
        kappa_e = np.where(a2 > 0, a2 / remaining, 0.0)
        kappa_r = np.where(a2 > 0, a2 / received, 0.0)
    kappa_e = np.minimum(kappa_e, kappa_e_max)
    kappa_r = np.minimum(kappa_r, kappa_r_max)
    loss_e = 1.0 - sent[-1] / abs(G0) ** 2
    loss_r = (a2[0] / kappa_r_max) / abs(G0) ** 2
    return kappa_e, kappa_r, float(loss_e), float(loss_r)
