"""Experiment harness: scenarios, parameter sweeps, Monte-Carlo averaging and fits."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .coupler import CouplerParams, schedule
from .dynamics import SimConfig, round_trip_time, simulate
from .errors import ConfigError, ParameterError, QxferError
from .pulse import DeformationSpec, apply_deformations, design_protocol, interpolated_noise_variance
from .reflections import DelayConfig, simulate_with_delay

__all__ = [
    "Scenario",
    "Axis",
    "SweepSpec",
    "SweepResult",
    "FitResult",
    "build_scenario",
    "run_scenario",
    "run_sweep",
    "fit_quadratic",
    "noise_oracle",
    "point_seed",
    "coupler_from_dict",
    "RESULT_COLUMNS",
]

RESULT_COLUMNS = (
    "eta", "one_minus_eta", "phi_f", "residual_emitter", "received",
    "reflected", "dissipated", "t_f_ns", "error",
)

_COUPLER_KEYS = {
    "R_res_ohm": "R_res", "R_tl_ohm": "R_tl", "L1g_pH": "L1g", "L2g_pH": "L2g",
    "Mg_pH": "Mg", "Le_pH": "Le", "Ic1_uA": "Ic1", "Ic2_uA": "Ic2",
}


def coupler_from_dict(obj) -> CouplerParams:
    """Coupler constants from unit-named keys, or the string ``"reference"``."""
    if obj == "reference":
        return CouplerParams.reference()
    if not isinstance(obj, dict):
        raise ConfigError("coupler must be 'reference' or an object")
    obj = dict(obj)
    unknown = set(obj) - set(_COUPLER_KEYS) - {"freq_GHz", "d_over_lambda"}
    if unknown:
        raise ConfigError(f"unknown coupler keys: {sorted(unknown)}")
    kw = {_COUPLER_KEYS[k]: float(v) for k, v in obj.items() if k in _COUPLER_KEYS}
    try:
        omega = 2.0 * math.pi * float(obj["freq_GHz"])
        base = {k: kw.pop(k) for k in ("R_res", "R_tl", "L1g", "L2g", "Mg")}
    except KeyError as exc:
        raise ConfigError(f"coupler is missing {exc.args[0]!r}") from None
    if "d_over_lambda" in obj:
        if "Le" in kw:
            raise ConfigError("give either Le_pH or d_over_lambda, not both")
        return CouplerParams.from_tap(omega0=omega, d_over_lambda=float(obj["d_over_lambda"]), **base, **kw)
    if "Le" not in kw:
        raise ConfigError("coupler is missing 'Le_pH' or 'd_over_lambda'")
    return CouplerParams(omega0=omega, **base, **kw)


@dataclass(frozen=True)
class Scenario:
    """A single transfer experiment described by plain, unit-named values.

    Relative deviations (``*_rel``) are fractions of the design value;
    ``dt_m_*_ns`` shift the mid-times; ``dw_tau_*`` is the constant detuning
    times the design leakage time; ``td_over_tau`` switches to the
    delay-line model.  ``coupler`` names circuit constants (or
    ``"reference"``); the pulses are then converted through the circuit
    with the given detuning ``compensation``.
    """

    eta_design: float = 0.999
    t_max_e: float = 0.05
    t_max_r: float = 0.05
    phase_e_rad: float = 0.0
    phase_r_rad: float = 0.0
    freq_GHz: float = 6.0
    d_t_max_e_rel: float = 0.0
    d_t_max_r_rel: float = 0.0
    d_tau_e_rel: float = 0.0
    d_tau_r_rel: float = 0.0
    dt_m_e_ns: float = 0.0
    dt_m_r_ns: float = 0.0
    alpha_e: float = 0.0
    alpha_r: float = 0.0
    sigma_ns: float = 0.0
    noise_kind: str = "none"
    noise_a: float = 0.0
    noise_dt_ns: float = 1.0
    dw_tau_e: float = 0.0
    dw_tau_r: float = 0.0
    eta_tl: float = 1.0
    T1_e_ns: Optional[float] = None
    T1_r_ns: Optional[float] = None
    td_over_tau: Optional[float] = None
    phi_rad: float = 0.0
    coupler: object = None
    compensation: float = 0.0
    dt_ns: Optional[float] = None

    @classmethod
    def from_dict(cls, obj: dict) -> "Scenario":
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return asdict(self)

    def is_noisy(self) -> bool:
        return self.noise_kind != "none" and self.noise_a > 0


def build_scenario(scn: Scenario, seed: int = 0):
    """Turn a scenario into ``(SimConfig, DelayConfig | None, ProtocolParams)``."""
    tau_rt = round_trip_time(scn.freq_GHz)
    te = scn.t_max_e * np.exp(1j * scn.phase_e_rad)
    tr = scn.t_max_r * np.exp(1j * scn.phase_r_rad)
    params = design_protocol(te, tr, tau_rt, scn.eta_design)
    spec = DeformationSpec(
        t_max_e=te * (1 + scn.d_t_max_e_rel) if scn.d_t_max_e_rel else None,
        t_max_r=tr * (1 + scn.d_t_max_r_rel) if scn.d_t_max_r_rel else None,
        tau_e=params.tau_e * (1 + scn.d_tau_e_rel) if scn.d_tau_e_rel else None,
        tau_r=params.tau_r * (1 + scn.d_tau_r_rel) if scn.d_tau_r_rel else None,
        t_m_e=params.t_m_e + scn.dt_m_e_ns if scn.dt_m_e_ns else None,
        t_m_r=params.t_m_r + scn.dt_m_r_ns if scn.dt_m_r_ns else None,
        alpha_e=scn.alpha_e,
        alpha_r=scn.alpha_r,
        sigma=scn.sigma_ns,
        noise=scn.noise_kind,
        noise_a=scn.noise_a,
        noise_dt=scn.noise_dt_ns,
        seed=int(seed),
    )
    pe, pr = apply_deformations(params, spec)
    det_e = scn.dw_tau_e / params.tau_e
    det_r = scn.dw_tau_r / params.tau_r
    if scn.coupler is not None:
        cp = coupler_from_dict(scn.coupler)
        pe, sched_e = schedule(cp, pe, scn.compensation)
        pr, sched_r = schedule(cp, pr, scn.compensation)
        det_e = _plus(sched_e, det_e)
        det_r = _plus(sched_r, det_r)
    cfg = SimConfig(
        pe, pr, params.tau_rt_e, params.tau_rt_r,
        detuning_e=det_e, detuning_r=det_r,
        T1_e=math.inf if scn.T1_e_ns is None else float(scn.T1_e_ns),
        T1_r=math.inf if scn.T1_r_ns is None else float(scn.T1_r_ns),
        eta_tl=scn.eta_tl,
        dt_int=scn.dt_ns,
    )
    delay = None
    if scn.td_over_tau is not None:
        delay = DelayConfig(scn.td_over_tau * min(params.tau_e, params.tau_r), scn.phi_rad)
    return cfg, delay, params


def _plus(f, c):
    if c == 0.0:
        return f
    return lambda t: f(t) + c


def run_scenario(scn: Scenario, seed: int = 0) -> dict:
    """Simulate one scenario; numeric failures are reported in ``error``."""
    row = dict.fromkeys(RESULT_COLUMNS, math.nan)
    row["error"] = ""
    try:
        cfg, delay, params = build_scenario(scn, seed)
        row["t_f_ns"] = params.t_f
        if delay is None:
            _, out = simulate(cfg)
        else:
            _, out = simulate_with_delay(cfg, delay)
    except (QxferError, FloatingPointError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row.update(
        eta=out.eta, one_minus_eta=1.0 - out.eta, phi_f=out.phi_f,
        residual_emitter=out.residual_emitter, received=out.received,
        reflected=out.reflected, dissipated=out.dissipated,
    )
    if out.warnings:
        row["error"] = "warning: " + "; ".join(out.warnings)
    return row


@dataclass(frozen=True)
class Axis:
    """Sweep axis.  ``fields`` are set together to ``coefficient * value``."""

    name: str
    values: tuple
    fields: tuple = ()
    coefficients: tuple = ()

    def __post_init__(self):
        flds = tuple(self.fields) or (self.name,)
        coefs = tuple(float(c) for c in self.coefficients) or (1.0,) * len(flds)
        if len(coefs) != len(flds):
            raise ConfigError(f"axis {self.name!r}: coefficients and fields differ in length")
        object.__setattr__(self, "fields", flds)
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) < 2:
            raise ConfigError(f"axis {self.name!r} needs at least two values")
        names = {f.name for f in fields(Scenario)}
        for f in flds:
            if f not in names:
                raise ConfigError(f"axis {self.name!r}: unknown scenario field {f!r}")


@dataclass(frozen=True)
class SweepSpec:
    """Grid of scenarios: Cartesian product of the axes over ``base``.

    ``overrides`` maps a point index to extra scenario fields.
    """

    base: Scenario
    axes: tuple
    master_seed: int = 0
    realizations: int = 1
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.axes) < 1:
            raise ConfigError("a sweep needs at least one axis")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        object.__setattr__(self, "axes", tuple(self.axes))

    def points(self):
        """``(index, coordinates, Scenario)`` in grid order."""
        for idx, combo in enumerate(product(*(a.values for a in self.axes))):
            updates = {}
            for axis, v in zip(self.axes, combo):
                for f, c in zip(axis.fields, axis.coefficients):
                    updates[f] = v if isinstance(v, str) or v is None else c * v
            updates.update(self.overrides.get(idx, {}))
            yield idx, dict(zip((a.name for a in self.axes), combo)), replace(self.base, **updates)


def point_seed(master_seed: int, point: int, realization: int) -> int:
    """64-bit seed mixed from the master seed and the point/realization indices."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(point), int(realization)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SweepResult:
    """Rows in grid order (one per point and realization)."""

    columns: tuple
    rows: list

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def summary(self, response: str = "eta"):
        """Per-point mean and standard error over realizations, in grid order."""
        groups = {}
        for r in self.rows:
            groups.setdefault(r["point"], []).append(r)
        out = []
        for point in sorted(groups):
            rs = groups[point]
            vals = np.array([r[response] for r in rs], dtype=float)
            sem = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
            entry = {k: rs[0][k] for k in self.columns if k not in RESULT_COLUMNS + ("realization", "seed")}
            entry.update(mean=float(vals.mean()), sem=sem, n=int(vals.size))
            out.append(entry)
        return out


def _default_threads(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("QXFER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"QXFER_THREADS={env!r} is not an integer") from None
    return 1


def run_sweep(spec: SweepSpec, threads: Optional[int] = None) -> SweepResult:
    """Evaluate every grid point; output order never depends on scheduling."""
    jobs = []
    for idx, coords, scn in spec.points():
        reps = spec.realizations if scn.is_noisy() else 1
        for rep in range(reps):
            jobs.append((idx, coords, rep, scn, point_seed(spec.master_seed, idx, rep)))

    def work(job):
        idx, coords, rep, scn, seed = job
        row = {"point": idx, **coords, "realization": rep, "seed": seed}
        row.update(run_scenario(scn, seed))
        return row

    n = _default_threads(threads)
    if n == 1:
        rows = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(work, jobs))
    columns = ("point",) + tuple(a.name for a in spec.axes) + ("realization", "seed") + RESULT_COLUMNS
    return SweepResult(columns, rows)


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of a pure quadratic form.

    ``terms`` names the monomials (``"x^2"`` or ``"x*y"``) in the same order
    as ``coefficients`` and ``stderr``.
    """

    terms: tuple
    coefficients: np.ndarray
    stderr: np.ndarray
    residual_norm: float
    n_points: int
    model: str

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "terms": list(self.terms),
            "coefficients": [float(c) for c in self.coefficients],
            "stderr": [float(s) for s in self.stderr],
            "residual_norm": float(self.residual_norm),
            "n_points": self.n_points,
        }

    def __getitem__(self, term):
        return float(self.coefficients[self.terms.index(term)])


def fit_quadratic(x, y, names: Sequence[str] = None, baseline: float = 0.0) -> FitResult:
    """Fit ``y - baseline = sum c_i x_i^2 + sum_{i<j} c_ij x_i x_j``.

    ``x`` is ``(n,)`` or ``(n, k)``; no linear or constant terms are fitted.
    """
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float) - baseline
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))
    if len(names) != k:
        raise ParameterError("one name per column is required")
    cols, terms = [], []
    for i in range(k):
        cols.append(X[:, i] ** 2)
        terms.append(f"{names[i]}^2")
    for i in range(k):
        for j in range(i + 1, k):
            cols.append(X[:, i] * X[:, j])
            terms.append(f"{names[i]}*{names[j]}")
    D = np.column_stack(cols)
    if n < max(D.shape[1], 2 if k == 1 else 6):
        raise ParameterError("too few points for the quadratic model")
    for i in range(k):
        if not (np.any(X[:, i] > 0) and np.any(X[:, i] < 0)):
            raise ParameterError(f"axis {names[i]!r} must take both signs")
    coef, _, rank, _ = np.linalg.lstsq(D, y, rcond=None)
    if rank < D.shape[1]:
        raise ParameterError("design matrix is rank deficient")
    resid = y - D @ coef
    dof = n - D.shape[1]
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(D.T @ D)
    model = " + ".join(f"c{i}*{t}" for i, t in enumerate(terms))
    return FitResult(tuple(terms), coef, np.sqrt(np.diag(cov)), float(np.linalg.norm(resid)), n, model)


def noise_oracle(config: SimConfig, kind: str, a: float, xi_var: Optional[float] = None) -> float:
    """Efficiency of the noise-averaged, deterministic equations.

    Noise is replaced by extra leakage in the diagonal terms only:
    ``kappa * a^2 xi2`` (multiplicative) or ``a^2 xi2 |t_max|^2 / tau_rt``
    (additive), with ``xi2`` the mean square of the interpolated noise.
    """
    if xi_var is None:
        xi_var = interpolated_noise_variance()
    s = a * a * xi_var
    if kind == "none" or s == 0.0:
        return simulate(config)[1].eta
    pe, pr = config.pulse_e, config.pulse_r
    if kind == "multiplicative":
        ee = lambda t: s * np.abs(pe(t)) ** 2 / config.tau_rt_e  # noqa: E731
        er = lambda t: s * np.abs(pr(t)) ** 2 / config.tau_rt_r  # noqa: E731
    elif kind == "additive":
        ee = s * pe.peak() ** 2 / config.tau_rt_e
        er = s * pr.peak() ** 2 / config.tau_rt_r
    else:
        raise ParameterError(f"unknown noise kind {kind!r}")
    return simulate(replace(config, extra_decay_e=ee, extra_decay_r=er))[1].eta
