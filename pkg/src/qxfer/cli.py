"""Command-line front end.

Every command reads one JSON manifest (``--config``) and writes its outputs
into a directory (``--out``).  Outputs are staged in a temporary directory
and moved into place only after the command succeeded.

Exit codes: 0 success, 2 invalid configuration, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import shutil
import sys
import tempfile
from importlib import resources

import numpy as np

from . import io as qio
from .coupler import amplitudes, invert_M
from .errors import (
    ConfigError, CutoffError, DomainError, ParameterError, RangeError, SingularConfigurationError,
)
from .lab import Axis, Scenario, SweepSpec, build_scenario, coupler_from_dict, fit_quadratic, run_sweep
from .quantum import Channel, FockVector, apply_channel, process_fidelity, state_fidelity
from .dynamics import simulate
from .reflections import simulate_with_delay

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _ConfigFailure(Exception):
    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


class _NumericFailure(Exception):
    pass


def _recipe_path(name: str):
    ref = resources.files("qxfer") / "recipes" / name
    if not ref.is_file():
        ref = resources.files("qxfer") / "recipes" / f"{name}.json"
    return ref


def list_recipes():
    return sorted(p.name[:-5] for p in (resources.files("qxfer") / "recipes").iterdir() if p.name.endswith(".json"))


def _load(path: str):
    """Return ``(manifest, text)``; bundled recipes may be given by name."""
    if not os.path.exists(path):
        ref = _recipe_path(path)
        if not ref.is_file():
            raise _ConfigFailure(f"cannot read config {path!r}")
        text = ref.read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _ConfigFailure(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(obj, dict):
        raise _ConfigFailure("manifest must be a JSON object", line=1)
    return obj, text


def _line_of(text: str, key):
    if not key:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(str(key)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _check_manifest(obj, kind):
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise _ConfigFailure(f"unsupported schema_version {version!r}", key="schema_version")
    got = obj.get("kind")
    if got != kind:
        raise _ConfigFailure(f"manifest kind is {got!r}, expected {kind!r}", key="kind")


def _key_in(exc):
    m = re.search(r"'([A-Za-z_0-9]+)'", str(exc))
    return m.group(1) if m else None


def _scenario(obj, key):
    raw = obj.get(key, {})
    if not isinstance(raw, dict):
        raise _ConfigFailure(f"{key!r} must be an object", key=key)
    try:
        return Scenario.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise _ConfigFailure(str(exc), key=_key_in(exc) or key) from None


def _finite(outcome):
    vals = (outcome.eta, outcome.residual_emitter, outcome.received, outcome.reflected)
    if not all(math.isfinite(v) for v in vals):
        raise _NumericFailure("integration produced non-finite values")


# --- commands -------------------------------------------------------------

def cmd_simulate(obj, args, text):
    _check_manifest(obj, "simulate")
    scn = _scenario(obj, "scenario")
    seed = args.seed if args.seed is not None else int(obj.get("seed", 0))
    try:
        cfg, delay, params = build_scenario(scn, seed)
    except (ParameterError, ConfigError, DomainError) as exc:
        raise _ConfigFailure(str(exc), key=_key_in(exc)) from None
    traj, out = simulate(cfg) if delay is None else simulate_with_delay(cfg, delay)
    _finite(out)
    extra = {"t_f_ns": params.t_f, "tau_e_ns": params.tau_e, "tau_r_ns": params.tau_r,
             "t_m_ns": params.t_m_e, "seed": seed}
    return {
        "outcome.json": qio.outcome_json(out, extra),
        "trajectory.csv": qio.trajectory_csv(traj),
        "pulses.csv": qio.pulses_csv(cfg.pulse_e, cfg.pulse_r),
    }


def _axes(obj):
    raw = obj.get("axes")
    if not isinstance(raw, list) or not raw:
        raise _ConfigFailure("'axes' must be a non-empty list", key="axes")
    axes = []
    for a in raw:
        try:
            axes.append(Axis(a["name"], a["values"], tuple(a.get("fields", ())), tuple(a.get("coefficients", ()))))
        except KeyError as exc:
            raise _ConfigFailure(f"axis is missing {exc.args[0]!r}", key="axes") from None
        except (TypeError, ValueError) as exc:
            raise _ConfigFailure(str(exc), key="axes") from None
    return axes


def cmd_sweep(obj, args, text):
    _check_manifest(obj, "sweep")
    base = _scenario(obj, "base")
    axes = _axes(obj)
    seed = args.seed if args.seed is not None else int(obj.get("master_seed", 0))
    overrides = {int(k): v for k, v in obj.get("overrides", {}).items()}
    try:
        spec = SweepSpec(base, axes, seed, int(obj.get("realizations", 1)), overrides)
        for _, _, scn in spec.points():
            pass
    except (TypeError, ValueError) as exc:
        raise _ConfigFailure(str(exc), key=_key_in(exc)) from None
    result = run_sweep(spec, threads=args.threads)
    files = {"sweep.csv": qio.csv_text(result.columns, result.rows)}
    summary = result.summary("one_minus_eta")
    if summary:
        cols = tuple(summary[0].keys())
        files["summary.csv"] = qio.csv_text(cols, summary)
    if any(r["error"] and not r["error"].startswith("warning") for r in result.rows):
        failed = [r for r in result.rows if r["error"] and not r["error"].startswith("warning")]
        if len(failed) == len(result.rows):
            raise _NumericFailure(f"every sweep point failed, first: {failed[0]['error']}")
    names = [a.name for a in axes]
    if {"td_over_tau", "phi_rad"} <= set(names):
        files["reflections.csv"] = qio.delay_sweep_csv(
            (r["td_over_tau"], r["phi_rad"], r["one_minus_eta"]) for r in result.rows
        )
    fit = obj.get("fit")
    if fit:
        fit_axes = fit.get("axes", names)
        response = fit.get("response", "one_minus_eta")
        rows = [r for r in summary if all(math.isfinite(float(r[n])) for n in fit_axes)]
        x = np.array([[float(r[n]) for n in fit_axes] for r in rows])
        y = np.array([r["mean"] for r in rows]) if response == "one_minus_eta" else None
        if y is None:
            raise _ConfigFailure("fit response must be 'one_minus_eta'", key="fit")
        origin = [r["mean"] for r in rows if all(float(r[n]) == 0.0 for n in fit_axes)]
        baseline = origin[0] if origin else 0.0
        res = fit_quadratic(x, y, fit_axes, baseline=baseline)
        files["fit.json"] = qio.json_text({**res.as_dict(), "baseline": baseline})
    return files


def _parse_grid(spec):
    parts = spec.split(":")
    if len(parts) != 3:
        raise _ConfigFailure("--M-grid must be start:stop:count")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise _ConfigFailure("--M-grid must be start:stop:count") from None
    if n < 2:
        raise _ConfigFailure("--M-grid needs at least two points")
    return np.linspace(a, b, n)


def cmd_coupler(obj, args, text):
    _check_manifest(obj, "coupler")
    try:
        cp = coupler_from_dict(obj.get("coupler", "reference"))
    except (ConfigError, ParameterError, DomainError) as exc:
        raise _ConfigFailure(str(exc), key=_key_in(exc) or "coupler") from None
    if args.M_grid:
        grid = _parse_grid(args.M_grid)
    elif "M_pH" in obj:
        grid = np.asarray(obj["M_pH"], dtype=float)
    elif "t_abs_max" in obj:
        n = int(obj.get("points", 101))
        M_top = invert_M(cp, float(obj["t_abs_max"]))
        grid = np.linspace(0.0, M_top, n)
    else:
        raise _ConfigFailure("give 'M_pH', 't_abs_max' or --M-grid", key="kind")
    points = [amplitudes(cp, float(M)) for M in grid]
    return {"coupler.csv": qio.coupler_table_csv(points)}


def cmd_fidelity(obj, args, text):
    _check_manifest(obj, "fidelity")
    try:
        ch = Channel(float(obj["eta"]), float(obj.get("phi_f", 0.0)))
        amps = obj.get("state", [0.0, 1.0])
        psi = FockVector([complex(*a) if isinstance(a, list) else complex(a) for a in amps], normalize=True)
    except KeyError as exc:
        raise _ConfigFailure(f"missing {exc.args[0]!r}", key=exc.args[0]) from None
    except (TypeError, ValueError) as exc:
        raise _ConfigFailure(str(exc), key="state") from None
    rho = apply_channel(psi, ch)
    f_chi, f_chi_raw = process_fidelity(ch)
    out = {"state_fidelity": state_fidelity(psi, rho), "process_fidelity": f_chi,
           "process_fidelity_uncorrected": f_chi_raw, "rho": rho.to_json()}
    return {"fidelity.json": qio.json_text(out)}


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "coupler": cmd_coupler, "fidelity": cmd_fidelity}


def _write_atomically(out_dir, files):
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".qxfer-", dir=parent)
    try:
        for name, content in files.items():
            with open(os.path.join(stage, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
        os.makedirs(out_dir, exist_ok=True)
        for name in files:
            os.replace(os.path.join(stage, name), os.path.join(out_dir, name))
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def build_parser():
    p = argparse.ArgumentParser(prog="qxfer", description="State-transfer simulator with tunable couplers.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "run one transfer and write trajectory, pulses and outcome"),
        ("sweep", "run a parameter sweep and write the result table"),
        ("coupler", "tabulate coupler scattering data versus mutual inductance"),
        ("fidelity", "quantum fidelities for a given efficiency and phase"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="JSON manifest or bundled recipe name")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--seed", type=int, default=None, help="override the manifest seed")
        s.add_argument("--threads", type=int, default=None, help="worker threads (default: $QXFER_THREADS or 1)")
        if name == "coupler":
            s.add_argument("--M-grid", dest="M_grid", default=None, help="start:stop:count in pH")
    sub.add_parser("recipes", help="list bundled recipes")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "recipes":
        print("\n".join(list_recipes()))
        return EXIT_OK
    text = ""
    try:
        obj, text = _load(args.config)
        files = COMMANDS[args.command](obj, args, text)
    except _ConfigFailure as exc:
        line = exc.line or _line_of(text, exc.key)
        where = f"{args.config}:{line}: " if line else f"{args.config}: "
        print(f"error: {where}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ParameterError, DomainError, CutoffError) as exc:
        line = _line_of(text, _key_in(exc))
        where = f"{args.config}:{line}: " if line else f"{args.config}: "
        print(f"error: {where}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (_NumericFailure, SingularConfigurationError, RangeError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write_atomically(args.out, files)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
