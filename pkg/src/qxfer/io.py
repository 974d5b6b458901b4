"""Table and JSON exports with round-trip float formatting."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

__all__ = [
    "fmt",
    "csv_text",
    "json_text",
    "pulses_csv",
    "trajectory_csv",
    "outcome_json",
    "coupler_table_csv",
    "delay_sweep_csv",
]


def fmt(v) -> str:
    """Shortest round-trip text for numbers; other values as ``str``."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns, rows) -> str:
    """RFC-4180 CSV (CRLF line ends) with one header row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        if isinstance(r, dict):
            r = [r.get(c) for c in columns]
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def json_text(obj) -> str:
    """Deterministic JSON: sorted keys, non-finite floats as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def pulses_csv(pulse_e, pulse_r, t=None) -> str:
    """Columns ``t_ns, re_te, im_te, re_tr, im_tr``."""
    t = pulse_e.grid if t is None else np.asarray(t, dtype=float)
    te, tr = pulse_e(t), pulse_r(t)
    rows = zip(t, te.real, te.imag, tr.real, tr.imag)
    return csv_text(("t_ns", "re_te", "im_te", "re_tr", "im_tr"), rows)


def trajectory_csv(traj) -> str:
    """Columns ``t_ns, re_G, im_G, re_B, im_B, re_A, im_A, re_F, im_F``."""
    cols = ("t_ns", "re_G", "im_G", "re_B", "im_B", "re_A", "im_A", "re_F", "im_F")
    rows = zip(traj.t, traj.G.real, traj.G.imag, traj.B.real, traj.B.imag,
               traj.A.real, traj.A.imag, traj.F.real, traj.F.imag)
    return csv_text(cols, rows)


def outcome_json(outcome, extra=None) -> str:
    obj = {"eta": outcome.eta, "phi_f": outcome.phi_f, "ledger": outcome.ledger(),
           "warnings": list(outcome.warnings)}
    if extra:
        obj.update(extra)
    return json_text(obj)


def coupler_table_csv(points) -> str:
    """Columns ``M_pH, abs_t, arg_t, arg_rin, delta_omega_MHz``."""
    rows = (
        (p.M, abs(p.t), float(np.angle(p.t)), float(np.angle(p.r_in)), p.delta_omega / (2 * math.pi) * 1e3)
        for p in points
    )
    return csv_text(("M_pH", "abs_t", "arg_t", "arg_rin", "delta_omega_MHz"), rows)


def delay_sweep_csv(rows) -> str:
    """Columns ``td_over_tau, phi_rad, one_minus_eta``."""
    return csv_text(("td_over_tau", "phi_rad", "one_minus_eta"), rows)
