import csv
import io
import json
import math
import os

import numpy as np
import pytest

from conftest import read_csv, read_json
from qxfer import io as qio
from qxfer.cli import list_recipes, main
from qxfer.quantum import Channel, process_fidelity


# --- formatting ---

def test_fmt_round_trips_doubles():
    rng = np.random.default_rng(1)
    for v in rng.normal(size=200) * 10.0 ** rng.integers(-300, 300, size=200):
        assert float(qio.fmt(v)) == v
    assert qio.fmt(None) == "" and qio.fmt(True) == "true" and qio.fmt(np.int64(3)) == "3"


def test_csv_is_rfc4180():
    text = qio.csv_text(("a", "b"), [(1.5, "x,y"), {"a": 2, "b": 'q"q'}])
    assert text.startswith("a,b\r\n")
    assert text.endswith("\r\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[1] == ["1.5", "x,y"] and rows[2] == ["2", 'q"q']


def test_json_is_deterministic_and_finite():
    text = qio.json_text({"b": float("nan"), "a": 1 + 2j, "c": np.arange(2)})
    assert json.loads(text) == {"a": [1.0, 2.0], "b": None, "c": [0, 1]}
    assert text.index('"a"') < text.index('"b"')


# --- commands ---

def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2))
    return str(p)


def test_recipes_are_listed(capsys):
    assert main(["recipes"]) == 0
    names = capsys.readouterr().out.split()
    assert "ideal_999" in names and "fig12_compensation" in names
    assert set(names) == set(list_recipes())


def test_simulate_ideal(recipe):
    out = recipe("simulate", "ideal_999")
    res = read_json(os.path.join(out, "outcome.json"))
    assert 0.0009 <= 1 - res["eta"] <= 0.0011
    assert res["t_f_ns"] == pytest.approx(460.5, abs=0.1)
    traj = read_csv(os.path.join(out, "trajectory.csv"))
    assert float(traj[0]["re_G"]) == 1.0
    assert set(os.listdir(out)) == {"outcome.json", "trajectory.csv", "pulses.csv"}


def test_simulate_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "--config", "ideal_99", "--out", str(tmp_path / d), "--seed", "3"]) == 0
    for name in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_noisy_simulate_depends_on_seed(tmp_path):
    cfg = _write(tmp_path, {"schema_version": 1, "kind": "simulate",
                            "scenario": {"noise_kind": "multiplicative", "noise_a": 0.1}})
    etas = []
    for s in ("1", "1", "2"):
        out = tmp_path / f"o{len(etas)}"
        assert main(["simulate", "--config", cfg, "--out", str(out), "--seed", s]) == 0
        etas.append(read_json(out / "outcome.json")["eta"])
    assert etas[0] == etas[1] != etas[2]


@pytest.mark.parametrize("bad, needle", [
    ({"schema_version": 1, "kind": "simulate", "scenario": {"eta_desing": 0.9}}, "eta_desing"),
    ({"schema_version": 2, "kind": "simulate", "scenario": {}}, "schema"),
    ({"schema_version": 1, "kind": "sweep", "scenario": {}}, "kind"),
    ({"schema_version": 1, "kind": "simulate", "scenario": {"eta_design": 1.5}}, "eta"),
])
def test_validation_failures_exit_2(tmp_path, capsys, bad, needle):
    cfg = _write(tmp_path, bad)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: ") and needle in err
    assert not out.exists()
    assert os.listdir(tmp_path) == ["cfg.json"]


def test_unknown_key_reports_its_line(tmp_path, capsys):
    cfg = _write(tmp_path, {"schema_version": 1, "kind": "simulate", "scenario": {"eta_desing": 0.9}})
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert f"{cfg}:5:" in err


def test_malformed_json_exit_2(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text('{\n  "schema_version": 1,\n  "kind": "simulate"\n  "scenario": {}\n}\n')
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert f"{p}:4:" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_empty_axes_exit_2(tmp_path):
    cfg = _write(tmp_path, {"schema_version": 1, "kind": "sweep", "base": {}, "axes": []})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_numeric_failure_exit_3(tmp_path):
    cfg = _write(tmp_path, {"schema_version": 1, "kind": "coupler", "coupler": "reference", "t_abs_max": 5.0})
    assert main(["coupler", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert not (tmp_path / "o").exists()


def test_sweep_errors_stay_in_rows(tmp_path):
    cfg = _write(tmp_path, {"schema_version": 1, "kind": "sweep", "base": {},
                            "axes": [{"name": "eta_design", "values": [0.99, 1.5]}]})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "sweep.csv")
    assert rows[0]["error"] == "" and "ParameterError" in rows[1]["error"]
    cfg = _write(tmp_path, {"schema_version": 1, "kind": "sweep", "base": {},
                            "axes": [{"name": "eta_design", "values": [1.2, 1.5]}]}, "all_bad.json")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "p")]) == 3


def test_sweep_threads_do_not_change_output(tmp_path):
    outs = []
    for n in ("1", "3"):
        out = tmp_path / n
        assert main(["sweep", "--config", "fig5_midtime", "--out", str(out), "--threads", n]) == 0
        outs.append(out)
    for name in ("sweep.csv", "summary.csv", "fit.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_reflection_recipe_respects_bound(recipe):
    rows = read_csv(os.path.join(recipe("sweep", "fig8_reflections"), "reflections.csv"))
    assert len(rows) == 225
    for r in rows:
        assert 0 <= float(r["one_minus_eta"]) <= 2 * 0.001 + 1e-5


def test_compensation_recipe(recipe):
    rows = read_csv(os.path.join(recipe("sweep", "fig12_compensation"), "summary.csv"))
    curves = {}
    for r in rows:
        curves.setdefault(float(r["compensation"]), {})[float(r["t_max"])] = 1 - float(r["mean"])
    assert sorted(curves) == [0.0, 0.9, 0.95, 0.99, 1.0]
    assert all(len(c) == 5 for c in curves.values())
    assert curves[0.0][0.05] == pytest.approx(0.33, abs=0.02)


def test_coupler_table(recipe):
    rows = read_csv(os.path.join(recipe("coupler", "fig10_coupler"), "coupler.csv"))
    assert len(rows) == 101
    assert float(rows[0]["M_pH"]) == 0 and float(rows[0]["abs_t"]) == 0
    assert float(rows[0]["delta_omega_MHz"]) == 0
    t = np.array([float(r["abs_t"]) for r in rows])
    dw = np.array([float(r["delta_omega_MHz"]) for r in rows])
    assert t[-1] == pytest.approx(0.1, abs=1e-9)
    assert np.interp(0.05, t, dw) == pytest.approx(-18.6, abs=0.5)
    phases = np.array([float(r["arg_t"]) for r in rows[1:]])
    assert np.ptp(phases) > 0.01


def test_coupler_grid_flag(tmp_path):
    out = tmp_path / "o"
    assert main(["coupler", "--config", "fig10_coupler", "--out", str(out), "--M-grid=-5:5:11"]) == 0
    rows = read_csv(out / "coupler.csv")
    assert [float(r["M_pH"]) for r in rows] == list(np.linspace(-5, 5, 11))
    assert main(["coupler", "--config", "fig10_coupler", "--out", str(tmp_path / "p"), "--M-grid", "1:2"]) == 2


def test_fidelity_command(recipe):
    res = read_json(os.path.join(recipe("fidelity", "fidelity_qubit"), "fidelity.json"))
    assert res["process_fidelity"] == pytest.approx(process_fidelity(Channel(0.999))[0], abs=1e-15)
    s = math.sqrt(0.999)
    assert res["state_fidelity"] == pytest.approx((1 + s) / 2, abs=1e-12)
