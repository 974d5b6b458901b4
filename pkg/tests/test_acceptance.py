"""End-to-end acceptance checks; each test records one PASS/FAIL line."""

import math
import os

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import read_csv, read_json
from test_quantum import joint_output, random_state
from qxfer.coupler import CouplerParams, amplitudes, detuning, detuning_linear, invert_M
from qxfer.dynamics import SimConfig, detuning_coefficient, round_trip_time, simulate
from qxfer.lab import Scenario, build_scenario, fit_quadratic, noise_oracle, run_scenario
from qxfer.pulse import design_protocol, interpolated_noise_variance
from qxfer.quantum import (
    Channel, FockVector, apply_channel, coherent_state, env_coefficients, process_fidelity,
    qubit_channel, qubit_state_fidelity, state_fidelity,
)
from qxfer.reflections import DelayConfig, simulate_with_delay

TRT = round_trip_time(6.0)


def within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def summary(recipe, name):
    return read_csv(os.path.join(recipe("sweep", name), "summary.csv"))


def test_criterion_1_ideal_protocol(verdict):
    rows = []
    ok = True
    for eta_d, t_f in ((0.99, 307.0), (0.999, 460.5)):
        p = design_protocol(0.05, 0.05, TRT, eta_d)
        loss = 1 - simulate(SimConfig.from_params(p))[1].eta
        good = within(loss, 1 - eta_d, 0.10) and abs(p.t_f - t_f) < 0.1 and p.tau_e == pytest.approx(33.3, abs=0.05)
        ok &= good
        rows.append(f"eta_d={eta_d}: 1-eta={loss:.5g}, t_f={p.t_f:.2f} ns")
    verdict(1, ok, "; ".join(rows))
    assert ok


# ----- sensitivity fits -----

def _fits(recipe):
    out = {}
    for key, name in (("t_max", "fig3_tmax"), ("tau", "fig4_tau"), ("mid", "fig5_midtime"), ("warp", "fig6_warping")):
        out[key] = read_json(os.path.join(recipe("sweep", name), "fit.json"))["coefficients"]
    return out


_TARGETS = {"t_max": ((1.0, 1.0, 1.25), 0.15), "tau": ((0.34, 0.34, 0.12), 0.15),
            "mid": ((0.25,), 0.15), "warp": ((0.22, 0.22, 0.12), 0.20)}


def _fit_ok(coefs, targets, rel):
    return all(within(c, t, rel) for c, t in zip(coefs, targets))


def test_sensitivity_t_max_and_mid_time(recipe):
    fits = _fits(recipe)
    for key in ("t_max", "mid"):
        assert _fit_ok(fits[key], *_TARGETS[key])


@pytest.mark.xfail(strict=True, reason="tau and warping coefficients come out smaller than the published fits")
def test_criterion_2_sensitivity_coefficients(recipe, verdict):
    fits = _fits(recipe)
    parts, ok = [], True
    for key, (targets, rel) in _TARGETS.items():
        coefs = fits[key][: len(targets)]
        good = _fit_ok(coefs, targets, rel)
        ok &= good
        shown = ", ".join(f"{c:.3f}" for c in coefs)
        parts.append(f"{key}=({shown}){'' if good else ' off'}")
    verdict(2, ok, "; ".join(parts))
    assert ok


def test_criterion_3_filtering(recipe, verdict):
    rows = [r for r in summary(recipe, "fig7_filter") if float(r["eta_design"]) == 0.999]
    loss = {float(r["sigma_ns"]): float(r["mean"]) for r in rows}
    d1, d10 = loss[1.0] - loss[0.0], loss[10.0] - loss[0.0]
    ok = d1 < 1e-4 and d10 < 0.5 * 0.001
    verdict(3, ok, f"d_eta(1 ns)={d1:.3g}, d_eta(10 ns)={d10:.3g}")
    assert ok


def test_criterion_4_noise(recipe, verdict):
    xi = interpolated_noise_variance()
    parts, ok = [], True
    for kind, target in (("multiplicative", 2.0), ("additive", 2 * math.log(1000.0))):
        rows = summary(recipe, f"noise_{kind}")
        base_scn = Scenario(eta_design=0.999)
        eta0 = run_scenario(base_scn)["eta"]
        cfg, _, _ = build_scenario(base_scn)
        a = np.array([float(r["noise_a"]) for r in rows])
        mean = 1 - np.array([float(r["mean"]) for r in rows])
        sem = np.array([float(r["sem"]) for r in rows])
        oracle = np.array([noise_oracle(cfg, kind, ai, xi) for ai in a])
        z = (mean - oracle) / sem
        g = a * a * xi
        c_n = float(np.sum(g * (eta0 - mean)) / np.sum(g * g))
        good = bool(np.all(np.abs(z) <= 2.0)) and within(c_n, target, 0.20) and all(int(r["n"]) == 100 for r in rows)
        ok &= good
        parts.append(f"{kind}: max|z|={np.max(np.abs(z)):.2f}, c_n={c_n:.3f} (target {target:.3f})")
    verdict(4, ok, "; ".join(parts))
    assert ok


def test_criterion_5_dissipation(recipe, verdict):
    rows = summary(recipe, "dissipation")
    p = design_protocol(0.05, 0.05, TRT, 0.999)
    eta0 = run_scenario(Scenario())["eta"]
    worst = 0.0
    for r in rows:
        T1 = float(r["T1_ns"])
        pred = eta0 * float(r["eta_tl"]) * math.exp(-p.t_f / T1)
        worst = max(worst, abs((1 - float(r["mean"])) / pred - 1))
    ok = worst < 1e-3 and len(rows) == 9
    verdict(5, ok, f"max relative deviation {worst:.2e} over {len(rows)} points")
    assert ok


def test_criterion_6_reflections(recipe, verdict):
    rows = read_csv(os.path.join(recipe("sweep", "fig8_reflections"), "reflections.csv"))
    loss = np.array([float(r["one_minus_eta"]) for r in rows])
    in_bound = bool(np.all((loss >= 0) & (loss <= 2 * 0.001 + 1e-5)))
    p = design_protocol(0.05, 0.05, TRT, 0.999)
    cfg = SimConfig.from_params(p)
    rng = np.random.default_rng(6)
    asym = 0.0
    for _ in range(12):
        r, phi = rng.uniform(0.1, 20.0), rng.uniform(0, math.pi)
        a = simulate_with_delay(cfg, DelayConfig(r * p.tau_e, phi))[1].eta
        b = simulate_with_delay(cfg, DelayConfig(r * p.tau_e, 2 * math.pi - phi))[1].eta
        asym = max(asym, abs(a - b))
    circ = simulate(cfg)[1].eta
    far = max(abs(simulate_with_delay(cfg, DelayConfig(f * p.t_f, phi))[1].eta - circ)
              for f in (1.0, 1.5) for phi in (0.0, 2.0))
    ok = in_bound and len(rows) >= 200 and asym < 1e-9 and far < 1e-6
    verdict(6, ok, f"{len(rows)} points, max 1-eta={loss.max():.4g}, phase asymmetry {asym:.1e}, "
                   f"long-delay deviation {far:.1e}")
    assert ok


def test_criterion_7_constant_detuning(recipe, verdict):
    rows = summary(recipe, "fig9_detuning")
    parts, ok = [], True
    for eta_d, target in ((0.999, 1.94), (0.99, 1.68), (0.9, 0.81)):
        sel = [r for r in rows if float(r["eta_design"]) == eta_d]
        x = np.array([float(r["dw_tau"]) for r in sel])
        y = np.array([float(r["mean"]) for r in sel])
        c = fit_quadratic(x, y, ("dw_tau",), baseline=float(y[x == 0][0])).coefficients[0]
        closed = detuning_coefficient(eta_d)
        good = within(c, target, 0.10) and within(c, closed, 0.05)
        ok &= good
        parts.append(f"eta_d={eta_d}: c_fm={c:.3f} (closed form {closed:.3f})")
    verdict(7, ok, "; ".join(parts))
    assert ok


def test_criterion_8_coupler_model(verdict):
    ref = CouplerParams.reference()
    p = amplitudes(ref, 1e-3 * ref.Mg)
    b, arg_r, slope = abs(p.b), abs(np.angle(-p.r_in)), abs(p.t) / 1e-3
    dw = detuning(ref, invert_M(ref, 0.05)) / (2 * math.pi) * 1e3
    lin = detuning_linear(ref)
    dev = detuning(ref, invert_M(ref, 0.1)) / 0.1 / lin.slope - 1
    ok = (within(b, 0.066, 0.05) and within(arg_r, 0.13, 0.05) and within(slope, 0.034, 0.05)
          and abs(dw + 18.6) <= 0.5 and abs(abs(dev) - 0.032) <= 0.01)
    verdict(8, ok, f"|b|={b:.4f}, |arg r_in|={arg_r:.4f}, |t|/(M/Mg)={slope:.4f}, "
                   f"dw/2pi(0.05)={dw:.2f} MHz, linear deviation(0.1)={100 * abs(dev):.2f}%")
    assert ok


# ----- compensation -----

def _loss(c, t, eta_d=0.999):
    return run_scenario(Scenario(eta_design=eta_d, coupler="reference", compensation=c, t_max_e=t, t_max_r=t))[
        "one_minus_eta"]


def test_criterion_9_compensation(recipe, verdict):
    rows = summary(recipe, "fig12_compensation")
    eta = {(float(r["compensation"]), float(r["t_max"])): 1 - float(r["mean"]) for r in rows}
    u05, u10 = eta[(0.0, 0.05)], eta[(0.0, 0.1)]
    ok_u = abs(u05 - 0.33) <= 0.02 and abs(u10 - 0.58) <= 0.02

    # smallest compensation that keeps eta above 0.99
    c_req = {t: brentq(lambda c: 0.01 - _loss(c, t), 0.8, 1.0, xtol=1e-3) for t in (0.05, 0.07, 0.1)}
    ok_c = all(round(c * 20) / 20 in (0.90, 0.95) for c in c_req.values())

    # residual detuning x = k (1 - c) tau_rt / |t_max|; fit 1 - eta = P x^2 where detuning dominates
    k = abs(detuning_linear(CouplerParams.reference()).slope)
    xs, ys = [], []
    for t in (0.005, 0.01, 0.015, 0.02, 0.03):
        floor = _loss(1.0, t)
        for c in (0.9, 0.95, 0.99):
            x = k * (1 - c) * TRT / t
            if x <= 0.4:
                y = _loss(c, t)
                if y >= 5 * floor:
                    xs.append(x)
                    ys.append(y)
    xs, ys = np.array(xs), np.array(ys)
    P = float(np.sum(xs**2 * ys) / np.sum(xs**4))
    spread = float(np.ptp(ys / xs**2) / P)
    ok_p = len(xs) >= 3 and within(P, 0.4, 0.25)

    ok = ok_u and ok_c and ok_p
    creq = ", ".join(f"{t}: {c:.3f}" for t, c in c_req.items())
    verdict(9, ok, f"uncompensated eta={u05:.4f} (0.05), {u10:.4f} (0.1); c needed for eta>0.99 "
                   f"[{creq}]; prefactor P={P:.3f} from {len(xs)} points (ratio spread {spread:.2f})")
    assert ok


# ----- quantum calculus -----

def test_criterion_10_quantum_calculus(verdict):
    rng = np.random.default_rng(10)
    checks = {}

    etas = np.linspace(0, 1, 101)
    checks["process"] = max(abs(process_fidelity(Channel(e, 0.0))[0] - (1 + math.sqrt(e)) ** 2 / 4) for e in etas)

    worst = 0.0
    for _ in range(200):
        a, b = random_state(rng, 2)
        ch = Channel(rng.uniform(), rng.uniform(0, 2 * math.pi))
        rho = apply_channel(FockVector([a, b]), ch)
        worst = max(worst, np.max(np.abs(rho.rho - qubit_channel(a, b, ch))),
                    abs(state_fidelity(FockVector([a, b]), rho) - qubit_state_fidelity(a, b, ch)))
    checks["qubit"] = worst

    tr, neg = 0.0, 0.0
    for _ in range(1000):
        rho = apply_channel(FockVector(random_state(rng, int(rng.integers(1, 9)))),
                            Channel(rng.uniform(), rng.uniform(0, 2 * math.pi)))
        tr, neg = max(tr, abs(rho.trace() - 1)), max(neg, -rho.min_eigenvalue())
    checks["trace"], checks["negativity"] = tr, neg

    alpha = 1.0 * np.exp(0.7j)
    out = apply_channel(coherent_state(alpha, 20), Channel(0.9, 0.0))
    checks["coherent"] = 1 - state_fidelity(coherent_state(math.sqrt(0.9) * alpha, 20), out)

    checks["C_n_min"] = min(float(np.min(env_coefficients(e, 30))) for e in etas)

    psi = random_state(rng, 4)
    ref = joint_output(psi, [1.0], 0.7, 0.3)
    aux = max(np.max(np.abs(joint_output(psi, [1.0], 0.7, 0.3, *rng.uniform(0, 2 * math.pi, 2)) - ref))
              for _ in range(10))
    aux = max(aux, np.max(np.abs(apply_channel(FockVector(psi), Channel(0.7, 0.3)).rho - ref[:4, :4])))
    checks["aux_phase"] = aux

    ok = (checks["process"] <= 1e-12 and checks["qubit"] <= 1e-12 and checks["trace"] <= 1e-9
          and checks["negativity"] <= 1e-9 and checks["coherent"] < 1e-6 and checks["C_n_min"] >= -1e-15
          and checks["aux_phase"] <= 1e-12)
    verdict(10, ok, ", ".join(f"{k}={v:.1e}" for k, v in checks.items()))
    assert ok
