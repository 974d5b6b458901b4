"""How forgiving is the protocol?  A tour of small experimental errors."""

import math

from qxfer import Scenario, build_scenario, noise_oracle, run_scenario
from qxfer.pulse import interpolated_noise_variance


def loss(**kw):
    return run_scenario(Scenario(**kw))["one_minus_eta"]


base = loss()
print(f"ideal design, 1 - eta = {base:.3e}")

print("\nmaximum coupling off by 5% on both sides:")
for se in (-1, 1):
    for sr in (-1, 1):
        d = loss(d_t_max_e_rel=0.05 * se, d_t_max_r_rel=0.05 * sr) - base
        print(f"  ({se:+d}, {sr:+d})  added loss {d:.2e}")

for shift in (1.0, 3.0, 6.0):
    print(f"mid-time shifted by {shift} ns: added loss {loss(dt_m_e_ns=shift) - base:.2e}")

for sigma in (1.0, 10.0):
    print(f"gaussian smoothing sigma = {sigma} ns: added loss {loss(sigma_ns=sigma) - base:.2e}")

# noisy pulses: average a few realizations and compare with the effective-leakage model
xi = interpolated_noise_variance()
cfg, _, _ = build_scenario(Scenario())
for kind in ("multiplicative", "additive"):
    a = 0.05
    etas = [run_scenario(Scenario(noise_kind=kind, noise_a=a), seed=s)["eta"] for s in range(40)]
    mc = sum(etas) / len(etas)
    print(f"{kind} noise a={a}: Monte-Carlo eta {mc:.5f}, effective model {noise_oracle(cfg, kind, a, xi):.5f}")

print(f"\nmean square of the interpolated noise: {xi:.3f}")
print(f"detuning of 0.05/tau on one side: added loss {loss(dw_tau_e=0.05) - base:.2e}"
      f" (small-detuning estimate {1.94 * 0.05**2:.2e})")
print(f"T1 = 20 us in both resonators: eta = {1 - loss(T1_e_ns=2e4, T1_r_ns=2e4):.4f}"
      f" vs {(1 - base) * math.exp(-460.5 / 2e4):.4f}")
