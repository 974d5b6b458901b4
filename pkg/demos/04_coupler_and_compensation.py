"""A SQUID-based coupler pulls the resonator frequency as it opens.

Print the scattering data of the reference circuit, then show how much of
the induced detuning must be cancelled to keep the transfer efficient.
"""

import math

from qxfer import CouplerParams, Scenario, amplitudes, detuning, detuning_linear, invert_M, run_scenario

ref = CouplerParams.reference()
print("  |t|     M (pH)   arg t    pull (MHz)")
for x in (0.01, 0.02, 0.05, 0.1):
    M = invert_M(ref, x)
    p = amplitudes(ref, M)
    print(f"  {x:4.2f}  {M:8.3f}  {math.atan2(p.t.imag, p.t.real):+.3f}   {detuning(ref, M) / (2 * math.pi) * 1e3:+.2f}")
lin = detuning_linear(ref)
print(f"linear slope of the pull: {lin.slope / (2 * math.pi) * 1e3:.1f} MHz per unit |t|")

print("\nefficiency with the pull partly compensated (99.9% design):")
print("  c \\ |t_max|  " + "  ".join(f"{t:5.2f}" for t in (0.03, 0.05, 0.1)))
for c in (0.0, 0.9, 0.95, 1.0):
    etas = [run_scenario(Scenario(coupler="reference", compensation=c, t_max_e=t, t_max_r=t))["eta"]
            for t in (0.03, 0.05, 0.1)]
    print(f"  {c:4.2f}         " + "  ".join(f"{e:.3f}" for e in etas))
