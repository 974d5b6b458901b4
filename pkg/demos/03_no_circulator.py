"""Without a circulator the reflected wave comes back to the emitter.

The line delay and round-trip phase are scanned.  The extra loss never
exceeds twice the design loss, and a delay longer than the whole
procedure behaves exactly like a circulator.
"""

import math

import numpy as np

from qxfer import DelayConfig, SimConfig, design_protocol, round_trip_time, simulate, simulate_with_delay

p = design_protocol(0.05, 0.05, round_trip_time(6.0), 0.999)
cfg = SimConfig.from_params(p)
circ = simulate(cfg)[1].eta
print(f"with circulator: 1 - eta = {1 - circ:.3e}   (bound without it: {2 * (1 - circ):.3e})")

phis = np.linspace(0, math.pi, 5)
print("t_d/tau  " + "  ".join(f"phi={ph:4.2f}" for ph in phis))
for r in (0.1, 0.3, 1.0, 3.0, 10.0):
    row = [1 - simulate_with_delay(cfg, DelayConfig(r * p.tau_e, ph))[1].eta for ph in phis]
    print(f"{r:6.1f}   " + "  ".join(f"{v:.2e}" for v in row))

far = simulate_with_delay(cfg, DelayConfig(1.2 * p.t_f, 1.0))[1].eta
print(f"\ndelay longer than the procedure: |difference| = {abs(far - circ):.1e}")
