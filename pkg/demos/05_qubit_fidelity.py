"""From classical efficiency to quantum fidelity.

A transfer with efficiency eta acts on a qubit as an amplitude-damping
channel.  Once the final phase is corrected, everything follows from eta.
"""

import numpy as np

from qxfer import Channel, FockVector, apply_channel, average_fidelity, env_coefficients, process_fidelity
from qxfer.quantum import coherent_state, state_fidelity

for eta in (0.9, 0.99, 0.999):
    ch = Channel(eta, 0.0)
    f_chi, _ = process_fidelity(ch)
    print(f"eta = {eta}: process fidelity {f_chi:.5f}, average state fidelity {average_fidelity(ch):.5f}")

plus = FockVector([1, 1], normalize=True)
rho = apply_channel(plus, Channel(0.99, 0.4))
print("\n|+> after eta=0.99 with an uncorrected phase of 0.4 rad:")
print(np.round(rho.rho, 4))
print(f"fidelity {state_fidelity(plus, rho):.4f}")

alpha = 1.2
out = apply_channel(coherent_state(alpha, 25), Channel(0.9))
print(f"\ncoherent state stays coherent: fidelity with |sqrt(0.9) alpha> = "
      f"{state_fidelity(coherent_state(np.sqrt(0.9) * alpha, 25), out):.9f}")

print("\nfidelity cost of stray photons in the line: C_n for n = 1..4 at eta = 0.99")
print(np.round(env_coefficients(0.99, 4)[1:], 4))
