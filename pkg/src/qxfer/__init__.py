"""Simulation of photon transfer between two resonators through tunable couplers."""

from .errors import (
    ConfigError, CutoffError, DomainError, ParameterError, QxferError, RangeError,
    SingularConfigurationError,
)
from .pulse import (
    DeformationSpec, ProtocolParams, PulseShape, SampledPulse, apply_deformations,
    design_protocol, ideal_pulses,
)
from .dynamics import SimConfig, TransferOutcome, round_trip_time, simulate
from .reflections import DelayConfig, simulate_with_delay
from .coupler import CouplerParams, amplitudes, detuning, detuning_linear, invert_M, schedule
from .quantum import (
    Channel, DensityMatrix, FockVector, apply_channel, average_fidelity, env_coefficients,
    process_fidelity, state_fidelity,
)
from .lab import (
    Axis, Scenario, SweepSpec, build_scenario, fit_quadratic, noise_oracle, run_scenario, run_sweep,
)

__version__ = "0.1.0"
