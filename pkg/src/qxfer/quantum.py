"""Quantum channel produced by a classical transfer with efficiency eta.

The transfer acts on the field as a beam splitter with amplitude
``sqrt(eta)`` and phase ``phi_f``; the receiving resonator ends up in a
pure-loss channel output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import CutoffError, ParameterError

__all__ = [
    "DEFAULT_CUTOFF",
    "FockVector",
    "DensityMatrix",
    "Channel",
    "coherent_state",
    "apply_channel",
    "state_fidelity",
    "qubit_channel",
    "qubit_state_fidelity",
    "process_fidelity",
    "average_fidelity",
    "env_coefficients",
    "env_fidelity",
]

DEFAULT_CUTOFF = 32
_TAIL = 1e-12


class FockVector:
    """Normalized state vector truncated at photon number ``N = len(amplitudes) - 1``."""

    def __init__(self, amplitudes, normalize: bool = False):
        a = np.array(amplitudes, dtype=complex).ravel()
        if a.size == 0:
            raise ParameterError("empty state")
        norm = float(np.vdot(a, a).real)
        if normalize:
            if norm == 0:
                raise ParameterError("zero vector cannot be normalized")
            a = a / math.sqrt(norm)
        elif abs(norm - 1.0) > 1e-10:
            raise ParameterError(f"state norm {norm!r} differs from 1")
        a.setflags(write=False)
        self.amplitudes = a

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def __repr__(self):
        return f"FockVector(N={self.cutoff})"


class DensityMatrix:
    """Density matrix in the truncated Fock basis."""

    def __init__(self, rho, check: bool = True):
        rho = np.array(rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ParameterError("density matrix must be square")
        if check:
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ParameterError("density matrix is not Hermitian")
            if abs(np.trace(rho).real - 1.0) > 1e-9:
                raise ParameterError("density matrix trace differs from 1")
        rho.setflags(write=False)
        self.rho = rho

    @property
    def cutoff(self) -> int:
        return self.rho.shape[0] - 1

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.rho)[0])

    def to_json(self) -> dict:
        """Row-major ``[re, im]`` pairs."""
        return {"dim": self.rho.shape[0], "data": [[float(v.real), float(v.imag)] for v in self.rho.ravel()]}

    @classmethod
    def from_json(cls, obj) -> "DensityMatrix":
        n = int(obj["dim"])
        data = np.array(obj["data"], dtype=float)
        return cls((data[:, 0] + 1j * data[:, 1]).reshape(n, n))


@dataclass(frozen=True)
class Channel:
    """Pure-loss channel with efficiency ``eta`` and phase ``phi_f``."""

    eta: float
    phi_f: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError("eta must lie in [0, 1]")


def coherent_state(alpha: complex, cutoff: int) -> FockVector:
    """Coherent state truncated at ``cutoff`` and renormalized."""
    n = np.arange(cutoff + 1)
    log_mag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return FockVector(amps, normalize=True)


def _loss_amplitudes(N: int, j: int, eta: float, phi: float):
    """``c_{n,j}`` for ``n = 0..N-j``."""
    n = np.arange(N - j + 1)
    log_binom = gammaln(n + j + 1) - gammaln(n + 1) - gammaln(j + 1)
    return np.exp(0.5 * log_binom) * eta ** (n / 2.0) * (1.0 - eta) ** (j / 2.0) * np.exp(1j * n * phi)


def _as_rho(state):
    if isinstance(state, FockVector):
        return state.projector()
    if isinstance(state, DensityMatrix):
        return np.asarray(state.rho)
    a = np.asarray(state, dtype=complex)
    if a.ndim == 1:
        return FockVector(a).projector()
    return DensityMatrix(a).rho


def _dropped_mass(rho_diag, N, eta, j_cut):
    """Trace removed by truncating the ancilla sum after ``j_cut``."""
    kept = 0.0
    for j in range(min(j_cut, N) + 1):
        c = _loss_amplitudes(N, j, eta, 0.0)
        kept += float(np.sum(np.abs(c) ** 2 * rho_diag[j:]))
    return max(0.0, float(np.sum(rho_diag)) - kept)


def apply_channel(state, channel: Channel, j_cutoff: int | None = None) -> DensityMatrix:
    """Output density matrix of the pure-loss channel.

    ``state`` is a :class:`FockVector`, a :class:`DensityMatrix` or a raw
    array.  ``j_cutoff`` bounds the number of photons lost to the ancilla;
    by default it is the smallest value whose dropped trace is below 1e-12.
    """
    rho_in = _as_rho(state)
    N = rho_in.shape[0] - 1
    eta, phi = float(channel.eta), float(channel.phi_f)
    diag = np.real(np.diag(rho_in))
    if j_cutoff is None:
        j_cutoff = N
        for jc in range(N + 1):
            if _dropped_mass(diag, N, eta, jc) < _TAIL:
                j_cutoff = jc
                break
    else:
        if j_cutoff < 0:
            raise ParameterError("j_cutoff must be >= 0")
        if _dropped_mass(diag, N, eta, j_cutoff) >= _TAIL:
            need = next(jc for jc in range(N + 1) if _dropped_mass(diag, N, eta, jc) < _TAIL)
            raise CutoffError(f"j_cutoff = {j_cutoff} drops too much weight; need at least {need}", need)
    out = np.zeros_like(rho_in)
    for j in range(min(j_cutoff, N) + 1):
        c = _loss_amplitudes(N, j, eta, phi)
        out[: N + 1 - j, : N + 1 - j] += c[:, None] * rho_in[j:, j:] * c.conj()[None, :]
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, check=False)


def state_fidelity(psi_in, rho_fin) -> float:
    """Overlap ``<psi|rho|psi>`` of the input state with the output."""
    psi = psi_in.amplitudes if isinstance(psi_in, FockVector) else np.asarray(psi_in, dtype=complex)
    rho = rho_fin.rho if isinstance(rho_fin, DensityMatrix) else np.asarray(rho_fin, dtype=complex)
    if rho.shape != (psi.size, psi.size):
        raise ParameterError("state and density matrix dimensions differ")
    return float(np.real(np.vdot(psi, rho @ psi)))


def qubit_channel(alpha: complex, beta: complex, channel: Channel) -> np.ndarray:
    """Closed-form output for the qubit input ``alpha|0> + beta|1>`` (Fock order)."""
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise ParameterError("qubit amplitudes are not normalized")
    eta = channel.eta
    off = math.sqrt(eta) * np.exp(1j * channel.phi_f) * beta * np.conj(alpha)
    return np.array(
        [
            [abs(alpha) ** 2 + (1.0 - eta) * abs(beta) ** 2, np.conj(off)],
            [off, eta * abs(beta) ** 2],
        ],
        dtype=complex,
    )


def qubit_state_fidelity(alpha: complex, beta: complex, channel: Channel) -> float:
    """``|a|^4 + eta |b|^4 + |ab|^2 (1 - eta + 2 sqrt(eta) cos phi_f)``."""
    eta = channel.eta
    a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
    return a2 * a2 + eta * b2 * b2 + a2 * b2 * (1.0 - eta + 2.0 * math.sqrt(eta) * math.cos(channel.phi_f))


def process_fidelity(channel: Channel):
    """Qubit process fidelity ``(corrected, uncorrected)``.

    ``corrected`` assumes the final phase is undone, ``(1 + sqrt(eta))^2 / 4``.
    """
    eta = channel.eta
    s = math.sqrt(eta)
    return (1.0 + s) ** 2 / 4.0, (1.0 + eta + 2.0 * s * math.cos(channel.phi_f)) / 4.0


def average_fidelity(channel: Channel) -> float:
    """State fidelity averaged over the Bloch sphere."""
    eta = channel.eta
    return (3.0 + eta + 2.0 * math.sqrt(eta) * math.cos(channel.phi_f)) / 6.0


def env_coefficients(eta: float, n_max: int) -> np.ndarray:
    """Average-fidelity reduction ``C_n`` per environment photon number ``n = 0..n_max``."""
    if not 0.0 <= eta <= 1.0:
        raise ParameterError("eta must lie in [0, 1]")
    n = np.arange(n_max + 1, dtype=float)
    s = math.sqrt(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_pow = np.where(n >= 1, eta ** np.maximum(n - 1, 0.0), 0.0)
    term = n * (1.0 - eta) * eta_pow * (2.0 * eta + 2.0 * s - (1.0 - eta) * (2.0 * n + 1.0))
    return ((3.0 + eta + 2.0 * s) * (1.0 - eta**n) + term) / 6.0


def env_fidelity(eta: float, beta):
    """Average qubit fidelity with the ancilla arm in state ``sum beta_n |n>``.

    ``beta`` holds amplitudes; only ``|beta_n|^2`` matters.  Returns
    ``(F_avg, C)`` with ``C`` the coefficients used.
    """
    p = np.abs(np.asarray(beta, dtype=complex).ravel()) ** 2
    if abs(p.sum() - 1.0) > 1e-10:
        raise ParameterError("environment distribution is not normalized")
    C = env_coefficients(eta, p.size - 1)
    base = (3.0 + eta + 2.0 * math.sqrt(eta)) / 6.0
    return float(base - np.dot(C, p)), C
