"""Rotating-frame Liouvillian of the Lambda system for one velocity class.

Basis order is (|1>, |2>, |3>); density matrices are vectorized row-major,
``vec(rho)[3*i + j] = rho[i, j]``. The equation of motion is

    d rho/dt = -i [H, rho]
               + sum_k (L_k rho L_k^+ - {L_k^+ L_k, rho} / 2)
               + gamma12 * (Tr(rho) rho0 - rho)

with decay operators ``sqrt(gamma31) |1><3|`` and ``sqrt(gamma32) |2><3|``.
The last term relaxes the whole atom toward ``rho0 = diag(p1, p2, 0)`` at the
ground-state relaxation rate gamma12 (atoms leaving and entering the beams).
It damps the ground coherence rho12 at exactly gamma12 and is what keeps the
ground populations at p1/p2 when the coupling laser is off. At gamma12 = 0 it
vanishes and the dark state becomes exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AtomSpec, FieldSpec

__all__ = [
    "VelocityClass",
    "DensityMatrix",
    "SingularGeneratorError",
    "hamiltonian",
    "build_generator",
    "steady_state",
    "probe_response",
    "single_class_absorption",
    "TRACE_ROW",
]

TRACE_ROW = np.array([1, 0, 0, 0, 1, 0, 0, 0, 1], dtype=complex)


@dataclass(frozen=True)
class VelocityClass:
    """Doppler shift k*v in MHz, shared by both co-propagating fields."""

    doppler_shift: float = 0.0


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray
    degenerate: bool = False

    def __getitem__(self, idx):
        return self.rho[idx]

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()


class SingularGeneratorError(np.linalg.LinAlgError):
    pass


def hamiltonian(probe: FieldSpec, coupling: FieldSpec, doppler_shift: float = 0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian in MHz.

    With effective detunings ``dp = probe.detuning - kv`` and
    ``dc = coupling.detuning - kv`` the diagonal is (0, dp - dc, dp). The
    two-photon detuning dp - dc does not depend on the velocity class.
    """
    dp = probe.detuning - doppler_shift
    dc = coupling.detuning - doppler_shift
    wp, wc = probe.rabi, coupling.rabi
    return np.array(
        [[0.0, 0.0, wp],
         [0.0, dp - dc, wc],
         [wp, wc, dp]],
        dtype=complex,
    )


def _dissipator(op: np.ndarray) -> np.ndarray:
    eye = np.eye(3)
    n = op.conj().T @ op
    return np.kron(op, op.conj()) - 0.5 * (np.kron(n, eye) + np.kron(eye, n.T))


def build_generator(atom: AtomSpec, probe: FieldSpec, coupling: FieldSpec,
                    v: VelocityClass | float = 0.0,
                    p1_init: float = 0.5, p2_init: float = 0.5) -> np.ndarray:
    """9x9 complex generator G with d vec(rho)/dt = G @ vec(rho)."""
    shift = v.doppler_shift if isinstance(v, VelocityClass) else float(v)
    eye = np.eye(3)
    h = hamiltonian(probe, coupling, shift)
    g = -1j * (np.kron(h, eye) - np.kron(eye, h.T))

    lower31 = np.zeros((3, 3))
    lower31[0, 2] = 1.0
    lower32 = np.zeros((3, 3))
    lower32[1, 2] = 1.0
    g = g + atom.gamma31 * _dissipator(lower31) + atom.gamma32 * _dissipator(lower32)

    if atom.gamma12:
        rho0 = np.diag([p1_init, p2_init, 0.0]).astype(complex).ravel()
        g = g + atom.gamma12 * (np.outer(rho0, TRACE_ROW) - np.eye(9))
    return g


def steady_state(g: np.ndarray, check_degeneracy: bool = True) -> DensityMatrix:
    """Solve G vec(rho) = 0 with the rho11 equation replaced by Tr(rho) = 1.

    ``degenerate`` is set when G has more than one stationary state. If the
    replaced-row system is still singular, the minimum-norm least-squares
    stationary state is returned.
    """
    a = np.array(g, dtype=complex, copy=True)
    a[0, :] = TRACE_ROW
    b = np.zeros(9, dtype=complex)
    b[0] = 1.0
    degenerate = False
    if check_degeneracy:
        sv = np.linalg.svd(g, compute_uv=False)
        degenerate = bool(np.sum(sv <= 1e-12 * max(sv[0], 1.0)) > 1)
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        x = None
    if x is None or not np.all(np.isfinite(x)):
        stacked = np.vstack([g, TRACE_ROW])
        rhs = np.zeros(10, dtype=complex)
        rhs[9] = 1.0
        x = np.linalg.lstsq(stacked, rhs, rcond=None)[0]
        if np.abs(stacked @ x - rhs).max() > 1e-9 * max(1.0, np.abs(g).max()):
            raise SingularGeneratorError("generator has no trace-one stationary state")
        degenerate = True
    return DensityMatrix(x.reshape(3, 3), degenerate)


def probe_response(rho: DensityMatrix | np.ndarray, probe: FieldSpec, gamma_sum: float) -> float:
    """Normalized probe absorption ``-Im(rho31) * (gamma_sum / 2) / probe.rabi``.

    Equals the lower-level population for a weakly probed, resonant two-level
    atom, so 1 means "all atoms in |1>, probe on resonance".
    """
    if probe.rabi <= 0:
        raise ValueError("probe response undefined at zero probe Rabi")
    r = rho.rho if isinstance(rho, DensityMatrix) else rho
    return float(-r[2, 0].imag * 0.5 * gamma_sum / probe.rabi)


def single_class_absorption(atom: AtomSpec, probe: FieldSpec, coupling: FieldSpec,
                            doppler_shift: float = 0.0,
                            p1_init: float = 0.5, p2_init: float = 0.5) -> float:
    g = build_generator(atom, probe, coupling, doppler_shift, p1_init, p2_init)
    rho = steady_state(g, check_degeneracy=False)
    return probe_response(rho, probe, atom.gamma_sum)
