"""Maxwell-Boltzmann velocity averaging and Beer-Lambert conversion."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._backend import BACKEND, kernels
from .bloch import SingularGeneratorError, build_generator
from .model import AtomSpec, EnsembleSpec, FieldSpec, ScanGrid, Spectrum

__all__ = [
    "Quadrature",
    "FWHM_PER_SIGMA",
    "gaussian_quadrature",
    "gauss_hermite_quadrature",
    "averaged_spectrum",
    "absorption_at",
    "transmission",
    "calibrate_od",
    "no_coupling_peak",
    "two_pass_spectrum",
    "TwoPass",
]

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.nodes.size


def gaussian_quadrature(doppler_fwhm: float, n: int = 2001, span: float = 4.0) -> Quadrature:
    """Uniform nodes over +-span sigma with Gaussian weights normalized to 1."""
    if not isinstance(n, (int, np.integer)) or n < 11 or n % 2 == 0:
        raise ValueError(f"node count must be an odd integer >= 11, got {n!r}")
    if span < 3:
        raise ValueError(f"span must be at least 3 sigma, got {span}")
    if doppler_fwhm <= 0:
        raise ValueError("doppler_fwhm must be positive")
    sigma = doppler_fwhm / FWHM_PER_SIGMA
    half = (n - 1) // 2
    # built from integer offsets so the node set is exactly symmetric about 0
    nodes = np.arange(-half, half + 1) * (span * sigma / half)
    weights = np.exp(-0.5 * (nodes / sigma) ** 2)
    weights /= weights.sum()
    return Quadrature(nodes, weights)


def gauss_hermite_quadrature(doppler_fwhm: float, n: int = 101) -> Quadrature:
    """Alternative Gauss-Hermite rule for the same Gaussian measure.

    Converges fast for smooth integrands but clusters nodes near zero shift,
    which under-resolves narrow features far out in the velocity distribution.
    """
    sigma = doppler_fwhm / FWHM_PER_SIGMA
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return Quadrature(x * sigma, w / w.sum())


def _static_generator(atom: AtomSpec, probe: FieldSpec, coupling: FieldSpec,
                      ensemble: EnsembleSpec) -> np.ndarray:
    # All detunings enter through the diagonal that the kernels add per point.
    return build_generator(
        atom,
        replace(probe, detuning=0.0),
        replace(coupling, detuning=0.0),
        0.0,
        ensemble.p1_init,
        ensemble.p2_init,
    )


def _raise_singular(values, detunings, quad, g0, coupling_detuning) -> None:
    i = int(np.flatnonzero(~np.isfinite(values))[0])
    row = kernels.response_table(g0, detunings[i:i + 1], quad.nodes, coupling_detuning, 1.0)[0]
    bad = np.flatnonzero(~np.isfinite(row))
    node = quad.nodes[bad[0]] if bad.size else float("nan")
    raise SingularGeneratorError(
        f"singular steady-state system at probe detuning {float(detunings[i])!r} MHz, "
        f"doppler shift {float(node)!r} MHz"
    )


def absorption_at(detunings, atom: AtomSpec, probe: FieldSpec, coupling: FieldSpec,
                  ensemble: EnsembleSpec, quad: Quadrature) -> np.ndarray:
    """Doppler-averaged normalized absorption at the given probe detunings."""
    detunings = np.ascontiguousarray(detunings, dtype=float)
    g0 = _static_generator(atom, probe, coupling, ensemble)
    scale = 0.5 * atom.gamma_sum / probe.rabi
    values = kernels.doppler_average(g0, detunings, quad.nodes, quad.weights,
                                     float(coupling.detuning), scale)
    if not np.all(np.isfinite(values)):
        _raise_singular(values, detunings, quad, g0, float(coupling.detuning))
    return values


def averaged_spectrum(atom: AtomSpec, probe_grid, probe: FieldSpec, coupling: FieldSpec,
                      ensemble: EnsembleSpec, quad: Optional[Quadrature] = None) -> Spectrum:
    """Doppler-averaged probe absorption over ``probe_grid``.

    ``probe_grid`` is a :class:`ScanGrid` or an increasing array of detunings.
    ``probe.detuning`` is ignored; the grid supplies it.
    """
    if quad is None:
        quad = gaussian_quadrature(ensemble.doppler_fwhm)
    points = probe_grid.points() if isinstance(probe_grid, ScanGrid) else np.asarray(probe_grid, float)
    values = absorption_at(points, atom, probe, coupling, ensemble, quad)
    meta = {
        "quantity": "absorption",
        "gamma31": atom.gamma31,
        "gamma32": atom.gamma32,
        "gamma12": atom.gamma12,
        "doppler_fwhm": ensemble.doppler_fwhm,
        "p1_init": ensemble.p1_init,
        "p2_init": ensemble.p2_init,
        "probe_rabi": probe.rabi,
        "coupling_rabi": coupling.rabi,
        "coupling_detuning": coupling.detuning,
        "quadrature_nodes": len(quad),
        "backend": BACKEND,
    }
    return Spectrum(points, values, meta)


def transmission(spec: Spectrum, od0: float) -> Spectrum:
    """Beer-Lambert transmission exp(-od0 * a) on the same grid."""
    if od0 < 0:
        raise ValueError("od0 must be >= 0")
    meta = dict(spec.meta, quantity="transmission", od0=od0)
    return Spectrum(spec.detunings, np.exp(-od0 * spec.absorption), meta)


def no_coupling_peak(atom: AtomSpec, probe: FieldSpec, ensemble: EnsembleSpec,
                     quad: Optional[Quadrature] = None) -> float:
    """Peak of the coupling-free spectrum; the profile is even, so it sits at zero detuning."""
    if quad is None:
        quad = gaussian_quadrature(ensemble.doppler_fwhm)
    dark = FieldSpec(rabi=0.0, detuning=0.0)
    return float(absorption_at([0.0], atom, probe, dark, ensemble, quad)[0])


def calibrate_od(target_peak_absorption: float, a_peak: Optional[float] = None, *,
                 atom: Optional[AtomSpec] = None, probe: Optional[FieldSpec] = None,
                 ensemble: Optional[EnsembleSpec] = None,
                 quad: Optional[Quadrature] = None) -> float:
    """Optical depth giving ``target_peak_absorption`` at the coupling-free peak.

    Either pass ``a_peak`` directly or the specs to simulate it.
    """
    if not (0.0 <= target_peak_absorption < 1.0):
        raise ValueError(f"target peak absorption must be in [0, 1), got {target_peak_absorption}")
    if target_peak_absorption == 0.0:
        return 0.0
    if a_peak is None:
        if atom is None or probe is None or ensemble is None:
            raise TypeError("need a_peak or atom/probe/ensemble to simulate it")
        a_peak = no_coupling_peak(atom, probe, ensemble, quad)
    if a_peak <= 0:
        raise ValueError("no-coupling peak absorption must be positive")
    return -math.log1p(-target_peak_absorption) / a_peak


@dataclass(frozen=True)
class TwoPass:
    coarse: Spectrum
    fine: Spectrum
    merged: Spectrum


def fine_window(center: float, half_width: float = 25.0, step: float = 0.05,
                max_points: int = 1001) -> np.ndarray:
    """Uniform window around ``center``; the step grows if the window is wide."""
    step = max(step, 2.0 * half_width / (max_points - 1))
    half = int(round(half_width / step))
    return center + np.arange(-half, half + 1) * step


def two_pass_spectrum(atom: AtomSpec, coarse: ScanGrid, probe: FieldSpec, coupling: FieldSpec,
                      ensemble: EnsembleSpec, center: float, half_width: float = 25.0,
                      step: float = 0.05, quad: Optional[Quadrature] = None) -> TwoPass:
    """Coarse full-span pass plus a fine uniform window around ``center``."""
    if quad is None:
        quad = gaussian_quadrature(ensemble.doppler_fwhm)
    c = averaged_spectrum(atom, coarse, probe, coupling, ensemble, quad)
    f = averaged_spectrum(atom, fine_window(center, half_width, step), probe, coupling, ensemble, quad)
    lo, hi = f.detunings[0], f.detunings[-1]
    keep = (c.detunings < lo) | (c.detunings > hi)
    d = np.concatenate([c.detunings[keep], f.detunings])
    a = np.concatenate([c.absorption[keep], f.absorption])
    order = np.argsort(d, kind="stable")
    merged = Spectrum(d[order], a[order], dict(c.meta, fine_center=center))
    return TwoPass(c, f, merged)
