"""Probe absorption spectroscopy of a Doppler-broadened Lambda-type three-level atom.

Steady-state optical Bloch solutions are averaged over the Maxwell-Boltzmann
velocity distribution to give EIT dips, Autler-Townes doublets and the narrow
sub-Doppler peak that appears for a strongly blue-detuned coupling laser.
All frequencies are in MHz.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .analysis import (
    LinewidthPair,
    SweepRow,
    analytic_linewidths,
    convolve_laser_linewidth,
    dressed_eigenvalues,
    find_peaks,
    fit_lorentzian,
    sweep_linewidth,
)
from .bloch import DensityMatrix, VelocityClass, build_generator, probe_response, steady_state
from .doppler import Quadrature, averaged_spectrum, calibrate_od, gaussian_quadrature, transmission
from .model import (
    AtomSpec,
    Config,
    ConfigError,
    EnsembleSpec,
    FieldSpec,
    PeakFit,
    ScanGrid,
    Spectrum,
    cesium_d2_preset,
    validate,
)

__all__ = [
    "BACKEND",
    "AtomSpec", "FieldSpec", "EnsembleSpec", "ScanGrid", "Spectrum", "PeakFit",
    "Config", "ConfigError", "cesium_d2_preset", "validate",
    "VelocityClass", "DensityMatrix", "build_generator", "steady_state", "probe_response",
    "Quadrature", "gaussian_quadrature", "averaged_spectrum", "transmission", "calibrate_od",
    "LinewidthPair", "SweepRow", "analytic_linewidths", "dressed_eigenvalues", "find_peaks",
    "fit_lorentzian", "convolve_laser_linewidth", "sweep_linewidth",
]
