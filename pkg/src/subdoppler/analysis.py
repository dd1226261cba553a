"""Closed-form linewidths and dressed states, plus spectrum analysis.

Covers peak detection, Lorentzian fitting, laser-linewidth convolution and the
coupling-detuning sweep of the sub-Doppler linewidth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.signal import find_peaks as _scipy_find_peaks
from scipy.signal import peak_prominences

from .doppler import Quadrature, gaussian_quadrature, two_pass_spectrum
from .model import AtomSpec, EnsembleSpec, FieldSpec, PeakFit, ScanGrid, Spectrum

__all__ = [
    "LinewidthPair",
    "SweepRow",
    "Peak",
    "FitError",
    "analytic_linewidths",
    "dressed_eigenvalues",
    "find_peaks",
    "lorentzian",
    "fit_lorentzian",
    "convolve_laser_linewidth",
    "sub_doppler_peak",
    "sweep_linewidth",
    "sweep_point",
    "SweepSettings",
]


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinewidthPair:
    nu_plus: float
    nu_minus: float


@dataclass(frozen=True)
class SweepRow:
    coupling_detuning: float
    fwhm_numeric: Optional[float]
    fwhm_analytic: float
    peak_center: Optional[float]
    residual: Optional[float]
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.fwhm_numeric is not None


@dataclass(frozen=True)
class Peak:
    index: int
    detuning: float
    height: float
    prominence: float


def analytic_linewidths(atom: AtomSpec, ensemble: EnsembleSpec, coupling: FieldSpec) -> LinewidthPair:
    """Widths of the two absorption peaks of the Doppler-broadened Lambda system.

    nu_pm = (gamma_sum + 2 D) / 4 * (1 -+ dc / sqrt(dc**2 + 4 wc**2)).
    For blue coupling detuning nu_plus is the narrow (sub-Doppler) one.
    """
    dc, wc = coupling.detuning, coupling.rabi
    if wc < 0:
        raise ValueError("coupling Rabi frequency must be >= 0")
    root = math.hypot(dc, 2.0 * wc)
    if root == 0.0:
        raise ValueError("linewidths indeterminate at zero coupling Rabi frequency and detuning")
    pref = (atom.gamma_sum + 2.0 * ensemble.doppler_fwhm) / 4.0
    ratio = dc / root
    return LinewidthPair(pref * (1.0 - ratio), pref * (1.0 + ratio))


def dressed_eigenvalues(coupling: FieldSpec) -> tuple[float, float]:
    """(lambda_plus, lambda_minus) = (dc +- sqrt(dc**2 + 4 wc**2)) / 2, in MHz.

    These are the probe detunings of the Autler-Townes components for an atom
    at rest. The smaller-magnitude root is computed from the product
    lambda_plus * lambda_minus = -wc**2 to avoid cancellation.
    """
    dc, wc = coupling.detuning, coupling.rabi
    root = math.hypot(dc, 2.0 * wc)
    if dc >= 0:
        lp = 0.5 * (dc + root)
        lm = -wc * wc / lp if lp != 0.0 else 0.0
    else:
        lm = 0.5 * (dc - root)
        lp = -wc * wc / lm
    return lp, lm


def find_peaks(spec: Spectrum, min_prominence: float = 0.02) -> list[Peak]:
    """Local maxima whose prominence is at least ``min_prominence`` of the data range."""
    if len(spec) == 0:
        raise ValueError("empty spectrum")
    if not 0 < min_prominence < 1:
        raise ValueError("min_prominence must be in (0, 1)")
    y = spec.absorption
    span = float(y.max() - y.min())
    if span <= 0:
        return []
    idx, _ = _scipy_find_peaks(y)
    if idx.size == 0:
        return []
    prom = peak_prominences(y, idx)[0]
    keep = prom >= min_prominence * span
    return [
        Peak(int(i), float(spec.detunings[i]), float(y[i]), float(p))
        for i, p in zip(idx[keep], prom[keep])
    ]


def lorentzian(x, center, fwhm, amplitude, offset):
    hw2 = (0.5 * fwhm) ** 2
    return offset + amplitude * hw2 / ((np.asarray(x) - center) ** 2 + hw2)


def _jacobian(x, p):
    center, w, amp, _ = p
    hw2 = 0.25 * w * w
    u = x - center
    den = u * u + hw2
    shape = hw2 / den
    j = np.empty((x.size, 4))
    j[:, 0] = amp * 2.0 * u * hw2 / den ** 2
    j[:, 1] = amp * 0.5 * w * u * u / den ** 2
    j[:, 2] = shape
    j[:, 3] = 1.0
    return j


def _initial_guess(x, y):
    k = int(np.argmax(y))
    ymin, ymax = float(y.min()), float(y.max())
    half = ymin + 0.5 * (ymax - ymin)
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < y.size - 1 and y[right] > half:
        right += 1
    width = float(x[right] - x[left])
    if width <= 0:
        width = float(x[-1] - x[0]) / 4
    return np.array([float(x[k]), width, ymax - ymin, ymin])


def fit_lorentzian(spec: Spectrum, window: Optional[Sequence[float]] = None,
                   max_iter: int = 200, rtol: float = 1e-10) -> PeakFit:
    """Levenberg-Marquardt fit of a single Lorentzian plus constant offset.

    Starts from center = argmax, amplitude = max - min, width = half-maximum
    crossing distance and offset = min over the window. Stops when every
    parameter moves by less than ``rtol`` relative (center against the width,
    offset against the amplitude), or when no damped step can
    lower the residual any further.
    """
    s = spec if window is None else spec.window(*window)
    x, y = s.detunings, s.absorption
    if x.size < 8:
        raise FitError(f"fit window holds {x.size} samples, need at least 8")
    k = int(np.argmax(y))
    if k == 0 or k == x.size - 1 or y[k] <= y.min():
        raise FitError("fit window does not contain an interior maximum")

    p = _initial_guess(x, y)
    r = lorentzian(x, *p) - y
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        j = _jacobian(x, p)
        jtj = j.T @ j
        grad = j.T @ r
        diag = np.diag(jtj).copy()
        diag[diag == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                if lam > 1e20:
                    break
                continue
            trial = p + step
            r_trial = lorentzian(x, *trial) - y
            cost_trial = float(r_trial @ r_trial)
            if cost_trial <= cost:
                break
            lam *= 10.0
            if lam > 1e20:
                break
        if lam > 1e20:
            # no downhill step left: already at the least-squares minimum
            converged = True
            break
        # center and offset can sit at zero; measure them against width and amplitude
        scale = np.abs(trial[[1, 1, 2, 2]])
        rel = np.max(np.abs(step) / np.maximum(np.maximum(np.abs(trial), scale), 1e-300))
        p, r, cost = trial, r_trial, cost_trial
        lam = max(lam / 10.0, 1e-15)
        if rel < rtol:
            converged = True
            break
    if not converged:
        raise FitError(f"Lorentzian fit did not converge in {max_iter} iterations")
    center, w, amp, offset = p
    w = abs(w)
    if not (w > 0 and amp > 0):
        raise FitError(f"fit ended on a non-peak (fwhm={w}, amplitude={amp})")
    rms = math.sqrt(cost / x.size)
    return PeakFit(float(center), float(w), float(amp), float(offset), rms, it)


def convolve_laser_linewidth(spec: Spectrum, total_linewidth_fwhm: float) -> Spectrum:
    """Convolve with a unit-area Lorentzian of the given FWHM on the same grid.

    Near the ends the kernel is renormalized over the part of it that still
    overlaps the grid.
    """
    if total_linewidth_fwhm < 0:
        raise ValueError("linewidth must be >= 0")
    if not spec.is_uniform():
        raise ValueError("laser-linewidth convolution needs a uniform detuning grid")
    if total_linewidth_fwhm == 0 or len(spec) < 2:
        return Spectrum(spec.detunings.copy(), spec.absorption.copy(), dict(spec.meta))
    n = len(spec)
    h = (spec.detunings[-1] - spec.detunings[0]) / (n - 1)
    offsets = np.arange(-(n - 1), n) * h
    kernel = lorentzian(offsets, 0.0, total_linewidth_fwhm, 1.0, 0.0)
    kernel *= h / (math.pi * 0.5 * total_linewidth_fwhm)
    num = np.convolve(spec.absorption, kernel, mode="full")[n - 1: 2 * n - 1]
    norm = np.convolve(np.ones(n), kernel, mode="full")[n - 1: 2 * n - 1]
    meta = dict(spec.meta, laser_linewidth=total_linewidth_fwhm)
    return Spectrum(spec.detunings.copy(), num / norm, meta)


def sub_doppler_peak(spec: Spectrum, target: float, min_prominence: float = 0.02) -> Optional[Peak]:
    """The detected peak closest to ``target`` (usually lambda_plus)."""
    peaks = find_peaks(spec, min_prominence)
    if not peaks:
        return None
    return min(peaks, key=lambda pk: abs(pk.detuning - target))


@dataclass(frozen=True)
class SweepSettings:
    coarse: ScanGrid = ScanGrid(-1500.0, 1500.0, 3001)
    fine_half_width: float = 25.0
    fine_step: float = 0.05
    window_factor: float = 5.0
    min_prominence: float = 0.02


def sweep_point(atom: AtomSpec, probe: FieldSpec, coupling: FieldSpec, ensemble: EnsembleSpec,
                settings: SweepSettings = SweepSettings(),
                quad: Optional[Quadrature] = None, laser_linewidth: float = 0.0):
    """Simulate, locate and fit the narrow peak for one coupling setting.

    Returns (SweepRow, TwoPass). The fine window and fit window both scale
    with the analytic narrow width so wide peaks at small detuning still fit.
    """
    analytic = analytic_linewidths(atom, ensemble, coupling).nu_plus
    lp, _ = dressed_eigenvalues(coupling)
    if abs(coupling.detuning) <= 2.0 * coupling.rabi:
        row = SweepRow(coupling.detuning, None, analytic, None, None,
                       "outside the sub-Doppler regime |dc| > 2 wc")
        return row, None
    if coupling.detuning < 0:
        # mirror image: the narrow component is lambda_minus, width nu_minus
        analytic = analytic_linewidths(atom, ensemble, coupling).nu_minus
        lp = dressed_eigenvalues(coupling)[1]
    half = max(settings.fine_half_width, settings.window_factor * analytic)
    passes = two_pass_spectrum(atom, settings.coarse, probe, coupling, ensemble,
                               center=lp, half_width=half, step=settings.fine_step, quad=quad)
    fine = passes.fine
    if laser_linewidth > 0:
        fine = convolve_laser_linewidth(fine, laser_linewidth)
    peak = sub_doppler_peak(fine, lp, settings.min_prominence)
    if peak is None:
        return SweepRow(coupling.detuning, None, analytic, None, None, "no peak near lambda_plus"), passes
    lo = peak.detuning - settings.window_factor * analytic
    hi = peak.detuning + settings.window_factor * analytic
    try:
        fit = fit_lorentzian(fine, (lo, hi))
    except FitError as exc:
        return SweepRow(coupling.detuning, None, analytic, peak.detuning, None, str(exc)), passes
    return SweepRow(coupling.detuning, fit.fwhm, analytic, fit.center, fit.residual_norm), passes


def sweep_linewidth(detunings: Sequence[float], atom: AtomSpec, probe: FieldSpec,
                    coupling: FieldSpec, ensemble: EnsembleSpec,
                    settings: SweepSettings = SweepSettings(),
                    quad: Optional[Quadrature] = None,
                    laser_linewidth: float = 0.0) -> list[SweepRow]:
    """Narrow-peak FWHM versus coupling detuning, one row per input value in order.

    A failing row carries empty numeric fields and a note; the sweep goes on.
    """
    if quad is None:
        quad = gaussian_quadrature(ensemble.doppler_fwhm)
    rows = []
    for dc in detunings:
        c = replace(coupling, detuning=float(dc))
        try:
            row, _ = sweep_point(atom, probe, c, ensemble, settings, quad, laser_linewidth)
        except Exception as exc:  # recorded per row
            try:
                analytic = analytic_linewidths(atom, ensemble, c).nu_plus
            except ValueError:
                analytic = float("nan")
            row = SweepRow(float(dc), None, analytic, None, None, f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return rows
