import math

import numpy as np
import pytest
from scipy.special import erf

from subdoppler.analysis import SweepSettings, find_peaks, fit_lorentzian, sweep_point
from subdoppler.bloch import SingularGeneratorError
from subdoppler.doppler import (
    FWHM_PER_SIGMA,
    absorption_at,
    averaged_spectrum,
    calibrate_od,
    fine_window,
    gauss_hermite_quadrature,
    gaussian_quadrature,
    no_coupling_peak,
    transmission,
    two_pass_spectrum,
)
from subdoppler.model import AtomSpec, EnsembleSpec, FieldSpec, ScanGrid, Spectrum

from .oracles import exact_voigt_fwhm, halfmax_width, olivero_voigt_fwhm


def test_quadrature_sigma_and_normalization():
    q = gaussian_quadrature(560.0, 2001, 4)
    assert 560.0 / FWHM_PER_SIGMA == pytest.approx(237.81, abs=5e-3)
    assert q.nodes[-1] == pytest.approx(4 * 237.8099, rel=1e-5)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(q.nodes) > 0)
    assert np.allclose(q.nodes, -q.nodes[::-1], atol=1e-9)
    assert np.all(q.weights >= 0)
    assert np.argmax(q.weights) == 1000 and q.nodes[1000] == 0.0


@pytest.mark.parametrize("n, span", [(10, 4), (12, 4), (2000, 4), (11, 2.5)])
def test_quadrature_rejects_bad_arguments(n, span):
    with pytest.raises(ValueError):
        gaussian_quadrature(560.0, n, span)


def test_quadrature_converges_on_gaussian_integrand():
    sigma = 560.0 / FWHM_PER_SIGMA

    def integrand(x):
        return np.exp(-0.5 * (x / sigma) ** 2)

    coarse, fine = gaussian_quadrature(560.0, 11, 4), gaussian_quadrature(560.0, 2001, 4)
    i_coarse = coarse.weights @ integrand(coarse.nodes)
    i_fine = fine.weights @ integrand(fine.nodes)
    assert abs(i_coarse - i_fine) < 1e-3
    # Gaussian measure truncated at +-4 sigma, integrated analytically
    exact = erf(4.0) / erf(4.0 / math.sqrt(2.0)) / math.sqrt(2.0)
    assert i_fine == pytest.approx(exact, rel=1e-5)


def test_gauss_hermite_alternative_agrees_on_smooth_integrand():
    q = gauss_hermite_quadrature(560.0, 61)
    sigma = 560.0 / FWHM_PER_SIGMA
    val = q.weights @ np.exp(-0.5 * (q.nodes / sigma) ** 2)
    assert val == pytest.approx(1 / math.sqrt(2), rel=1e-10)


@pytest.mark.slow
def test_no_coupling_profile_is_voigt(no_coupling_spectrum):
    s = no_coupling_spectrum
    width = halfmax_width(s.detunings, s.absorption)
    assert olivero_voigt_fwhm(5.3, 560.0) == pytest.approx(562.84, abs=0.01)
    assert width == pytest.approx(exact_voigt_fwhm(5.3, 560.0), rel=2e-3)
    assert width == pytest.approx(562.8, rel=0.01)


@pytest.mark.slow
def test_no_coupling_profile_is_symmetric(no_coupling_spectrum):
    a = no_coupling_spectrum.absorption
    assert np.allclose(a, a[::-1], rtol=1e-6, atol=0)
    assert len(find_peaks(no_coupling_spectrum)) == 1


@pytest.mark.slow
def test_absorption_nonnegative(no_coupling_spectrum, eit_spectrum, blue_812):
    for s in (no_coupling_spectrum, eit_spectrum, blue_812[1].merged):
        assert s.absorption.min() >= -1e-9


@pytest.mark.slow
def test_eit_dip_between_doublet(eit_spectrum):
    s = eit_spectrum
    peaks = find_peaks(s)
    assert [round(p.detuning) for p in peaks] == [-90, 90]
    centre = s.absorption[np.argmin(np.abs(s.detunings))]
    assert centre < 0.5 * min(p.height for p in peaks)


@pytest.mark.slow
def test_resonant_coupling_raises_peak_absorption(no_coupling_spectrum, eit_spectrum):
    # the coupling laser pumps |2> into |1>
    assert eit_spectrum.absorption.max() > no_coupling_spectrum.absorption.max()


@pytest.mark.slow
@pytest.mark.parametrize("coupling", [FieldSpec(0.0), FieldSpec(90.0, 0.0), FieldSpec(90.0, 812.0)])
def test_doubling_nodes_leaves_spectrum_unchanged(cfg, coupling):
    grid = np.unique(np.concatenate([np.linspace(-1500, 1500, 601), np.linspace(810, 835, 26)]))
    base = absorption_at(grid, cfg.atom, cfg.probe, coupling, cfg.ensemble, gaussian_quadrature(560, 2001))
    dense = absorption_at(grid, cfg.atom, cfg.probe, coupling, cfg.ensemble, gaussian_quadrature(560, 4001))
    rel = np.abs(dense - base) / np.abs(base)
    # Where the resonant velocity class meets the hard +-4 sigma cut-off the
    # integrand peaks at the end node and the trapezoid error is O(h^2); that
    # band carries ~1e-3 of the peak absorption.
    body = base >= 2e-3 * base.max()
    assert rel[body].max() < 1e-3
    assert rel.max() < 2e-2
    edge = grid[rel >= 1e-3]
    assert np.all((np.abs(edge) > 900) & (np.abs(edge) < 1050))


def test_narrow_peak_width_follows_doppler_width(cfg):
    # the narrow component is the velocity distribution seen through a
    # compressed detuning map; while D << dc that map is close to linear and
    # the width scales with D (near dc ~ D the image turns asymmetric)
    widths = []
    for doppler in (280.0, 560.0):
        ens = EnsembleSpec(doppler, 0.5, 0.5)
        row, _ = sweep_point(cfg.atom, cfg.probe, FieldSpec(90.0, 2000.0), ens,
                             SweepSettings(coarse=ScanGrid(-1500, 1500, 301)))
        widths.append(row.fwhm_numeric)
    assert widths[1] / widths[0] == pytest.approx(2.0, rel=0.05)


def test_transmission_cases():
    s = Spectrum([-1.0, 0.0, 1.0], [0.2, 1.0, 0.5])
    assert np.all(transmission(s, 0.0).absorption == 1.0)
    t = transmission(s, 0.734)
    assert t.absorption[1] == pytest.approx(0.480, abs=5e-4)
    assert 1 - math.exp(-(-math.log(0.48))) == pytest.approx(0.52)
    assert np.all(np.diff(t.absorption[np.argsort(s.absorption)]) < 0)
    assert t.meta["quantity"] == "transmission"
    assert np.all((t.absorption > 0) & (t.absorption <= 1))
    with pytest.raises(ValueError):
        transmission(s, -1.0)


def test_calibrate_od_closed_form():
    assert calibrate_od(0.52, a_peak=1.0) == pytest.approx(-math.log(0.48))
    assert calibrate_od(0.52, a_peak=0.25) == pytest.approx(-math.log(0.48) / 0.25)
    assert calibrate_od(0.0, a_peak=0.3) == 0.0
    assert calibrate_od(1e-12, a_peak=1.0) == pytest.approx(1e-12)
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            calibrate_od(bad, a_peak=1.0)


def test_calibrate_od_round_trip(cfg, quad):
    od0 = calibrate_od(0.52, atom=cfg.atom, probe=cfg.probe, ensemble=cfg.ensemble, quad=quad)
    grid = np.linspace(-2, 2, 9)
    spec = averaged_spectrum(cfg.atom, grid, cfg.probe, FieldSpec(0.0), cfg.ensemble, quad)
    peak_absorption = 1 - transmission(spec, od0).absorption.min()
    assert peak_absorption == pytest.approx(0.52, abs=1e-6)
    assert spec.absorption.argmax() == 4
    assert no_coupling_peak(cfg.atom, cfg.probe, cfg.ensemble, quad) == pytest.approx(spec.absorption[4])


def test_fine_window_is_uniform_and_capped():
    w = fine_window(821.86, 25.0, 0.05)
    assert w.size == 1001 and np.allclose(np.diff(w), 0.05)
    wide = fine_window(368.0, 158.8, 0.05)
    assert wide.size <= 1001 and wide[0] <= 368.0 - 158.0


def test_two_pass_merge(cfg, quad):
    coarse = ScanGrid(-1500, 1500, 301)
    tp = two_pass_spectrum(cfg.atom, coarse, cfg.probe, FieldSpec(90.0, 812.0), cfg.ensemble,
                           center=821.86, half_width=10.0, step=0.1, quad=quad)
    assert len(tp.fine) == 201
    m = tp.merged
    assert np.all(np.diff(m.detunings) > 0)
    inside = (m.detunings >= tp.fine.detunings[0]) & (m.detunings <= tp.fine.detunings[-1])
    assert np.array_equal(m.detunings[inside], tp.fine.detunings)
    assert len(m) == len(tp.fine) + np.sum((coarse.points() < 811.86) | (coarse.points() > 831.86))


def test_spectrum_is_deterministic(cfg, quad):
    grid = np.linspace(800, 840, 21)
    a = averaged_spectrum(cfg.atom, grid, cfg.probe, FieldSpec(90.0, 812.0), cfg.ensemble, quad)
    b = averaged_spectrum(cfg.atom, grid[::-1].copy()[::-1], cfg.probe, FieldSpec(90.0, 812.0), cfg.ensemble, quad)
    assert np.array_equal(a.absorption, b.absorption)


def test_solver_failure_reports_coordinates(quad):
    # no decay and no relaxation at all: every velocity class has a whole
    # family of stationary states
    with pytest.raises(SingularGeneratorError, match=r"probe detuning 5\.0 MHz"):
        absorption_at([5.0], AtomSpec(0.0, 0.0, 0.0), FieldSpec(0.005), FieldSpec(0.0),
                      EnsembleSpec(560.0), quad)
