import pytest

from subdoppler.analysis import SweepSettings, sweep_point
from subdoppler.doppler import averaged_spectrum, gaussian_quadrature
from subdoppler.model import FieldSpec, default_config


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def quad(cfg):
    return gaussian_quadrature(cfg.ensemble.doppler_fwhm)


@pytest.fixture(scope="session")
def no_coupling_spectrum(cfg, quad):
    return averaged_spectrum(cfg.atom, cfg.grid, cfg.probe, FieldSpec(0.0), cfg.ensemble, quad)


@pytest.fixture(scope="session")
def eit_spectrum(cfg, quad):
    return averaged_spectrum(cfg.atom, cfg.grid, cfg.probe, FieldSpec(90.0, 0.0), cfg.ensemble, quad)


@pytest.fixture(scope="session")
def blue_812(cfg, quad):
    """(SweepRow, TwoPass) for the large blue coupling detuning."""
    return sweep_point(cfg.atom, cfg.probe, FieldSpec(90.0, 812.0), cfg.ensemble, SweepSettings(), quad)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title, detail in sorted(RESULTS):
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}: {detail}")
