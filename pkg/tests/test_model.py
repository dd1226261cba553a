import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdoppler.model import (
    CONFIG_KEYS,
    AtomSpec,
    Config,
    ConfigError,
    EnsembleSpec,
    FieldSpec,
    ScanGrid,
    Spectrum,
    cesium_d2_preset,
    default_config,
    format_config,
    load_config,
    parse_config,
    validate,
    write_config,
)


def test_preset_values():
    atom, ensemble, coupling = cesium_d2_preset()
    assert atom.gamma31 + atom.gamma32 == pytest.approx(5.3, abs=1e-12)
    assert atom.gamma31 == atom.gamma32 == 2.65
    assert atom.gamma12 == 0.001
    assert ensemble.doppler_fwhm == 560
    assert (ensemble.p1_init, ensemble.p2_init) == (0.5, 0.5)
    assert (coupling.rabi, coupling.detuning) == (90, 0)


def test_thermal_variant_populations():
    _, ensemble, _ = cesium_d2_preset(thermal_populations=True)
    assert ensemble.p1_init == 7 / 16 and ensemble.p2_init == 9 / 16


def test_preset_validates():
    atom, ensemble, coupling = cesium_d2_preset()
    config = validate(atom, ensemble, FieldSpec(0.005), coupling)
    assert isinstance(config, Config)


def test_population_sum_rejected():
    atom, _, coupling = cesium_d2_preset()
    with pytest.raises(ConfigError) as err:
        validate(atom, EnsembleSpec(560, 0.6, 0.6), FieldSpec(0.005), coupling)
    assert [i.field for i in err.value.issues] == ["p1_init+p2_init"]


def test_zero_probe_rabi_rejected():
    atom, ensemble, coupling = cesium_d2_preset()
    with pytest.raises(ConfigError, match="zero probe Rabi"):
        validate(atom, ensemble, FieldSpec(0.0), coupling)


def test_all_violations_reported_together():
    with pytest.raises(ConfigError) as err:
        validate(AtomSpec(-1, 0.5, -0.1), EnsembleSpec(0, 0.3, 0.3),
                 FieldSpec(-2, 0, -1.0), FieldSpec(1, math.nan), ScanGrid(5, 1, 1))
    fields = {i.field for i in err.value.issues}
    assert {"gamma31", "gamma12", "doppler_fwhm", "p1_init+p2_init", "probe_rabi",
            "probe_linewidth", "coupling_detuning", "grid_n", "grid_stop"} <= fields


def test_zero_total_decay_rejected():
    with pytest.raises(ConfigError, match="total spontaneous decay"):
        validate(AtomSpec(0, 0, 0), EnsembleSpec(560), FieldSpec(0.01), FieldSpec(90))


def test_config_keys_are_the_documented_set():
    assert set(CONFIG_KEYS) == {
        "gamma31", "gamma32", "gamma12", "doppler_fwhm", "p1_init", "p2_init",
        "probe_rabi", "probe_linewidth", "coupling_rabi", "coupling_detuning",
        "coupling_linewidth", "grid_start", "grid_stop", "grid_n", "od0",
    }


def test_parse_config_comments_and_overrides():
    text = "# Cs D2, blue coupling\ncoupling_detuning = 812\n\n  grid_n = 11\nod0 = 0.734\n"
    c = parse_config(text)
    assert c.coupling.detuning == 812.0
    assert c.grid.n == 11 and isinstance(c.grid.n, int)
    assert c.od0 == 0.734
    assert c.atom == default_config().atom


@pytest.mark.parametrize("text, fragment", [
    ("bogus = 1\n", "unknown key 'bogus'"),
    ("gamma31 2.65\n", "expected 'key = value'"),
    ("gamma31 = fast\n", "bad value"),
    ("gamma31 = 1\ngamma31 = 2\n", "duplicate"),
])
def test_parse_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text, source="x.cfg")


def test_missing_config_file_names_path(tmp_path):
    path = tmp_path / "nope.cfg"
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config(path)


def test_preset_round_trip_is_exact(tmp_path):
    c = default_config()
    path = tmp_path / "preset.cfg"
    write_config(c, path)
    assert load_config(path) == c


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(finite, finite, finite, finite, finite, st.integers(2, 10 ** 6),
       st.one_of(st.none(), finite), st.one_of(st.none(), finite))
def test_config_text_round_trip_bit_for_bit(g31, g12, d, dc, start, n, od0, lw):
    c = default_config()
    c = Config.from_dict(dict(c.to_dict(), gamma31=g31, gamma12=g12, doppler_fwhm=d,
                              coupling_detuning=dc, grid_start=start, grid_n=n, od0=od0,
                              probe_linewidth=lw))
    back = parse_config(format_config(c))
    for key, value in c.to_dict().items():
        other = back.to_dict()[key]
        if value is None:
            assert other is None
        else:
            assert math.copysign(1, other) == math.copysign(1, value) and other == value


def test_spectrum_invariants():
    with pytest.raises(ValueError):
        Spectrum([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        Spectrum([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    s = Spectrum([0, 1, 2, 3], [0, 1, 0, 0])
    assert s.is_uniform()
    assert len(s.window(0.5, 2.5)) == 2


def test_scan_grid_points():
    g = ScanGrid(-1.0, 1.0, 5)
    assert list(g.points()) == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert g.step == 0.5
