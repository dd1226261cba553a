"""Parameter types, validation, the cesium D2 preset and the config file format.

Unit convention: every frequency, rate and detuning is an ordinary frequency
in MHz. Factors of 2*pi are absorbed uniformly, so a decay rate of 5.3 MHz and
a Doppler width of 560 MHz enter the equations as the bare numbers 5.3 and 560.
Positive detuning means blue (laser above the atomic transition).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "AtomSpec",
    "FieldSpec",
    "EnsembleSpec",
    "ScanGrid",
    "Spectrum",
    "PeakFit",
    "Config",
    "ConfigError",
    "Issue",
    "cesium_d2_preset",
    "validate",
    "default_config",
    "load_config",
    "parse_config",
    "format_config",
    "write_config",
    "apply_overrides",
    "CONFIG_KEYS",
    "DEFAULT_PROBE_RABI",
    "with_coupling",
]

# Weak enough that probe optical pumping into |2> stays below ~1% of the
# ground-state relaxation at the default gamma12 (see bloch.build_generator).
DEFAULT_PROBE_RABI = 0.005


@dataclass(frozen=True)
class AtomSpec:
    """Decay parameters of the Lambda system, all in MHz."""

    gamma31: float
    gamma32: float
    gamma12: float

    @property
    def gamma_sum(self) -> float:
        return self.gamma31 + self.gamma32


@dataclass(frozen=True)
class FieldSpec:
    """One laser field.

    ``rabi`` follows the convention where the resonant dressed-state splitting
    is ``2 * rabi``; the generalized splitting is ``sqrt(detuning**2 + 4*rabi**2)``.
    """

    rabi: float
    detuning: float = 0.0
    linewidth: Optional[float] = None


@dataclass(frozen=True)
class EnsembleSpec:
    doppler_fwhm: float
    p1_init: float = 0.5
    p2_init: float = 0.5


@dataclass(frozen=True)
class ScanGrid:
    start: float
    stop: float
    n: int

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n)

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.n - 1)


@dataclass(frozen=True)
class Spectrum:
    """Probe detunings (MHz) with a per-sample value and the parameters behind it.

    ``absorption`` holds the normalized absorption coefficient, or transmission
    after :func:`subdoppler.doppler.transmission`; ``meta["quantity"]`` says which.
    """

    detunings: np.ndarray
    absorption: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        a = np.asarray(self.absorption, dtype=float)
        if d.shape != a.shape or d.ndim != 1:
            raise ValueError("detunings and absorption must be 1-D arrays of equal length")
        if d.size > 1 and not np.all(np.diff(d) > 0):
            raise ValueError("detunings must be strictly increasing")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "absorption", a)

    def __len__(self) -> int:
        return self.detunings.size

    def window(self, lo: float, hi: float) -> "Spectrum":
        mask = (self.detunings >= lo) & (self.detunings <= hi)
        return Spectrum(self.detunings[mask], self.absorption[mask], dict(self.meta))

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        if len(self) < 3:
            return True
        steps = np.diff(self.detunings)
        return bool(np.all(np.abs(steps - steps.mean()) <= rtol * abs(steps.mean())))


@dataclass(frozen=True)
class PeakFit:
    """Lorentzian fit ``offset + amplitude * (w/2)**2 / ((x - center)**2 + (w/2)**2)``."""

    center: float
    fwhm: float
    amplitude: float
    offset: float
    residual_norm: float
    iterations: int = 0


@dataclass(frozen=True)
class Issue:
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


class ConfigError(ValueError):
    """Raised with every violated constraint collected in ``issues``."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class Config:
    atom: AtomSpec
    ensemble: EnsembleSpec
    probe: FieldSpec
    coupling: FieldSpec
    grid: ScanGrid
    od0: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "gamma31": self.atom.gamma31,
            "gamma32": self.atom.gamma32,
            "gamma12": self.atom.gamma12,
            "doppler_fwhm": self.ensemble.doppler_fwhm,
            "p1_init": self.ensemble.p1_init,
            "p2_init": self.ensemble.p2_init,
            "probe_rabi": self.probe.rabi,
            "probe_linewidth": self.probe.linewidth,
            "coupling_rabi": self.coupling.rabi,
            "coupling_detuning": self.coupling.detuning,
            "coupling_linewidth": self.coupling.linewidth,
            "grid_start": self.grid.start,
            "grid_stop": self.grid.stop,
            "grid_n": self.grid.n,
            "od0": self.od0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        return cls(
            atom=AtomSpec(d["gamma31"], d["gamma32"], d["gamma12"]),
            ensemble=EnsembleSpec(d["doppler_fwhm"], d["p1_init"], d["p2_init"]),
            probe=FieldSpec(d["probe_rabi"], 0.0, d.get("probe_linewidth")),
            coupling=FieldSpec(d["coupling_rabi"], d["coupling_detuning"], d.get("coupling_linewidth")),
            grid=ScanGrid(d["grid_start"], d["grid_stop"], d["grid_n"]),
            od0=d.get("od0"),
        )


def cesium_d2_preset(thermal_populations: bool = False):
    """Cesium D2 parameters: (AtomSpec, EnsembleSpec, coupling FieldSpec).

    Total decay 5.3 MHz split evenly between the two ground states, 560 MHz
    Doppler width, 90 MHz coupling Rabi frequency on resonance. With
    ``thermal_populations`` the ground states start at 7/16 and 9/16 (F=3 and
    F=4 sublevel counts) instead of 1/2 each.
    """
    atom = AtomSpec(gamma31=2.65, gamma32=2.65, gamma12=0.001)
    if thermal_populations:
        ensemble = EnsembleSpec(doppler_fwhm=560.0, p1_init=7 / 16, p2_init=9 / 16)
    else:
        ensemble = EnsembleSpec(doppler_fwhm=560.0, p1_init=0.5, p2_init=0.5)
    coupling = FieldSpec(rabi=90.0, detuning=0.0)
    return atom, ensemble, coupling


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_atom(atom: AtomSpec, issues: list) -> None:
    for name in ("gamma31", "gamma32", "gamma12"):
        v = getattr(atom, name)
        if not _finite(v):
            issues.append(Issue(name, f"must be a finite number, got {v!r}"))
        elif v < 0:
            issues.append(Issue(name, f"must be >= 0, got {v}"))
    if _finite(atom.gamma31) and _finite(atom.gamma32) and atom.gamma31 + atom.gamma32 <= 0:
        issues.append(Issue("gamma31+gamma32", "total spontaneous decay must be > 0"))


def _check_ensemble(ens: EnsembleSpec, issues: list) -> None:
    if not _finite(ens.doppler_fwhm) or ens.doppler_fwhm <= 0:
        issues.append(Issue("doppler_fwhm", f"must be > 0, got {ens.doppler_fwhm!r}"))
    ok = True
    for name in ("p1_init", "p2_init"):
        v = getattr(ens, name)
        if not _finite(v) or v < 0:
            issues.append(Issue(name, f"must be >= 0, got {v!r}"))
            ok = False
    if ok and abs(ens.p1_init + ens.p2_init - 1.0) > 1e-12:
        issues.append(
            Issue("p1_init+p2_init", f"initial populations must sum to 1, got {ens.p1_init + ens.p2_init}")
        )


def _check_field(f: FieldSpec, prefix: str, issues: list) -> None:
    if not _finite(f.rabi) or f.rabi < 0:
        issues.append(Issue(f"{prefix}_rabi", f"must be >= 0, got {f.rabi!r}"))
    if not _finite(f.detuning):
        issues.append(Issue(f"{prefix}_detuning", f"must be finite, got {f.detuning!r}"))
    if f.linewidth is not None and (not _finite(f.linewidth) or f.linewidth < 0):
        issues.append(Issue(f"{prefix}_linewidth", f"must be >= 0, got {f.linewidth!r}"))


def _check_grid(grid: ScanGrid, issues: list) -> None:
    if not isinstance(grid.n, (int, np.integer)) or grid.n < 2:
        issues.append(Issue("grid_n", f"need at least 2 points, got {grid.n!r}"))
    if not (_finite(grid.start) and _finite(grid.stop)) or grid.stop <= grid.start:
        issues.append(Issue("grid_stop", f"must exceed grid_start ({grid.start!r} .. {grid.stop!r})"))


def validate(atom: AtomSpec, ensemble: EnsembleSpec, probe: FieldSpec, coupling: FieldSpec,
             grid: Optional[ScanGrid] = None, od0: Optional[float] = None) -> Config:
    """Check every invariant at once; raise :class:`ConfigError` listing all violations."""
    issues: list = []
    _check_atom(atom, issues)
    _check_ensemble(ensemble, issues)
    _check_field(probe, "probe", issues)
    _check_field(coupling, "coupling", issues)
    if _finite(probe.rabi) and probe.rabi == 0:
        issues.append(Issue("probe_rabi", "probe response undefined at zero probe Rabi"))
    if grid is None:
        grid = default_grid()
    _check_grid(grid, issues)
    if od0 is not None and (not _finite(od0) or od0 < 0):
        issues.append(Issue("od0", f"must be >= 0, got {od0!r}"))
    if issues:
        raise ConfigError(issues)
    return Config(atom, ensemble, probe, coupling, grid, od0)


def default_grid() -> ScanGrid:
    return ScanGrid(-1500.0, 1500.0, 3001)


def default_config() -> Config:
    atom, ensemble, coupling = cesium_d2_preset()
    return Config(atom, ensemble, FieldSpec(DEFAULT_PROBE_RABI), coupling, default_grid(), None)


# -- config file -------------------------------------------------------------

_INT_KEYS = ("grid_n",)
_OPTIONAL_KEYS = ("probe_linewidth", "coupling_linewidth", "od0")
CONFIG_KEYS = tuple(default_config().to_dict())


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _OPTIONAL_KEYS and raw.lower() in ("", "none"):
        return None
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            f = float(raw)
            if not f.is_integer():
                raise
            return int(f)
    return float(raw)


def parse_config(text: str, base: Optional[Config] = None, source: str = "<config>") -> Config:
    """Parse ``key = value`` lines on top of ``base`` (the preset by default).

    Lines starting with ``#`` are comments. Unknown keys, duplicate keys and
    unparsable values are collected and reported together.
    """
    values = (base or default_config()).to_dict()
    issues = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            issues.append(Issue(f"{source}:{lineno}", f"expected 'key = value', got {stripped!r}"))
            continue
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in values:
            issues.append(Issue(f"{source}:{lineno}", f"unknown key {key!r}"))
            continue
        if key in seen:
            issues.append(Issue(f"{source}:{lineno}", f"duplicate key {key!r}"))
            continue
        seen.add(key)
        try:
            values[key] = _parse_value(key, raw)
        except ValueError:
            issues.append(Issue(f"{source}:{lineno}", f"bad value for {key}: {raw!r}"))
    if issues:
        raise ConfigError(issues)
    return Config.from_dict(values)


def apply_overrides(config: Config, overrides: dict) -> Config:
    values = config.to_dict()
    issues = []
    for key, raw in overrides.items():
        if key not in values:
            issues.append(Issue(key, "unknown key"))
            continue
        try:
            values[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
        except ValueError:
            issues.append(Issue(key, f"bad value {raw!r}"))
    if issues:
        raise ConfigError(issues)
    return Config.from_dict(values)


def load_config(path, base: Optional[Config] = None) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([Issue(str(path), f"cannot read config file ({exc.strerror})")]) from exc
    return parse_config(text, base=base, source=str(path))


def format_config(config: Config) -> str:
    lines = []
    for key, value in config.to_dict().items():
        if value is None:
            continue
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def write_config(config: Config, path) -> None:
    Path(path).write_text(format_config(config))


def with_coupling(config: Config, **changes) -> Config:
    return replace(config, coupling=replace(config.coupling, **changes))

