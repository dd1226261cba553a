"""Command-line interface.

Parameter precedence, lowest to highest: cesium D2 preset, ``--config`` file,
``--set key=value`` overrides, dedicated flags such as ``--no-coupling``.

Numbers in CSV output use Python's shortest round-trip float repr, so a file
read back reproduces the values exactly and identical inputs give
byte-identical files. Exit codes: 0 success, 2 usage or config error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    FitError,
    SweepSettings,
    analytic_linewidths,
    convolve_laser_linewidth,
    dressed_eigenvalues,
    fit_lorentzian,
    sweep_linewidth,
)
from .bloch import SingularGeneratorError
from .doppler import averaged_spectrum, calibrate_od, fine_window, gaussian_quadrature, transmission
from .model import (
    AtomSpec,
    Config,
    ConfigError,
    EnsembleSpec,
    FieldSpec,
    Issue,
    Spectrum,
    apply_overrides,
    default_config,
    format_config,
    load_config,
    validate,
)
from .svg import write_line_plot

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
DEFAULT_TARGET_ABSORPTION = 0.52


class UsageError(Exception):
    pass


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


# -- configuration -----------------------------------------------------------

def _parse_sets(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError([Issue(item, "override must look like key=value")])
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve_config(args) -> Config:
    config = default_config()
    if getattr(args, "config", None):
        config = load_config(args.config, base=config)
    config = apply_overrides(config, _parse_sets(getattr(args, "set", None)))
    if getattr(args, "no_coupling", False):
        config = replace(config, coupling=replace(config.coupling, rabi=0.0))
    return validate(config.atom, config.ensemble, config.probe, config.coupling, config.grid, config.od0)


def _manifest(command: str, config: Config, options: dict) -> dict:
    return {
        "tool": "subdoppler",
        "version": __version__,
        "command": command,
        "config": config.to_dict(),
        "options": options,
    }


def _header_lines(manifest: dict) -> list[str]:
    lines = [f"# subdoppler {manifest['version']} {manifest['command']}"]
    for k, v in manifest["config"].items():
        lines.append(f"# {k} = {'' if v is None else repr(v)}")
    for k, v in manifest["options"].items():
        lines.append(f"# option {k} = {json.dumps(v)}")
    return lines


def _write_outputs(args, manifest: dict, columns: list[str], rows: list[list[str]]) -> None:
    text = "\n".join(_header_lines(manifest) + [",".join(columns)] + [",".join(r) for r in rows]) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        stamped = dict(manifest, timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())
        Path(str(args.output) + ".manifest.json").write_text(json.dumps(stamped, indent=2) + "\n")
    else:
        sys.stdout.write(text)


def _load_manifest(path, command: str):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError([Issue(str(path), f"cannot read manifest ({exc})")]) from exc
    if data.get("command") != command:
        raise ConfigError([Issue(str(path), f"manifest is for {data.get('command')!r}, not {command!r}")])
    c = Config.from_dict(data["config"])
    config = validate(c.atom, c.ensemble, c.probe, c.coupling, c.grid, c.od0)
    return config, data.get("options", {})


# -- subcommands -------------------------------------------------------------

def _laser_linewidth(config: Config) -> float:
    return (config.probe.linewidth or 0.0) + (config.coupling.linewidth or 0.0)


def _od0(config: Config, quad) -> float:
    if config.od0 is not None:
        return config.od0
    return calibrate_od(DEFAULT_TARGET_ABSORPTION, atom=config.atom, probe=config.probe,
                        ensemble=config.ensemble, quad=quad)


def simulate_spectrum(config: Config, fine: bool = False, nodes: int = 2001) -> Spectrum:
    """The spectrum ``spectrum`` writes: the config grid, or the fine window around lambda_plus."""
    quad = gaussian_quadrature(config.ensemble.doppler_fwhm, nodes)
    if fine:
        lp, lm = dressed_eigenvalues(config.coupling)
        widths = analytic_linewidths(config.atom, config.ensemble, config.coupling)
        center, width = (lp, widths.nu_plus) if config.coupling.detuning >= 0 else (lm, widths.nu_minus)
        grid = fine_window(center, max(25.0, 5.0 * width), 0.05)
    else:
        grid = config.grid
    spec = averaged_spectrum(config.atom, grid, config.probe, config.coupling, config.ensemble, quad)
    lw = _laser_linewidth(config)
    if lw > 0:
        spec = convolve_laser_linewidth(spec, lw)
    return spec


def cmd_spectrum(args) -> int:
    if args.manifest:
        config, options = _load_manifest(args.manifest, "spectrum")
    else:
        config = resolve_config(args)
        options = {"fine": bool(args.fine), "nodes": args.nodes}
    if config.probe.rabi <= 0:
        raise ConfigError([Issue("probe_rabi", "must be > 0")])
    spec = simulate_spectrum(config, options["fine"], options["nodes"])
    quad = gaussian_quadrature(config.ensemble.doppler_fwhm, options["nodes"])
    od0 = _od0(config, quad)
    trans = transmission(spec, od0)
    config = replace(config, od0=od0)
    rows = [[_num(d), _num(a), _num(t)] for d, a, t in zip(spec.detunings, spec.absorption, trans.absorption)]
    _write_outputs(args, _manifest("spectrum", config, options),
                   ["delta_p_mhz", "absorption", "transmission"], rows)
    if args.svg:
        write_line_plot(args.svg, [("absorption", spec.detunings, spec.absorption)],
                        "probe detuning (MHz)", "normalized absorption",
                        f"coupling {config.coupling.rabi:g} MHz at {config.coupling.detuning:g} MHz")
    return EXIT_OK


def parse_detuning_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        raise UsageError("empty detuning list")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise UsageError(f"bad range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    values = [float(p) for p in text.replace(" ", ",").split(",") if p]
    if not values:
        raise UsageError("empty detuning list")
    return values


def cmd_sweep(args) -> int:
    if args.manifest:
        config, options = _load_manifest(args.manifest, "sweep")
    else:
        config = resolve_config(args)
        try:
            detunings = parse_detuning_list(args.detunings)
        except ValueError as exc:
            raise UsageError(f"bad detuning list {args.detunings!r}: {exc}") from exc
        options = {"detunings": detunings, "nodes": args.nodes}
    settings = SweepSettings(coarse=config.grid)
    quad = gaussian_quadrature(config.ensemble.doppler_fwhm, options["nodes"])
    rows = sweep_linewidth(options["detunings"], config.atom, config.probe, config.coupling,
                           config.ensemble, settings, quad, _laser_linewidth(config))
    out = [[_num(r.coupling_detuning), _num(r.fwhm_numeric), _num(r.fwhm_analytic),
            _num(r.peak_center), _num(r.residual), r.note.replace(",", ";")] for r in rows]
    _write_outputs(args, _manifest("sweep", config, options),
                   ["delta_c_mhz", "fwhm_numeric_mhz", "fwhm_analytic_mhz", "peak_center_mhz", "residual", "note"],
                   out)
    if args.svg:
        x = np.array([r.coupling_detuning for r in rows])
        num = np.array([r.fwhm_numeric if r.ok else np.nan for r in rows])
        ana = np.array([r.fwhm_analytic for r in rows])
        write_line_plot(args.svg, [("simulated + Lorentz fit", x, num), ("closed form", x, ana)],
                        "coupling detuning (MHz)", "narrow-peak FWHM (MHz)")
    for r in rows:
        if not r.ok:
            print(f"warning: delta_c = {r.coupling_detuning:g} MHz: {r.note}", file=sys.stderr)
    return EXIT_OK if any(r.ok for r in rows) else EXIT_NUMERIC


def cmd_analytic(args) -> int:
    atom = AtomSpec(args.gamma_sum / 2, args.gamma_sum / 2, 0.0)
    ensemble = EnsembleSpec(args.doppler_fwhm)
    try:
        pair = analytic_linewidths(atom, ensemble, FieldSpec(args.omega_c, args.delta_c))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"nu_plus = {pair.nu_plus:.4g} MHz")
    print(f"nu_minus = {pair.nu_minus:.4g} MHz")
    return EXIT_OK


def cmd_dressed(args) -> int:
    lp, lm = dressed_eigenvalues(FieldSpec(args.omega_c, args.delta_c))
    print(f"lambda_plus = {lp:.6g} MHz")
    print(f"lambda_minus = {lm:.6g} MHz")
    return EXIT_OK


def read_trace(path) -> Spectrum:
    """Read ``delta_p_mhz`` and ``absorption`` columns from a CSV trace."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError([Issue(str(path), f"cannot read ({exc.strerror})")]) from exc
    body = [(n, line) for n, line in enumerate(lines, start=1) if line.strip() and not line.lstrip().startswith("#")]
    if not body:
        raise ConfigError([Issue(str(path), "no header row")])
    reader = csv.reader([line for _, line in body])
    header = [h.strip() for h in next(reader)]
    try:
        ix, iy = header.index("delta_p_mhz"), header.index("absorption")
    except ValueError:
        raise ConfigError([Issue(f"{path}:{body[0][0]}", "header needs delta_p_mhz and absorption columns")])
    xs, ys = [], []
    for (lineno, _), row in zip(body[1:], reader):
        for name, col, dest in (("delta_p_mhz", ix, xs), ("absorption", iy, ys)):
            try:
                dest.append(float(row[col]))
            except (IndexError, ValueError):
                raise ConfigError([Issue(f"{path}:{lineno}", f"bad or missing value in column {name}")])
    if len(xs) < 8:
        raise ConfigError([Issue(str(path), f"need at least 8 data rows, got {len(xs)}")])
    x = np.array(xs)
    bad = np.flatnonzero(np.diff(x) <= 0)
    if bad.size:
        lineno = body[1 + bad[0] + 1][0]
        raise ConfigError([Issue(f"{path}:{lineno}", "delta_p_mhz must be strictly increasing")])
    return Spectrum(x, np.array(ys), {"source": str(path)})


def cmd_fit(args) -> int:
    spec = read_trace(args.csv)
    window = tuple(args.window) if args.window else None
    fit = fit_lorentzian(spec, window)
    print(f"Lorentzian fit of {args.csv}: FWHM {fit.fwhm:.4g} MHz at {fit.center:.6g} MHz")
    print(json.dumps({
        "center": fit.center,
        "fwhm": fit.fwhm,
        "amplitude": fit.amplitude,
        "offset": fit.offset,
        "residual_norm": fit.residual_norm,
        "iterations": fit.iterations,
    }, indent=2))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if not 0.0 <= args.target < 1.0:
        raise UsageError(f"target absorption must be in [0, 1), got {args.target}")
    config = resolve_config(args)
    quad = gaussian_quadrature(config.ensemble.doppler_fwhm, args.nodes)
    od0 = calibrate_od(args.target, atom=config.atom, probe=config.probe, ensemble=config.ensemble, quad=quad)
    print(f"od0 = {od0!r}")
    if args.write_config:
        Path(args.write_config).write_text(format_config(replace(config, od0=od0)))
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def _add_config_args(p):
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    p.add_argument("-s", "--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--nodes", type=int, default=2001, help="velocity quadrature nodes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subdoppler",
        description="Probe absorption of a Doppler-broadened Lambda system (all frequencies in MHz).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="Doppler-averaged probe absorption and transmission as CSV")
    _add_config_args(p)
    p.add_argument("--no-coupling", action="store_true", help="switch the coupling laser off")
    p.add_argument("--fine", action="store_true", help="fine window around the narrow dressed-state peak")
    p.add_argument("--svg", metavar="PATH", help="also write an SVG plot")
    p.add_argument("-o", "--output", metavar="PATH", help="CSV path (default stdout); a manifest is written next to it")
    p.add_argument("--manifest", metavar="PATH", help="re-run exactly from a manifest file")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="narrow-peak linewidth versus coupling detuning")
    _add_config_args(p)
    p.add_argument("detunings", nargs="?", default="", help="start:stop:step or comma list, MHz")
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("-o", "--output", metavar="PATH")
    p.add_argument("--manifest", metavar="PATH")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analytic", help="closed-form widths of the two absorption peaks")
    p.add_argument("gamma_sum", type=float)
    p.add_argument("doppler_fwhm", type=float)
    p.add_argument("delta_c", type=float)
    p.add_argument("omega_c", type=float)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("dressed", help="dressed-state eigenvalues of the coupling transition")
    p.add_argument("delta_c", type=float)
    p.add_argument("omega_c", type=float)
    p.set_defaults(func=cmd_dressed)

    p = sub.add_parser("fit", help="Lorentzian fit of a measured or simulated trace")
    p.add_argument("csv")
    p.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("calibrate", help="optical depth for a target coupling-free peak absorption")
    _add_config_args(p)
    p.add_argument("target", type=float, help="peak absorption fraction, e.g. 0.52")
    p.add_argument("--write-config", metavar="PATH", help="write the config with od0 filled in")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, SingularGeneratorError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
