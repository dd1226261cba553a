"""Compare the compiled and numpy steady-state kernels.

    python benchmarks/bench_kernels.py [--points N] [--nodes M] [--repeat R]

Times one Doppler-averaged spectrum (N probe detunings x M velocity classes)
with each backend, checks they agree, and prints solves per second.
"""
import argparse
import time

import numpy as np

from subdoppler import _kernels_py
from subdoppler.doppler import _static_generator, gaussian_quadrature
from subdoppler.model import FieldSpec, default_config

try:
    from subdoppler import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=301)
    ap.add_argument("--nodes", type=int, default=2001)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = default_config()
    coupling = FieldSpec(90.0, 812.0)
    quad = gaussian_quadrature(cfg.ensemble.doppler_fwhm, args.nodes)
    g0 = _static_generator(cfg.atom, cfg.probe, coupling, cfg.ensemble)
    dp = np.linspace(-1500.0, 1500.0, args.points)
    scale = 0.5 * cfg.atom.gamma_sum / cfg.probe.rabi
    call = (g0, dp, quad.nodes, quad.weights, coupling.detuning, scale)
    solves = args.points * args.nodes

    backends = [("numpy", _kernels_py)]
    if compiled is not None:
        backends.insert(0, ("cython", compiled))
    else:
        print("compiled kernels not built; timing numpy only")

    results = {}
    print(f"{args.points} detunings x {args.nodes} velocity classes = {solves} solves, best of {args.repeat}")
    for name, mod in backends:
        out, dt = best_of(lambda: mod.doppler_average(*call), args.repeat)
        results[name] = (out, dt)
        print(f"  {name:7s} {dt:8.3f} s   {solves / dt / 1e6:7.2f} M solves/s")
    if len(results) == 2:
        a, b = results["cython"][0], results["numpy"][0]
        print(f"  speedup {results['numpy'][1] / results['cython'][1]:.1f}x, "
              f"max rel difference {np.max(np.abs(a - b) / np.abs(b)):.1e}")


if __name__ == "__main__":
    main()
