"""numpy fallback for the compiled kernels (batched LAPACK solves)."""
from __future__ import annotations

import numpy as np

# element (i, j) of rho sits at 3*i + j
_ROW = np.repeat(np.arange(3), 3)
_COL = np.tile(np.arange(3), 3)
_DIAG = np.arange(9)
_TRACE = np.array([1, 0, 0, 0, 1, 0, 0, 0, 1], dtype=complex)

# keeps each batched solve around 32k systems
_BATCH = 1 << 15


def _responses(g0, dp, kv, coupling_detuning, scale):
    n, m = dp.size, kv.size
    energies = np.zeros((n, m, 3))
    energies[..., 1] = (dp - coupling_detuning)[:, None]
    energies[..., 2] = dp[:, None] - kv[None, :]
    a = np.broadcast_to(g0, (n, m, 9, 9)).copy()
    a[..., _DIAG, _DIAG] -= 1j * (energies[..., _ROW] - energies[..., _COL])
    a[..., 0, :] = _TRACE
    b = np.zeros((n, m, 9, 1), dtype=complex)
    b[..., 0, 0] = 1.0
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return np.full((n, m), np.nan)
    return -x[..., 6, 0].imag * scale


def _chunks(n, m):
    rows = max(1, _BATCH // max(m, 1))
    for start in range(0, n, rows):
        yield slice(start, min(n, start + rows))


def response_table(g0, probe_detunings, shifts, coupling_detuning, scale):
    g0 = np.asarray(g0, dtype=complex)
    dp = np.asarray(probe_detunings, dtype=float)
    kv = np.asarray(shifts, dtype=float)
    out = np.empty((dp.size, kv.size))
    for sl in _chunks(dp.size, kv.size):
        out[sl] = _responses(g0, dp[sl], kv, coupling_detuning, scale)
    return out


def doppler_average(g0, probe_detunings, shifts, weights, coupling_detuning, scale):
    g0 = np.asarray(g0, dtype=complex)
    dp = np.asarray(probe_detunings, dtype=float)
    kv = np.asarray(shifts, dtype=float)
    w = np.asarray(weights, dtype=float)
    out = np.empty(dp.size)
    for sl in _chunks(dp.size, kv.size):
        # row-wise reduction: each grid point's sum is independent of chunking
        out[sl] = (_responses(g0, dp[sl], kv, coupling_detuning, scale) * w).sum(axis=1)
    return out
