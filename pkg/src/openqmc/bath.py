"""Discrete Ohmic bath: mode table and two-point correlation function.

The bath enters the dynamics only through the complex kernel

    B(tau1, tau2) = 1/2 sum_j (c_j^2 / w_j) [coth(beta w_j / 2) cos(w_j d)
                                             - i sin(w_j d)],
    d = |tau1| - |tau2|,

built on the log-discretized Ohmic spectral density.  ``correlation_dtau``
is the hot loop (one call per arc per Monte Carlo sample), so the
beta-dependent weights are cached on the mode table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "BathSpec",
    "BathModes",
    "discretize_bath",
    "correlation_B",
    "correlation_dtau",
    "correlation_evaluator",
    "estimate_B_bound",
    "tabulate_correlation",
]


@dataclass(frozen=True)
class BathSpec:
    """Parameters of the discretized Ohmic bath.

    omega_max defaults to 4 * omega_c when not given.
    """

    L: int
    omega_c: float
    xi: float
    beta: float
    omega_max: float | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError("L: must be a positive integer")
        if self.omega_c <= 0:
            raise ConfigError("omega_c: must be positive")
        if self.xi < 0:
            raise ConfigError("xi: must be nonnegative")
        if self.beta <= 0:
            raise ConfigError("beta: must be positive")
        if self.omega_max is None:
            object.__setattr__(self, "omega_max", 4.0 * self.omega_c)
        if self.omega_max <= 0:
            raise ConfigError("omega_max: must be positive")


@dataclass(frozen=True)
class BathModes:
    """Frequencies and coupling intensities of the discretized bath.

    omega is strictly increasing with omega[-1] == omega_max; xi = 0 gives
    an identically vanishing coupling vector.
    """

    omega: np.ndarray
    c: np.ndarray
    beta: float
    # beta-independent weight c_j^2 / (2 w_j) and its coth-dressed partner,
    # precomputed once since B evaluation dominates the sampling cost
    _w_sin: np.ndarray = field(repr=False, compare=False, default=None)
    _w_cos: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        w_sin = 0.5 * self.c**2 / self.omega
        object.__setattr__(self, "_w_sin", w_sin)
        object.__setattr__(
            self, "_w_cos", w_sin / np.tanh(0.5 * self.beta * self.omega)
        )


def discretize_bath(spec: BathSpec) -> BathModes:
    """Build the mode table {w_j, c_j}, j = 1..L, for an Ohmic bath.

    w_j = -w_c ln(1 - (j/L)(1 - exp(-w_max/w_c))),
    c_j = w_j sqrt(xi w_c (1 - exp(-w_max/w_c)) / L).
    """
    j = np.arange(1, spec.L + 1, dtype=float)
    depletion = 1.0 - np.exp(-spec.omega_max / spec.omega_c)
    omega = -spec.omega_c * np.log1p(-(j / spec.L) * depletion)
    # the j = L log collapses analytically to omega_max; pin it exactly
    omega[-1] = spec.omega_max
    c = omega * np.sqrt(spec.xi * spec.omega_c * depletion / spec.L)
    return BathModes(omega=omega, c=c, beta=spec.beta)


def correlation_dtau(modes: BathModes, dtau) -> np.ndarray | complex:
    """B as a function of the time difference d = |tau1| - |tau2| (vectorized).

    Evaluation is blocked so the (values x modes) intermediate stays small
    for large inputs.
    """
    d = np.asarray(dtau, dtype=float)
    flat = d.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    block = max(1, 2_000_000 // max(1, modes.omega.size))
    for lo in range(0, flat.size, block):
        phase = np.multiply.outer(flat[lo : lo + block], modes.omega)
        out[lo : lo + block] = np.cos(phase) @ modes._w_cos - 1j * (
            np.sin(phase) @ modes._w_sin
        )
    return out.reshape(d.shape) if d.shape else complex(out[0])


def correlation_B(modes: BathModes, beta: float, tau1, tau2):
    """Two-point bath correlation B(tau1, tau2).

    Depends on its arguments only through |tau1| - |tau2|; beta must match
    the value the mode table was built with.
    """
    if beta != modes.beta:
        raise ValueError("beta: mode table was built for a different beta")
    return correlation_dtau(modes, np.abs(tau1) - np.abs(tau2))


def estimate_B_bound(
    modes: BathModes, beta: float, horizon: float, grid_points: int = 4096
) -> float:
    """Empirical sampling constant: one sixth of max |B| over a dtau grid.

    Scans d in [-horizon, horizon]; the amplitude is smooth, so a moderate
    grid suffices.
    """
    if horizon <= 0:
        raise ValueError("horizon: must be positive")
    if grid_points < 2:
        raise ValueError("grid_points: must be at least 2")
    grid = np.linspace(-horizon, horizon, grid_points)
    return float(np.abs(correlation_B(modes, beta, grid, 0.0)).max()) / 6.0


def correlation_evaluator(modes: BathModes):
    """Direct dtau -> B callable bound to a mode table (default hot path)."""

    def direct(dtau):
        return correlation_dtau(modes, dtau)

    return direct


_TABLE_CACHE: dict = {}


def tabulate_correlation(modes: BathModes, horizon: float, points: int = 65537):
    """Optional memoized B(dtau) with linear interpolation (performance knob).

    Returns a callable with the same contract as ``correlation_evaluator``'s
    result.  Correctness tests always use the direct evaluation.  Tables are
    cached per (mode table, beta, horizon, points): repeated runs over the
    same bath (variance harnesses) skip the rebuild.
    """
    key = (modes.omega.tobytes(), modes.c.tobytes(), modes.beta, horizon, points)
    cached = _TABLE_CACHE.get(key)
    if cached is not None:
        grid, vals = cached
    else:
        grid = np.linspace(-horizon, horizon, points)
        vals = correlation_dtau(modes, grid)
        if len(_TABLE_CACHE) > 8:
            _TABLE_CACHE.clear()
        _TABLE_CACHE[key] = (grid, vals)
    step = grid[1] - grid[0]

    def lookup(dtau):
        d = np.asarray(dtau, dtype=float)
        x = (d - grid[0]) / step
        idx = np.clip(x.astype(np.intp), 0, points - 2)
        frac = x - idx
        return vals[idx] * (1.0 - frac) + vals[idx + 1] * frac

    # expose the raw table so compiled kernels can interpolate in place
    lookup.table_grid0 = float(grid[0])
    lookup.table_step = float(step)
    lookup.table_vals = vals
    return lookup
