"""Samplers, sample-count rules and reproducible RNG streams.

Every Monte Carlo block is drawn from a counter-based generator keyed by
(seed, phase, step, order), so sample k of a block never depends on
scheduling or thread count.  Reductions over samples are chunked with a
fixed chunk size for the same reason.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "PHASE_MAIN",
    "PHASE_BOLD",
    "RngStream",
    "SampleBudget",
    "CountKind",
    "shift_map",
    "sample_simplex",
    "sample_shell",
    "sample_count",
    "double_factorial",
]

PHASE_MAIN = 0
PHASE_BOLD = 1


@dataclass(frozen=True)
class RngStream:
    """Deterministic stream id (seed, phase, step, order)."""

    seed: int
    phase: int = PHASE_MAIN
    step: int = 0
    order: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.phase, self.step, self.order)
        )
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SampleBudget:
    """Per-order sample sizing: counts scale with M0, the domain volume
    and powers of the empirical correlation bound."""

    M0: float
    Bbound: float
    Mbar: int

    def __post_init__(self):
        if self.M0 <= 0:
            raise ConfigError("m0: must be positive")
        if self.Bbound < 0:
            raise ConfigError("b_bound: must be nonnegative")
        if self.Mbar < 1 or self.Mbar % 2 == 0:
            raise ConfigError("mbar: must be an odd integer >= 1")


class CountKind(enum.Enum):
    DYSON_FULL = "dyson-full"
    SHELL = "shell"
    INCHWORM = "inchworm"


def double_factorial(n: int) -> int:
    """n!! with the convention 0!! = (-1)!! = 1."""
    return math.prod(range(n, 1, -2)) if n > 1 else 1


def shift_map(points, dt: float) -> np.ndarray:
    """Push nonnegative points right and negative points left by dt.

    Preserves ordering (the image leaves a gap (-dt, dt) empty), so the
    output of a sorted input is sorted.
    """
    if dt < 0:
        raise ValueError("dt: must be nonnegative")
    pts = np.asarray(points, dtype=float)
    return np.where(pts >= 0, pts + dt, pts - dt)


def sample_simplex(
    m: int, lo: float, hi: float, rng: np.random.Generator, size: int = 1
) -> np.ndarray:
    """Uniform draws on the ordered simplex {lo <= s_1 <= ... <= s_m <= hi}.

    Returns shape (size, m); rows are iid uniform draws sorted ascending.
    """
    if m < 1:
        raise ValueError("m: must be >= 1")
    if not lo < hi:
        raise ValueError("bounds: need lo < hi")
    draws = rng.uniform(lo, hi, size=(size, m))
    draws.sort(axis=1)
    return draws


def sample_shell(
    m: int, t_prev: float, dt: float, rng: np.random.Generator, size: int = 1
) -> np.ndarray:
    """Uniform draws on the shell of the step-enlarged simplex.

    The shell is the subset of {-(t_prev+dt) <= s <= t_prev+dt} where some
    coordinate lies in [-dt, dt].  Sampling is exact: condition iid
    coordinates on the band-hit event (truncated binomial for the number
    of in-band coordinates, then the two uniform pieces) and sort.  This
    replaces plain rejection, whose expected retries grow like
    t_prev / (m dt) and dominate the march cost at high orders;
    ``sample_shell_rejection`` is kept as the distributional oracle.
    """
    if t_prev < 0:
        raise ValueError("t_prev: must be nonnegative")
    if dt <= 0:
        raise ValueError("dt: must be positive")
    t_next = t_prev + dt
    ratio = dt / t_next
    k = np.arange(1, m + 1)
    pmf = np.array(
        [math.comb(m, int(j)) * ratio**j * (1 - ratio) ** (m - j) for j in k]
    )
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    u = rng.uniform(size=size)
    n_band = 1 + np.searchsorted(cdf, u, side="right").clip(0, m - 1)
    draws = rng.uniform(size=(size, m))
    in_band = np.arange(m)[None, :] < n_band[:, None]
    band = -dt + 2.0 * dt * draws
    # the complement splits into two equal-length intervals; the low bit
    # of the draw picks the side, the rest places the point
    left = draws < 0.5
    mag = dt + (2.0 * np.where(left, draws, draws - 0.5)) * (t_next - dt)
    outside = np.where(left, -mag, mag)
    out = np.where(in_band, band, outside)
    out.sort(axis=1)
    return out


def sample_shell_rejection(
    m: int, t_prev: float, dt: float, rng: np.random.Generator, size: int = 1
) -> np.ndarray:
    """Rejection sampler for the shell (reference implementation).

    Resamples from the enclosing simplex until some coordinate lies in
    [-dt, dt]; the expected acceptance rate is 1 - (t_prev/(t_prev+dt))^m.
    """
    if t_prev < 0:
        raise ValueError("t_prev: must be nonnegative")
    if dt <= 0:
        raise ValueError("dt: must be positive")
    t_next = t_prev + dt
    accept_rate = 1.0 - (t_prev / t_next) ** m
    out = np.empty((size, m))
    have = 0
    while have < size:
        # deterministic batch sizing: depends only on the remaining need
        need = size - have
        batch = max(64, int(1.2 * need / accept_rate) + 1)
        cand = rng.uniform(-t_next, t_next, size=(batch, m))
        cand.sort(axis=1)
        keep = cand[np.abs(cand).min(axis=1) <= dt]
        take = min(need, keep.shape[0])
        out[have : have + take] = keep[:take]
        have += take
    return out


def _count_value(kind: CountKind, step: int, m: int, dt: float, budget: SampleBudget):
    dfac = double_factorial(m - 1)
    bpow = budget.Bbound ** ((m + 1) / 2)
    if kind is CountKind.DYSON_FULL:
        t_n = step * dt
        return budget.M0 * (2.0 * t_n) ** m / dfac * bpow
    if kind is CountKind.SHELL:
        t_lo, t_hi = step * dt, (step + 1) * dt
        return budget.M0 * ((2.0 * t_hi) ** m - (2.0 * t_lo) ** m) / dfac * bpow
    t_k = step * dt
    return budget.M0 * t_k**m / dfac * bpow


def sample_count(
    kind: CountKind, step: int, m: int, dt: float, budget: SampleBudget
) -> int:
    """Nearest-integer sample count for order m at the given step.

    DYSON_FULL sizes the full simplex at t_n = step * dt; SHELL sizes the
    shell crossed when marching from t_step to t_{step+1} (step = 0 is the
    first march step, whose shell is the whole initial simplex); INCHWORM
    sizes the one-sided simplex [0, t_step].  A value that rounds to zero
    means the order is skipped at that step.
    """
    if m < 1 or m % 2 == 0:
        raise ValueError("m: count rules are defined for odd m")
    if step < 0:
        raise ValueError("step: must be nonnegative")
    return int(np.rint(_count_value(kind, step, m, dt, budget)))


def bare_dqmc_count(t: float, m: int, budget: SampleBudget) -> int:
    """Sample count for the bare estimator at even order m (same sizing rule)."""
    dfac = double_factorial(m - 1)
    return int(np.rint(budget.M0 * (2.0 * t) ** m / dfac * budget.Bbound ** ((m + 1) / 2)))
