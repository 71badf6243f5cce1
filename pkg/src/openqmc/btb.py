"""Bold-thin-bold solver: bold pre-solve, interpolated bases, BTB march.

Stage one integrates the one-sided bold propagator table G0[k] ~ G(0+, t_k)
from the generalized inchworm equation with connected-family influence
functionals.  Stage two marches G(-t, t) exactly like the Dyson reuse
algorithm, but every segment that does not cross zero is a (daggered)
linear interpolant of the bold table and the influence functional runs
over the BTB-admissible pairings of the sample's sign pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyson import MarchResult, Setup, _factorial, _run_march
from .errors import NumericalCheckError
from .estimators import SegmentKit, bold_chain_term, interp_table
from .pairings import Family
from .sampling import (
    PHASE_BOLD,
    CountKind,
    RngStream,
    sample_count,
    sample_simplex,
)
from .system import SystemSpec, basis_propagator, expi_factory, herm_parts

__all__ = [
    "BoldTable",
    "solve_bold_propagator",
    "interpolate_bold",
    "btb_basis_propagator",
    "btb_system_functional",
    "bold_segments",
    "run_btb",
]


@dataclass(frozen=True)
class BoldTable:
    """Bold propagator on the step grid: G0[k] ~ G(0+, k dt), G0[0] = I."""

    G0: np.ndarray  # (N+1, 2, 2)
    dt: float

    @property
    def horizon(self) -> float:
        return (self.G0.shape[0] - 1) * self.dt


def interpolate_bold(table: BoldTable, s) -> np.ndarray:
    """G0 interpolant at gap s in [0, horizon]; exact on grid points."""
    return interp_table(table.G0, table.dt, np.asarray(s, dtype=float))


def solve_bold_propagator(setup: Setup) -> BoldTable:
    """Heun march of the one-sided inchworm equation for the bold table.

    dG0/dt = i H G0 + sum_odd m i^{m+1} int U(0, s, t) L_b^c(s, t), with
    simplex samples on [0, t_k] sized by the inchworm counts.  The second
    Heun stage interpolates with the predictor on the newest panel only.
    Sampling uses a dedicated phase tag so the main march stays
    statistically independent of the table noise.
    """
    spec = setup.system
    H = spec.hamiltonian
    N = setup.steps
    dt = setup.dt
    corr = setup.correlation()
    G0 = np.empty((N + 1, 2, 2), dtype=complex)
    G0[0] = np.eye(2)

    def mc_drift(table_part: np.ndarray, k: int) -> np.ndarray:
        # sum over odd orders of (t_k^m / m!) mean[i^{m+1} U^I L_b^c]
        t_k = k * dt
        out = np.zeros((2, 2), dtype=complex)
        if k == 0:
            return out
        for m in range(1, setup.budget.Mbar + 1, 2):
            M = sample_count(CountKind.INCHWORM, k, m, dt, setup.budget)
            if M == 0:
                continue
            rng = RngStream(setup.seed, PHASE_BOLD, k, m).generator()
            pts = sample_simplex(m, 0.0, t_k, rng, size=M)
            T = bold_chain_term(
                pts, t_k, table_part, dt, spec.Ws, corr, threads=setup.threads
            )
            out += (1j) ** (m + 1) * (t_k**m / _factorial(m) / M) * T
        return out

    for k in range(N):
        g_star = G0[k] + dt * (1j * H @ G0[k] + mc_drift(G0[: k + 1], k))
        star_part = np.concatenate((G0[: k + 1], g_star[None]), axis=0)
        g_star2 = g_star + dt * (1j * H @ g_star + mc_drift(star_part, k + 1))
        G0[k + 1] = 0.5 * (G0[k] + g_star2)
    return BoldTable(G0=G0, dt=dt)


def bold_segments(table: BoldTable, spec: SystemSpec) -> SegmentKit:
    """Segment providers of the BTB chain: interpolated bold lines off zero,
    bare exponentials for the crossing factors."""
    expi = expi_factory(spec.hamiltonian)
    alpha, nu, vn = herm_parts(spec.hamiltonian)

    def seg_neg(g):
        out = interpolate_bold(table, g)
        return np.conj(np.swapaxes(out, -1, -2))

    return SegmentKit(
        seg_neg=seg_neg,
        seg_pos=lambda g: interpolate_bold(table, g),
        expi=expi,
        ws=np.asarray(spec.Ws, dtype=complex),
        mode="table" if abs(alpha) < 1e-14 else None,
        nu=nu,
        vn=vn,
        table=table.G0,
        table_dt=table.dt,
    )


def btb_basis_propagator(
    table: BoldTable, spec: SystemSpec, i: int, j: int, s_i: float, s_f: float
) -> np.ndarray:
    """Basis-resolved BTB segment propagator (reference implementation).

    Same-sign intervals read the bold table through their gap (daggered
    left of zero); a crossing interval is the bare dyad sandwich.
    """
    if s_i > s_f:
        raise ValueError("interval: need s_i <= s_f")
    if s_i < 0 <= s_f:
        return basis_propagator(spec, i, j, s_i, s_f)
    g = interpolate_bold(table, np.asarray(s_f - s_i))
    return g.conj().T if s_f < 0 else g


def btb_system_functional(
    table: BoldTable,
    spec: SystemSpec,
    t: float,
    points,
    basis: tuple[int, int],
) -> np.ndarray:
    """Alternating BTB chain over interpolated segments (reference)."""
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) < 0):
        raise ValueError("points: must be sorted ascending")
    grid = np.concatenate(([-t], pts, [t]))
    out = btb_basis_propagator(table, spec, *basis, grid[-2], grid[-1])
    for k in range(len(grid) - 2, 0, -1):
        out = out @ spec.Ws @ btb_basis_propagator(
            table, spec, *basis, grid[k - 1], grid[k]
        )
    return out


def run_btb(setup: Setup, table: BoldTable | None = None) -> MarchResult:
    """Two-stage BTB run: bold pre-solve, then the reuse march with the
    BTB pairing family.  A precomputed table may be passed in."""
    if table is None:
        table = solve_bold_propagator(setup)
    if table.horizon + 1e-9 < setup.steps * setup.dt:
        raise NumericalCheckError("bold table: shorter than the march horizon")
    kit = bold_segments(table, setup.system)
    result = _run_march(
        setup, kit, setup.correlation(), Family.BTB, reuse=True
    )
    result.table = table
    return result
