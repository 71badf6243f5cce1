"""Dyson-series evolution of G(-t, t) with Heun stepping.

Three modes:

* ``bare_dqmc_at``     one-shot estimate of the propagator at a single time
  (direct series summation, no Hermiticity guarantee);
* ``run_dyson_direct`` Heun march with the memory kernel re-estimated from
  full-simplex samples at every step;
* ``run_dyson_reuse``  Heun march where the four basis kernels are carried
  by a recurrence: conjugate them with the offline step tensor b and add
  the freshly sampled shell correction.  Memory stays at eight 2x2
  accumulators regardless of the step count.

``k1_quadrature`` replaces the Monte Carlo estimate at truncation order 1
with a composite trapezoid rule on step-aligned grids; on those grids the
recurrence is an exact algebraic identity, which the tests exploit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath import BathModes, correlation_evaluator, tabulate_correlation
from .errors import NumericalCheckError
from .estimators import SegmentKit, basis_term, chain_tensor, dyson_segments
from .pairings import Family
from .sampling import (
    PHASE_MAIN,
    CountKind,
    RngStream,
    SampleBudget,
    bare_dqmc_count,
    sample_count,
    sample_shell,
    sample_simplex,
)
from .system import SystemSpec, coefficients_a, coefficients_b, expi_factory

__all__ = [
    "Setup",
    "KAccumulator",
    "MarchResult",
    "heun_step",
    "recurrence_update",
    "assemble_kernel",
    "estimate_D_shell",
    "bare_dqmc_at",
    "run_dyson_direct",
    "run_dyson_reuse",
    "k1_quadrature",
    "run_bare_dqmc",
]

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class Setup:
    """Resolved inputs for one solver run."""

    system: SystemSpec
    modes: BathModes
    budget: SampleBudget
    dt: float
    steps: int
    seed: int
    threads: int = 1
    use_b_table: bool = False

    def correlation(self):
        if self.use_b_table:
            horizon = self.steps * self.dt * (1.0 + 1e-9) + self.dt
            return tabulate_correlation(self.modes, horizon)
        return correlation_evaluator(self.modes)


@dataclass
class KAccumulator:
    """The four basis kernels K_ij as a (i, j, 2, 2) tensor, plus the step."""

    Kij: np.ndarray
    step: int = 0

    @classmethod
    def zero(cls) -> "KAccumulator":
        return cls(Kij=np.zeros((2, 2, 2, 2), dtype=complex), step=0)


@dataclass
class MarchResult:
    G: np.ndarray  # (steps+1, 2, 2)
    counts: dict[int, list[int]] = field(default_factory=dict)


def heun_step(
    Gn: np.ndarray, Kn: np.ndarray, Kn1: np.ndarray, dt: float, spec: SystemSpec
) -> np.ndarray:
    """One predictor-corrector step of dG/dt = i[H, G] + Ws K + (Ws K)^dag."""
    H = spec.hamiltonian
    W = spec.Ws

    def drift(G, K):
        M = W @ K
        return 1j * (H @ G - G @ H) + M + M.conj().T

    g_star = Gn + dt * drift(Gn, Kn)
    g_star2 = g_star + dt * drift(g_star, Kn1)
    return 0.5 * (Gn + g_star2)


def recurrence_update(
    K: KAccumulator, b: np.ndarray, D: np.ndarray
) -> KAccumulator:
    """K'_ij = sum_kl b^ij_kl K_kl + D_ij (the step recurrence)."""
    return KAccumulator(
        Kij=np.einsum("ijkl,klab->ijab", b, K.Kij) + D, step=K.step + 1
    )


def assemble_kernel(a: np.ndarray, Kij: np.ndarray) -> np.ndarray:
    """Recombine the basis kernels into the plain kernel sum_ij a_ij K_ij."""
    return np.einsum("ij,ijab->ab", a, Kij)


def _check_hermitian(G: np.ndarray, step: int):
    if np.abs(G - G.conj().T).max() > HERMITICITY_TOL:
        raise NumericalCheckError(f"propagator lost Hermiticity at step {step}")


def estimate_D_shell(
    n: int,
    setup: Setup,
    kit: SegmentKit,
    corr,
    family: Family,
    counts: dict[int, list[int]] | None = None,
) -> np.ndarray:
    """Shell correction tensor D_ij for the march step t_n -> t_{n+1}.

    Sums every odd order up to Mbar: volume of the shell times the sample
    mean of i^{m+1} (-1)^{#neg} U_ij L_b over uniform shell draws.  Orders
    whose sample count rounds to zero are skipped at that step.
    """
    dt = setup.dt
    t_prev = n * dt
    t_next = (n + 1) * dt
    D = np.zeros((2, 2, 2, 2), dtype=complex)
    for m in range(1, setup.budget.Mbar + 1, 2):
        M = sample_count(CountKind.SHELL, n, m, dt, setup.budget)
        if counts is not None:
            counts.setdefault(m, []).append(M)
        if M == 0:
            continue
        rng = RngStream(setup.seed, PHASE_MAIN, n + 1, m).generator()
        pts = sample_shell(m, t_prev, dt, rng, size=M)
        vol = ((2 * t_next) ** m - (2 * t_prev) ** m) / _factorial(m)
        T = basis_term(
            pts, t_next, kit, family, corr, append_final=True, threads=setup.threads
        )
        D += (1j) ** (m + 1) * (vol / M) * T
    return D


def _factorial(m: int) -> float:
    out = 1.0
    for k in range(2, m + 1):
        out *= k
    return out


def _kernel_full_simplex(
    n: int, setup: Setup, kit: SegmentKit, corr, a: np.ndarray,
    counts: dict[int, list[int]] | None = None,
) -> np.ndarray:
    """Fresh full-simplex estimate of the plain kernel at t_n (direct mode)."""
    dt = setup.dt
    t = n * dt
    K = np.zeros((2, 2), dtype=complex)
    for m in range(1, setup.budget.Mbar + 1, 2):
        M = sample_count(CountKind.DYSON_FULL, n, m, dt, setup.budget)
        if counts is not None:
            counts.setdefault(m, []).append(M)
        if M == 0:
            continue
        rng = RngStream(setup.seed, PHASE_MAIN, n, m).generator()
        pts = sample_simplex(m, -t, t, rng, size=M)
        vol = (2 * t) ** m / _factorial(m)
        T = basis_term(
            pts, t, kit, Family.ALL, corr, append_final=True, threads=setup.threads
        )
        K += (1j) ** (m + 1) * (vol / M) * assemble_kernel(a, T)
    return K


def bare_dqmc_at(t: float, setup: Setup) -> np.ndarray:
    """Bare dQMC snapshot of G(-t, t): truncated series, fresh uniform samples.

    The leading term is exact; even orders up to Mbar are Monte Carlo
    estimates weighted by the simplex volume.  Hermiticity is not enforced.
    """
    spec = setup.system
    expi = expi_factory(spec.hamiltonian)
    G = expi(t) @ spec.Os @ expi(-t)
    if t == 0.0:
        return G
    kit = dyson_segments(spec.hamiltonian, spec.Ws)
    corr = setup.correlation()
    a = coefficients_a(spec)
    step = int(round(t / setup.dt))
    mbar = setup.budget.Mbar if setup.budget.Mbar % 2 == 0 else setup.budget.Mbar - 1
    for m in range(2, mbar + 1, 2):
        M = bare_dqmc_count(t, m, setup.budget)
        if M == 0:
            continue
        rng = RngStream(setup.seed, PHASE_MAIN, step, m).generator()
        pts = sample_simplex(m, -t, t, rng, size=M)
        vol = (2 * t) ** m / _factorial(m)
        T = basis_term(
            pts, t, kit, Family.ALL, corr, append_final=False, threads=setup.threads
        )
        G += (1j) ** m * (vol / M) * assemble_kernel(a, T)
    return G


def run_bare_dqmc(setup: Setup) -> MarchResult:
    """Bare dQMC snapshots on the whole time grid (no evolution equation)."""
    G = np.empty((setup.steps + 1, 2, 2), dtype=complex)
    counts: dict[int, list[int]] = {}
    mbar = setup.budget.Mbar if setup.budget.Mbar % 2 == 0 else setup.budget.Mbar - 1
    for n in range(setup.steps + 1):
        t = n * setup.dt
        G[n] = bare_dqmc_at(t, setup)
        for m in range(2, mbar + 1, 2):
            counts.setdefault(m, []).append(bare_dqmc_count(t, m, setup.budget))
    return MarchResult(G=G, counts=counts)


def _run_march(
    setup: Setup,
    kit: SegmentKit,
    corr,
    family: Family,
    reuse: bool,
    quad_points_per_step: int | None = None,
) -> MarchResult:
    """Shared Heun march; reuse mode carries the basis accumulators."""
    spec = setup.system
    a = coefficients_a(spec)
    b = coefficients_b(spec, setup.dt)
    N = setup.steps
    G = np.empty((N + 1, 2, 2), dtype=complex)
    G[0] = spec.Os
    counts: dict[int, list[int]] = {}
    quad = None
    if quad_points_per_step is not None:
        if setup.budget.Mbar != 1:
            raise ValueError("quadrature mode requires Mbar = 1")
        quad = _QuadK1(setup, kit, corr, quad_points_per_step)

    acc = KAccumulator.zero()
    K_prev = np.zeros((2, 2), dtype=complex)
    for n in range(N):
        if reuse:
            D = (
                quad.shell_tensor(n)
                if quad is not None
                else estimate_D_shell(n, setup, kit, corr, family, counts)
            )
            acc = recurrence_update(acc, b, D)
            K_next = assemble_kernel(a, acc.Kij)
        else:
            if quad is not None:
                K_next = assemble_kernel(a, quad.kernel_tensor(n + 1))
            else:
                K_next = _kernel_full_simplex(n + 1, setup, kit, corr, a, counts)
        G[n + 1] = heun_step(G[n], K_prev, K_next, setup.dt, spec)
        _check_hermitian(G[n + 1], n + 1)
        K_prev = K_next
    return MarchResult(G=G, counts=counts)


def run_dyson_direct(
    setup: Setup, quad_points_per_step: int | None = None
) -> MarchResult:
    """Heun march, kernel re-estimated from scratch each step.

    quad_points_per_step switches the order-1 estimate to deterministic
    trapezoid quadrature (requires Mbar = 1).
    """
    kit = dyson_segments(setup.system.hamiltonian, setup.system.Ws)
    return _run_march(
        setup, kit, setup.correlation(), Family.ALL, reuse=False,
        quad_points_per_step=quad_points_per_step,
    )


def run_dyson_reuse(
    setup: Setup, quad_points_per_step: int | None = None
) -> MarchResult:
    """Heun march with the basis-kernel recurrence (shell sampling only)."""
    kit = dyson_segments(setup.system.hamiltonian, setup.system.Ws)
    return _run_march(
        setup, kit, setup.correlation(), Family.ALL, reuse=True,
        quad_points_per_step=quad_points_per_step,
    )


class _QuadK1:
    """Composite-trapezoid replacement of the order-1 Monte Carlo estimates.

    Node spacing divides the time step exactly, so the shift map carries
    the step-n grid onto interior nodes of the step-(n+1) grid and the
    recurrence identity holds to rounding.  The integrand jumps at zero;
    both integrals are split there, with the boundary node evaluated on
    the negative branch via an explicit sign-count override.
    """

    def __init__(self, setup: Setup, kit: SegmentKit, corr, points_per_step: int):
        if points_per_step < 1:
            raise ValueError("quadrature: need at least one interval per step")
        self.setup = setup
        self.kit = kit
        self.corr = corr
        self.q = points_per_step

    def _half_axis(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and trapezoid weights on [0, t_n] with spacing dt/q."""
        k = n * self.q
        nodes = np.linspace(0.0, n * self.setup.dt, k + 1)
        w = np.full(k + 1, self.setup.dt / self.q)
        w[0] *= 0.5
        w[-1] *= 0.5
        return nodes, w

    def _sum_pieces(self, s_neg, w_neg, s_pos, w_pos, t: float) -> np.ndarray:
        corr = self.corr
        out = np.zeros((2, 2, 2, 2), dtype=complex)
        if s_neg.size:
            b_neg = corr(np.abs(s_neg) - t)
            out += chain_tensor(
                s_neg[:, None], t, -w_neg * b_neg,
                np.ones(s_neg.size, dtype=int), self.kit,
            )
        if s_pos.size:
            b_pos = corr(np.abs(s_pos) - t)
            out += chain_tensor(
                s_pos[:, None], t, w_pos * b_pos,
                np.zeros(s_pos.size, dtype=int), self.kit,
            )
        # i^{m+1} = -1 at m = 1
        return -out

    def kernel_tensor(self, n: int) -> np.ndarray:
        """Trapezoid value of the order-1 basis kernel tensor at t_n."""
        if n == 0:
            return np.zeros((2, 2, 2, 2), dtype=complex)
        t = n * self.setup.dt
        nodes, w = self._half_axis(n)
        return self._sum_pieces(-nodes[::-1], w[::-1], nodes, w, t)

    def shell_tensor(self, n: int) -> np.ndarray:
        """Trapezoid value of the order-1 shell correction for step n -> n+1."""
        t_next = (n + 1) * self.setup.dt
        nodes, w = self._half_axis(1)
        return self._sum_pieces(-nodes[::-1], w[::-1], nodes, w, t_next)


def k1_quadrature(
    n: int, setup: Setup, quad_points: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic order-1 kernel at t_n: (plain 2x2 kernel, basis tensor).

    quad_points is the total node budget over [-t_n, t_n]; it is converted
    to a per-step subdivision so grids of successive steps stay aligned.
    """
    q = max(1, int(round(quad_points / max(1, 2 * n))))
    kit = dyson_segments(setup.system.hamiltonian, setup.system.Ws)
    quad = _QuadK1(setup, kit, setup.correlation(), q)
    Kij = quad.kernel_tensor(n)
    return assemble_kernel(coefficients_a(setup.system), Kij), Kij
