"""System-side 2x2 algebra: spin Hamiltonian, bare propagators and bases.

Matrices are plain complex numpy arrays in the basis order (|-1>, |1>),
so sigma_z = diag(-1, +1).  All propagator exponentials use the closed
form e^{i theta (alpha I + V)} = e^{i theta alpha} (cos(theta nu) I
+ i sin(theta nu) V / nu) for the traceless Hermitian part V with
nu = ||V||; this is branch-free and exact to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "SIGMA_X",
    "SIGMA_Z",
    "IDENTITY",
    "SystemSpec",
    "BasisCoeffs",
    "matexp_herm",
    "expi_factory",
    "bare_propagator",
    "basis_propagator",
    "system_functional",
    "coefficients_a",
    "coefficients_b",
    "basis_coeffs",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

_HERM_TOL = 1e-12

# state label (-1 or +1) -> basis index
_STATE_INDEX = {-1: 0, 1: 1}


def _require_hermitian(M: np.ndarray, name: str):
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.conj().T).max() > _HERM_TOL * scale:
        raise ValueError(f"{name}: matrix must be Hermitian")


@dataclass(frozen=True)
class SystemSpec:
    """Spin parameters: H_s = epsilon sigma_z + delta sigma_x.

    Os is the observable inserted at the fold of the contour, Ws the
    system side of the coupling, rho_s the initial system density matrix.
    """

    epsilon: float
    delta: float
    Os: np.ndarray = field(default_factory=lambda: SIGMA_Z.copy())
    Ws: np.ndarray = field(default_factory=lambda: SIGMA_Z.copy())
    rho_s: np.ndarray = field(
        default_factory=lambda: np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    )

    def __post_init__(self):
        for name in ("Os", "Ws", "rho_s"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.shape != (2, 2):
                raise ConfigError(f"{name}: expected a 2x2 matrix")
            object.__setattr__(self, name, m)
            _require_hermitian(m, name)
        if abs(np.trace(self.rho_s) - 1.0) > 1e-10:
            raise ConfigError("rho_s: trace must be 1")
        if np.linalg.eigvalsh(self.rho_s).min() < -1e-10:
            raise ConfigError("rho_s: must be positive semidefinite")

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.epsilon * SIGMA_Z + self.delta * SIGMA_X


def expi_factory(H: np.ndarray):
    """Return theta -> e^{i theta H} supporting scalar or array theta.

    The decomposition of H is done once; the returned callable is the hot
    path for propagator evaluation.
    """
    H = np.asarray(H, dtype=complex)
    _require_hermitian(H, "H")
    alpha = float(np.trace(H).real) / 2.0
    V = H - alpha * IDENTITY
    nu = float(np.sqrt(V[0, 0].real ** 2 + abs(V[0, 1]) ** 2))

    if nu == 0.0:

        def expi(theta):
            th = np.asarray(theta, dtype=float)
            phase = np.exp(1j * alpha * th)
            return phase[..., None, None] * IDENTITY

        return expi

    Vn = V / nu

    def expi(theta):
        th = np.asarray(theta, dtype=float)
        phase = np.exp(1j * alpha * th)
        ang = nu * th
        return phase[..., None, None] * (
            np.cos(ang)[..., None, None] * IDENTITY
            + 1j * np.sin(ang)[..., None, None] * Vn
        )

    return expi


def matexp_herm(H: np.ndarray, theta) -> np.ndarray:
    """e^{i theta H} for Hermitian H; theta may be a scalar or an array."""
    return expi_factory(H)(theta)


def herm_parts(H: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Decompose Hermitian H as alpha*I + nu*Vn with Vn unit traceless."""
    H = np.asarray(H, dtype=complex)
    _require_hermitian(H, "H")
    alpha = float(np.trace(H).real) / 2.0
    V = H - alpha * IDENTITY
    nu = float(np.sqrt(V[0, 0].real ** 2 + abs(V[0, 1]) ** 2))
    vn = V / nu if nu > 0 else np.zeros((2, 2), dtype=complex)
    return alpha, nu, vn


def bare_propagator(spec: SystemSpec, s_i: float, s_f: float) -> np.ndarray:
    """Bare contour propagator for the interval (s_i, s_f), s_i <= s_f.

    Negative intervals propagate with e^{-i (s_f - s_i) H}, nonnegative
    ones with e^{+i (s_f - s_i) H}; an interval crossing zero inserts the
    observable: e^{i s_f H} Os e^{i s_i H}.
    """
    if s_i > s_f:
        raise ValueError("interval: need s_i <= s_f")
    expi = expi_factory(spec.hamiltonian)
    if s_f < 0:
        return expi(-(s_f - s_i))
    if s_i >= 0:
        return expi(s_f - s_i)
    return expi(s_f) @ spec.Os @ expi(s_i)


def basis_propagator(
    spec: SystemSpec, i: int, j: int, s_i: float, s_f: float
) -> np.ndarray:
    """Basis-resolved bare propagator: |i><j| replaces Os on a crossing interval.

    i, j are state labels in {-1, +1}; non-crossing intervals coincide
    with ``bare_propagator`` and do not depend on (i, j).
    """
    if s_i > s_f:
        raise ValueError("interval: need s_i <= s_f")
    if not (s_i < 0 <= s_f):
        return bare_propagator(spec, s_i, s_f)
    expi = expi_factory(spec.hamiltonian)
    ket = np.zeros((2, 1), dtype=complex)
    ket[_STATE_INDEX[i], 0] = 1.0
    bra = np.zeros((1, 2), dtype=complex)
    bra[0, _STATE_INDEX[j]] = 1.0
    return expi(s_f) @ (ket @ bra) @ expi(s_i)


def system_functional(
    spec: SystemSpec,
    t: float,
    points,
    basis: tuple[int, int] | None = None,
) -> np.ndarray:
    """Alternating product G(s_m, t) Ws G(s_{m-1}, s_m) ... Ws G(-t, s_1).

    With ``basis=(i, j)`` every segment uses the basis-resolved propagator
    (only the single zero-crossing segment actually depends on it).
    """
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) < 0):
        raise ValueError("points: must be sorted ascending")
    if pts.size and (pts[0] < -t or pts[-1] > t):
        raise ValueError("points: must lie in [-t, t]")
    grid = np.concatenate(([-t], pts, [t]))
    if basis is None:
        seg = lambda a, b: bare_propagator(spec, a, b)
    else:
        seg = lambda a, b: basis_propagator(spec, basis[0], basis[1], a, b)
    out = seg(grid[-2], grid[-1])
    for k in range(len(grid) - 2, 0, -1):
        out = out @ spec.Ws @ seg(grid[k - 1], grid[k])
    return out


def coefficients_a(spec: SystemSpec) -> np.ndarray:
    """a[i, j] = <i| Os |j> so that Os = sum_ij a_ij |i><j| (basis indices)."""
    return spec.Os.copy()


def coefficients_b(spec: SystemSpec, dt: float) -> np.ndarray:
    """Conjugation tensor b[i, j, k, l] = <k| e^{i dt H} |i><j| e^{-i dt H} |l>.

    Rewrites e^{i dt H} |i><j| e^{-i dt H} in the dyad basis; at dt = 0 it
    is the identity tensor.
    """
    if dt < 0:
        raise ValueError("dt: must be nonnegative")
    E = matexp_herm(spec.hamiltonian, dt)
    # b[i,j,k,l] = E[k,i] * conj(E[l,j])
    return np.einsum("ki,lj->ijkl", E, E.conj())


@dataclass(frozen=True)
class BasisCoeffs:
    """Offline coefficient pair (a, b) for a fixed time step."""

    a: np.ndarray
    b: np.ndarray
    dt: float


def basis_coeffs(spec: SystemSpec, dt: float) -> BasisCoeffs:
    return BasisCoeffs(a=coefficients_a(spec), b=coefficients_b(spec, dt), dt=dt)
