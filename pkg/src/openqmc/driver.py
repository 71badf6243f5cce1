"""Experiment configuration, dispatch, observables and file I/O.

A run is described by a flat key-value config (JSON or TOML).  Outputs
are a CSV trajectory plus a JSON metadata sidecar embedding the fully
resolved configuration (including the auto-computed correlation bound),
per-order sample counts and wall-clock times, so every figure can be
regenerated from its artifacts.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bath import BathSpec, discretize_bath, estimate_B_bound
from .btb import run_btb, solve_bold_propagator
from .dyson import (
    MarchResult,
    Setup,
    run_bare_dqmc,
    run_dyson_direct,
    run_dyson_reuse,
)
from .errors import ConfigError, NumericalCheckError
from .sampling import SampleBudget
from .system import IDENTITY, SIGMA_X, SIGMA_Z, SystemSpec

__all__ = [
    "METHODS",
    "RunConfig",
    "Trajectory",
    "VarianceResult",
    "load_config",
    "expected_observable",
    "run_experiment",
    "variance_harness",
]

METHODS = ("bare-dqmc", "dyson-direct", "dyson-reuse", "btb")

_CSV_HEADER = "n,t,re_g11,im_g11,re_g12,im_g12,re_g21,im_g21,re_g22,im_g22,obs"

_MATRIX_ALIASES = {
    "sigma_z": SIGMA_Z, "sigmaz": SIGMA_Z, "sz": SIGMA_Z, "σz": SIGMA_Z,
    "sigma_x": SIGMA_X, "sigmax": SIGMA_X, "sx": SIGMA_X, "σx": SIGMA_X,
    "identity": IDENTITY, "id": IDENTITY,
}
_RHO_ALIASES = {
    "up": np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex),
    "down": np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex),
    "mixed": 0.5 * IDENTITY,
}


def _parse_entry(x, key: str) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, str):
        try:
            return complex(x.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"{key}: cannot parse matrix entry {x!r}")
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    raise ConfigError(f"{key}: cannot parse matrix entry {x!r}")


def _parse_matrix(value, key: str, aliases: dict) -> np.ndarray:
    if isinstance(value, str):
        name = value.strip().lower()
        if name in aliases:
            return aliases[name].copy()
        raise ConfigError(f"{key}: unknown matrix name {value!r}")
    arr = np.asarray(value, dtype=object)
    if arr.shape != (2, 2):
        raise ConfigError(f"{key}: expected a 2x2 matrix")
    return np.array(
        [[_parse_entry(arr[r, c], key) for c in range(2)] for r in range(2)],
        dtype=complex,
    )


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description (see load_config for file defaults)."""

    method: str
    system: SystemSpec
    bath: BathSpec
    dt: float = 0.05
    steps: int = 60
    mbar: int = 5
    m0: float = 1e5
    b_bound: float | None = None
    seed: int = 1234
    threads: int = 1
    output: str | None = None
    b_table: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method: expected one of {METHODS}, got {self.method!r}")
        if self.dt <= 0:
            raise ConfigError("dt: must be positive")
        if self.steps < 1:
            raise ConfigError("steps: must be a positive integer")
        if self.mbar < 1 or self.mbar % 2 == 0:
            raise ConfigError("mbar: must be an odd integer >= 1")
        if self.m0 <= 0:
            raise ConfigError("m0: must be positive")
        if self.b_bound is not None and self.b_bound <= 0:
            raise ConfigError("b_bound: must be positive when given")
        if self.threads < 1:
            raise ConfigError("threads: must be a positive integer")


_CONFIG_KEYS = {
    "method", "epsilon", "delta", "observable", "ws", "rho_s",
    "L", "omega_c", "omega_max", "xi", "beta",
    "dt", "steps", "mbar", "m0", "b_bound", "seed", "threads", "output",
    "b_table",
}


def config_from_mapping(raw: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a flat mapping; overrides win over the file."""
    data = dict(raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            data[key] = val
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    if "method" not in data:
        raise ConfigError("method: missing (set it in the config or with --method)")

    system = SystemSpec(
        epsilon=float(data.get("epsilon", 0.0)),
        delta=float(data.get("delta", 1.0)),
        Os=_parse_matrix(data.get("observable", "sigma_z"), "observable", _MATRIX_ALIASES),
        Ws=_parse_matrix(data.get("ws", "sigma_z"), "ws", _MATRIX_ALIASES),
        rho_s=_parse_matrix(
            data.get("rho_s", "up"), "rho_s", {**_MATRIX_ALIASES, **_RHO_ALIASES}
        ),
    )
    bath = BathSpec(
        L=int(data.get("L", 400)),
        omega_c=float(data.get("omega_c", 2.5)),
        xi=float(data.get("xi", 0.2)),
        beta=float(data.get("beta", 5.0)),
        omega_max=(
            float(data["omega_max"]) if data.get("omega_max") is not None else None
        ),
    )
    b_bound = data.get("b_bound")
    return RunConfig(
        method=str(data["method"]),
        system=system,
        bath=bath,
        dt=float(data.get("dt", 0.05)),
        steps=int(data.get("steps", 60)),
        mbar=int(data.get("mbar", 5)),
        m0=float(data.get("m0", 1e5)),
        b_bound=float(b_bound) if b_bound is not None else None,
        seed=int(data.get("seed", 1234)),
        threads=int(data.get("threads", 1)),
        output=data.get("output"),
        b_table=bool(data.get("b_table", False)),
    )


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Read a JSON or TOML config file (extension decides the parser)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config: file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(text)
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})")
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a table/object")
    return config_from_mapping(raw, overrides)


def expected_observable(G: np.ndarray, rho_s: np.ndarray) -> float:
    """Re tr(rho_s G); both inputs must be Hermitian, imag residue < 1e-10."""
    for name, M in (("rho_s", rho_s), ("G", G)):
        if np.abs(M - M.conj().T).max() > 1e-10 * max(1.0, np.abs(M).max()):
            raise NumericalCheckError(f"expected_observable: {name} not Hermitian")
    val = complex(np.trace(rho_s @ G))
    if abs(val.imag) > 1e-10:
        raise NumericalCheckError(
            f"expected_observable: imaginary residue {val.imag:.3e}"
        )
    return val.real


@dataclass
class Trajectory:
    """Per-step record of the propagator and the observable expectation."""

    t: np.ndarray
    G: np.ndarray
    obs: np.ndarray
    method: str
    counts: dict[int, list[int]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def write_csv(self, path: str | Path):
        lines = [_CSV_HEADER]
        for n in range(self.t.size):
            g = self.G[n]
            cells = [str(n), _fmt(self.t[n])]
            for r in range(2):
                for c in range(2):
                    cells.append(_fmt(g[r, c].real))
                    cells.append(_fmt(g[r, c].imag))
            cells.append(_fmt(self.obs[n]))
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n")
        if self.metadata:
            side = Path(str(path) + ".meta.json")
            side.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read_csv(cls, path: str | Path) -> "Trajectory":
        rows = Path(path).read_text().strip().splitlines()
        if not rows or rows[0].strip() != _CSV_HEADER:
            raise ConfigError(f"{path}: not a trajectory CSV (bad header)")
        if len(rows) < 2:
            raise ConfigError(f"{path}: trajectory CSV has no data rows")
        data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
        G = (data[:, 2:10:2] + 1j * data[:, 3:10:2]).reshape(-1, 2, 2)
        meta = {}
        side = Path(str(path) + ".meta.json")
        if side.exists():
            meta = json.loads(side.read_text())
        return cls(
            t=data[:, 1], G=G, obs=data[:, 10],
            method=meta.get("config", {}).get("method", "unknown"), metadata=meta,
        )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _resolved_bound(config: RunConfig, modes) -> float:
    if config.b_bound is not None:
        return config.b_bound
    horizon = 2.0 * config.steps * config.dt
    return estimate_B_bound(modes, config.bath.beta, horizon, 4096)


def make_setup(config: RunConfig) -> Setup:
    modes = discretize_bath(config.bath)
    bound = _resolved_bound(config, modes)
    budget = SampleBudget(M0=config.m0, Bbound=bound, Mbar=config.mbar)
    return Setup(
        system=config.system,
        modes=modes,
        budget=budget,
        dt=config.dt,
        steps=config.steps,
        seed=config.seed,
        threads=config.threads,
        use_b_table=config.b_table,
    )


def _config_dict(config: RunConfig, bound: float) -> dict:
    sys_ = config.system
    return {
        "method": config.method,
        "epsilon": sys_.epsilon,
        "delta": sys_.delta,
        "observable": _mat_json(sys_.Os),
        "ws": _mat_json(sys_.Ws),
        "rho_s": _mat_json(sys_.rho_s),
        "L": config.bath.L,
        "omega_c": config.bath.omega_c,
        "omega_max": config.bath.omega_max,
        "xi": config.bath.xi,
        "beta": config.bath.beta,
        "dt": config.dt,
        "steps": config.steps,
        "mbar": config.mbar,
        "m0": config.m0,
        "b_bound": bound,
        "b_bound_auto": config.b_bound is None,
        "seed": config.seed,
        "threads": config.threads,
        "b_table": config.b_table,
    }


def _mat_json(M: np.ndarray) -> list:
    return [[[M[r, c].real, M[r, c].imag] for c in range(2)] for r in range(2)]


def run_experiment(config: RunConfig) -> Trajectory:
    """Dispatch to the chosen solver; time the phases; write the artifacts."""
    setup = make_setup(config)
    wall: dict[str, float] = {}
    t0 = time.perf_counter()
    table = None
    if config.method == "btb":
        table = solve_bold_propagator(setup)
        wall["bold_presolve_s"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    if config.method == "bare-dqmc":
        result: MarchResult = run_bare_dqmc(setup)
    elif config.method == "dyson-direct":
        result = run_dyson_direct(setup)
    elif config.method == "dyson-reuse":
        result = run_dyson_reuse(setup)
    else:
        result = run_btb(setup, table=table)
    wall["march_s"] = time.perf_counter() - t1
    wall["total_s"] = time.perf_counter() - t0

    tgrid = setup.dt * np.arange(setup.steps + 1)
    if config.method == "bare-dqmc":
        # the bare estimator carries sampling noise in the anti-Hermitian
        # part; report the observable of the Hermitian average
        obs = np.array(
            [
                expected_observable(
                    0.5 * (g + g.conj().T), config.system.rho_s
                )
                for g in result.G
            ]
        )
    else:
        obs = np.array(
            [expected_observable(g, config.system.rho_s) for g in result.G]
        )
    traj = Trajectory(
        t=tgrid,
        G=result.G,
        obs=obs,
        method=config.method,
        counts=result.counts,
        metadata={
            "config": _config_dict(config, setup.budget.Bbound),
            "sample_counts": {str(m): c for m, c in sorted(result.counts.items())},
            "wall_times_s": wall,
            "engine_version": __version__,
        },
    )
    if config.output:
        traj.write_csv(config.output)
        if table is not None:
            _write_bold_csv(str(config.output) + ".bold.csv", table)
    return traj


def _write_bold_csv(path: str, table) -> None:
    lines = ["k,t,re_g11,im_g11,re_g12,im_g12,re_g21,im_g21,re_g22,im_g22"]
    for k in range(table.G0.shape[0]):
        g = table.G0[k]
        cells = [str(k), _fmt(k * table.dt)]
        for r in range(2):
            for c in range(2):
                cells.append(_fmt(g[r, c].real))
                cells.append(_fmt(g[r, c].imag))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class VarianceResult:
    """Empirical per-time variances of both march methods and their ratio."""

    t: np.ndarray
    var_dyson: np.ndarray
    var_btb: np.ndarray
    repeats: int
    metadata: dict = field(default_factory=dict)

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.var_btb > 0, self.var_dyson / self.var_btb, np.nan)

    def write_csv(self, path: str | Path):
        lines = ["n,t,var_dyson,var_btb,ratio"]
        ratio = self.ratio
        for n in range(self.t.size):
            lines.append(
                ",".join(
                    [
                        str(n),
                        _fmt(self.t[n]),
                        _fmt(self.var_dyson[n]),
                        _fmt(self.var_btb[n]),
                        _fmt(ratio[n]) if np.isfinite(ratio[n]) else "nan",
                    ]
                )
            )
        Path(path).write_text("\n".join(lines) + "\n")
        if self.metadata:
            Path(str(path) + ".meta.json").write_text(
                json.dumps(self.metadata, indent=2, sort_keys=True) + "\n"
            )


def variance_harness(
    config: RunConfig,
    repeats: int,
    reference: Trajectory,
    reference_btb: Trajectory | None = None,
    seed_step: int = 1,
) -> VarianceResult:
    """Mean squared deviation from a converged reference, per time step.

    Runs both march methods `repeats` times with seeds seed + seed_step*k
    (seed_step=0 reproduces one run and gives zero variance).  References
    default to the same trajectory for both methods; pass reference_btb to
    mirror the per-method convention.
    """
    if repeats < 2:
        raise ConfigError("repeats: must be at least 2")
    ref_d = reference
    ref_b = reference_btb if reference_btb is not None else reference
    npts = config.steps + 1
    for name, ref in (("reference", ref_d), ("reference_btb", ref_b)):
        if ref.obs.size != npts:
            raise ConfigError(
                f"{name}: has {ref.obs.size} rows, run needs {npts}"
            )
    # resolve the sampling bound once; every repeat shares it
    setup_bound = _resolved_bound(config, discretize_bath(config.bath))
    acc_d = np.zeros(npts)
    acc_b = np.zeros(npts)
    for k in range(repeats):
        seed = config.seed + seed_step * (k + 1)
        for method, ref, acc in (
            ("dyson-reuse", ref_d, acc_d),
            ("btb", ref_b, acc_b),
        ):
            cfg = RunConfig(
                method=method,
                system=config.system,
                bath=config.bath,
                dt=config.dt,
                steps=config.steps,
                mbar=config.mbar,
                m0=config.m0,
                b_bound=setup_bound,
                seed=seed,
                threads=config.threads,
                b_table=config.b_table,
            )
            traj = run_experiment(cfg)
            acc += np.abs(traj.obs - ref.obs) ** 2
    result = VarianceResult(
        t=config.dt * np.arange(npts),
        var_dyson=acc_d / repeats,
        var_btb=acc_b / repeats,
        repeats=repeats,
        metadata={
            "config": _config_dict(config, setup_bound),
            "repeats": repeats,
            "seed_step": seed_step,
        },
    )
    if config.output:
        result.write_csv(config.output)
    return result
