from itertools import combinations

import numpy as np
import pytest

from openqmc.btb import (
    BoldTable,
    btb_basis_propagator,
    btb_system_functional,
    interpolate_bold,
    run_btb,
    solve_bold_propagator,
)
from openqmc.dyson import run_dyson_reuse
from openqmc.errors import NumericalCheckError
from openqmc.pairings import enumerate_all, enumerate_btb
from openqmc.sampling import shift_map
from openqmc.system import (
    SystemSpec,
    basis_propagator,
    coefficients_b,
    expi_factory,
    matexp_herm,
)

from test_dyson import make_setup, rabi_sigma_z, sigma_z_obs
from test_estimators import random_table

STATES = (-1, 1)


def excluded_by_definition(q, m, ell):
    """Literal transcription of the admissibility rule: quantify over all
    subsets of pairs instead of scanning index windows (independent oracle)."""
    for r in range(1, len(q) + 1):
        for subset in combinations(q, r):
            idx = sorted(i for pair in subset for i in pair)
            lo, hi = idx[0] + 1, idx[-1] + 1  # 1-based
            if idx != list(range(idx[0], idx[-1] + 1)):
                continue
            if hi < ell - 1 or (ell < lo and hi < m):
                return True
    return False


@pytest.mark.parametrize("m", [2, 4, 6, 8])
def test_btb_family_against_subset_oracle(m):
    for ell in range(1, m + 1):
        expected = tuple(
            q for q in enumerate_all(m) if not excluded_by_definition(q, m, ell)
        )
        assert enumerate_btb(m, ell) == expected


def test_bold_table_initial_identity(weak_modes, spin):
    setup = make_setup(spin, weak_modes, M0=500, Mbar=3, steps=10)
    table = solve_bold_propagator(setup)
    assert np.allclose(table.G0[0], np.eye(2))
    assert table.G0.shape == (11, 2, 2)


def test_bold_table_zero_coupling_matches_exponential(free_modes, spin):
    setup = make_setup(spin, free_modes, M0=100, Mbar=3, steps=60, Bb=0.0)
    table = solve_bold_propagator(setup)
    expi = expi_factory(spin.hamiltonian)
    worst = max(
        np.abs(table.G0[k] - expi(k * 0.05)).max() for k in range(61)
    )
    assert worst < 5e-3


def test_bold_table_unitarity_envelope(weak_modes, spin):
    # the bold line resums bath dressing, so it is dissipative rather than
    # unitary: the deviation grows smoothly from zero and saturates well
    # below one at weak coupling (computed envelope, not a guess)
    setup = make_setup(spin, weak_modes, M0=20000, Mbar=5, steps=60)
    table = solve_bold_propagator(setup)
    devs = np.array(
        [
            np.abs(table.G0[k] @ table.G0[k].conj().T - np.eye(2)).max()
            for k in range(61)
        ]
    )
    assert devs[0] == 0.0
    assert devs[20] < 0.3  # t = 1
    assert devs.max() < 0.7  # t <= 3
    assert np.all(np.diff(devs) > -0.02)  # smooth growth, no jumps


def test_interpolation_nodes_and_midpoint(spin):
    table = random_table(spin, 10, 0.1, seed=1)
    for k in (0, 3, 10):
        assert np.allclose(interpolate_bold(table, k * 0.1), table.G0[k], atol=1e-14)
    mid = interpolate_bold(table, 0.35)
    assert np.allclose(mid, 0.5 * (table.G0[3] + table.G0[4]), atol=1e-14)


def test_interpolation_zero_coupling_second_order(free_modes, spin):
    setup = make_setup(spin, free_modes, M0=100, Mbar=3, steps=40, Bb=0.0)
    table = solve_bold_propagator(setup)
    expi = expi_factory(spin.hamiltonian)
    rng = np.random.default_rng(2)
    ss = rng.uniform(0, 2.0, 40)
    worst = np.abs(interpolate_bold(table, ss) - expi(ss)).max()
    assert worst < 5e-3


def test_interpolation_range_check(spin):
    table = random_table(spin, 10, 0.1, seed=4)
    with pytest.raises(NumericalCheckError):
        interpolate_bold(table, 1.5)
    with pytest.raises(NumericalCheckError):
        interpolate_bold(table, -0.2)


def test_btb_propagator_crossing_matches_bare_basis(spin):
    table = random_table(spin, 20, 0.05, seed=5)
    for i in STATES:
        for j in STATES:
            got = btb_basis_propagator(table, spin, i, j, -0.4, 0.7)
            ref = basis_propagator(spin, i, j, -0.4, 0.7)
            assert np.allclose(got, ref, atol=1e-14)


def test_btb_propagator_conjugate_mirror(spin):
    table = random_table(spin, 20, 0.05, seed=6)
    gap = 0.42
    neg = btb_basis_propagator(table, spin, 1, 1, -0.1 - gap, -0.1)
    pos = btb_basis_propagator(table, spin, 1, 1, 0.1, 0.1 + gap)
    assert np.allclose(neg, pos.conj().T, atol=1e-14)


def test_btb_propagator_zero_coupling_reduces_to_bare(free_modes, spin):
    setup = make_setup(spin, free_modes, M0=100, Mbar=3, steps=40, Bb=0.0)
    table = solve_bold_propagator(setup)
    rng = np.random.default_rng(8)
    for _ in range(10):
        a, b = np.sort(rng.uniform(0.01, 1.9, 2))
        got = btb_basis_propagator(table, spin, 1, -1, a, b)
        ref = matexp_herm(spin.hamiltonian, b - a)
        assert np.abs(got - ref).max() < 5e-3


def test_btb_chain_shift_identity(spin, rng):
    # gap-preserving shift: identity holds exactly on any table
    table = random_table(spin, 80, 0.05, seed=9)
    for _ in range(12):
        m = int(rng.integers(1, 5))
        t = rng.uniform(0.5, 1.5)
        dt = rng.uniform(0.0, 0.5)
        pts = np.sort(rng.uniform(-t, t, m))
        shifted = shift_map(pts, dt)
        b = coefficients_b(spin, dt)
        for bi, i in enumerate(STATES):
            for bj, j in enumerate(STATES):
                lhs = btb_system_functional(table, spin, t + dt, shifted, (i, j))
                rhs = np.zeros((2, 2), dtype=complex)
                for bk, k in enumerate(STATES):
                    for bl, l in enumerate(STATES):
                        rhs += b[bi, bj, bk, bl] * btb_system_functional(
                            table, spin, t, pts, (k, l)
                        )
                assert np.abs(lhs - rhs).max() < 1e-12


def test_btb_zero_coupling_closed_form(free_modes):
    spec = SystemSpec(epsilon=0.3, delta=0.5)
    setup = make_setup(spec, free_modes, M0=100, Mbar=3, steps=40, Bb=1e-12)
    obs = sigma_z_obs(run_btb(setup).G)
    exact = rabi_sigma_z(0.3, 0.5, 0.05 * np.arange(41))
    assert np.abs(obs - exact).max() < 5e-3


def test_btb_hermiticity(weak_modes, spin):
    setup = make_setup(spin, weak_modes, M0=2000, Mbar=3)
    res = run_btb(setup)
    assert max(np.abs(g - g.conj().T).max() for g in res.G) <= 1e-12
    assert np.allclose(res.G[0], spin.Os)


def test_btb_agrees_with_dyson_weak_coupling(weak_modes, spin):
    R = 8
    t_idx = [10, 20]
    btb, dys = [], []
    for k in range(R):
        setup = make_setup(spin, weak_modes, M0=3000, Mbar=3, seed=300 + 11 * k)
        btb.append(sigma_z_obs(run_btb(setup).G)[t_idx])
        dys.append(sigma_z_obs(run_dyson_reuse(setup).G)[t_idx])
    btb = np.array(btb)
    dys = np.array(dys)
    diff = np.abs(btb.mean(0) - dys.mean(0))
    joint = np.sqrt(btb.var(0, ddof=1) / R + dys.var(0, ddof=1) / R)
    assert np.all(diff <= 3 * joint)


def test_btb_rejects_short_table(weak_modes, spin):
    setup = make_setup(spin, weak_modes, M0=200, Mbar=3, steps=20)
    short = BoldTable(G0=np.broadcast_to(np.eye(2, dtype=complex), (5, 2, 2)).copy(), dt=0.05)
    with pytest.raises(NumericalCheckError):
        run_btb(setup, table=short)


def test_strong_coupling_order_seven_profile():
    # desk-scale reproduction of the strong-coupling picture: the two
    # order-7 marches track each other up to t ~ 2 and split afterwards
    # (the series march deviates), while the bold march's own truncation
    # step stays small
    from openqmc.driver import config_from_mapping, run_experiment

    strong = dict(
        epsilon=1.0, delta=1.0, L=400, omega_c=2.5, xi=0.4, beta=5.0,
        dt=0.05, steps=60, b_table=True, seed=808, m0=5e4,
    )
    obs = {}
    for method in ("dyson-reuse", "btb"):
        for mbar in (5, 7):
            traj = run_experiment(
                config_from_mapping({**strong, "method": method, "mbar": mbar})
            )
            obs[(method, mbar)] = traj.obs
    assert np.abs(obs[("btb", 5)] - obs[("btb", 7)]).max() <= 0.1
    gap = np.abs(obs[("dyson-reuse", 7)] - obs[("btb", 7)])
    assert gap[:41].max() < 0.05   # agreement through t = 2
    assert gap[41:].max() > 0.10   # late-time deviation
