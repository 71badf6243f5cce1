import numpy as np
import pytest

from openqmc.bath import correlation_B
from openqmc.pairings import (
    Family,
    PairingFamily,
    btb_ell,
    enumerate_all,
    enumerate_btb,
    enumerate_connected,
    influence_functional,
)

# reference cardinalities for (s_1..s_m, t): |Q|, |Q^c|, min/max |Q-hat|
REFERENCE_COUNTS = {
    2: (1, 1, 1, 1),
    4: (3, 1, 2, 3),
    6: (15, 4, 6, 12),
    8: (105, 27, 36, 66),
    10: (945, 248, 310, 510),
    12: (10395, 2830, 3396, 5100),
}


def test_two_point_family():
    assert enumerate_all(2) == (((0, 1),),)


def test_four_point_families_explicit():
    assert set(enumerate_all(4)) == {
        ((0, 1), (2, 3)),
        ((0, 2), (1, 3)),
        ((0, 3), (1, 2)),
    }
    assert enumerate_connected(4) == (((0, 2), (1, 3)),)


def test_six_point_connected_explicit():
    expected = {
        ((0, 3), (1, 4), (2, 5)),
        ((0, 3), (1, 5), (2, 4)),
        ((0, 2), (1, 4), (3, 5)),
        ((0, 4), (1, 3), (2, 5)),
    }
    assert set(enumerate_connected(6)) == expected


@pytest.mark.parametrize("m,counts", sorted(REFERENCE_COUNTS.items()))
def test_family_cardinalities(m, counts):
    n_all, n_conn, n_min, n_max = counts
    assert len(enumerate_all(m)) == n_all
    assert len(enumerate_connected(m)) == n_conn
    btb = [len(enumerate_btb(m, ell)) for ell in range(1, m + 1)]
    assert min(btb) == n_min
    assert max(btb) == n_max


def test_btb_four_points_by_split():
    # three negative points (final point is t > 0)
    assert set(enumerate_btb(4, 4)) == {((0, 2), (1, 3)), ((0, 3), (1, 2))}
    # two negative points: nothing excluded
    assert set(enumerate_btb(4, 3)) == set(enumerate_all(4))
    assert set(enumerate_btb(4, 2)) == set(enumerate_all(4))
    # all nonnegative
    assert set(enumerate_btb(4, 1)) == {((0, 1), (2, 3)), ((0, 2), (1, 3))}


def test_chain_inclusion():
    for m in range(2, 11, 2):
        conn = set(enumerate_connected(m))
        full = set(enumerate_all(m))
        for ell in range(1, m + 1):
            btb = set(enumerate_btb(m, ell))
            assert conn <= btb <= full


def test_each_index_covered_once():
    for q in enumerate_all(8):
        flat = [i for pair in q for i in pair]
        assert sorted(flat) == list(range(8))
        assert all(j < k for j, k in q)


def test_enumeration_order_deterministic():
    assert enumerate_all(6) == enumerate_all.__wrapped__(6)
    assert enumerate_all(4)[0] == ((0, 1), (2, 3))


@pytest.mark.parametrize("m", [3, 5])
def test_odd_point_count_rejected(m):
    with pytest.raises(ValueError):
        enumerate_all(m)


def test_btb_ell_out_of_range():
    with pytest.raises(ValueError):
        enumerate_btb(4, 0)
    with pytest.raises(ValueError):
        enumerate_btb(4, 5)


def test_btb_ell_from_points():
    assert btb_ell(np.array([-1.0, -0.5, 0.0, 2.0])) == 3
    assert btb_ell(np.array([0.5, 1.0])) == 1


def test_two_point_influence_is_correlation(weak_modes):
    fam = PairingFamily(Family.ALL, 2)
    pts = np.array([-0.4, 1.1])
    val = influence_functional(pts, fam, weak_modes, 5.0)
    assert val == pytest.approx(correlation_B(weak_modes, 5.0, -0.4, 1.1), rel=1e-14)


def test_four_point_influence_brute_force(weak_modes):
    pts = np.array([-1.2, -0.3, 0.4, 1.7])
    B = lambda a, b: correlation_B(weak_modes, 5.0, pts[a], pts[b])
    expected = B(0, 1) * B(2, 3) + B(0, 2) * B(1, 3) + B(0, 3) * B(1, 2)
    val = influence_functional(pts, PairingFamily(Family.ALL, 4), weak_modes, 5.0)
    assert val == pytest.approx(expected, rel=1e-14)


def test_odd_points_give_zero(weak_modes):
    fam = PairingFamily(Family.ALL, 3)
    assert influence_functional(np.array([-1.0, 0.0, 1.0]), fam, weak_modes, 5.0) == 0


def test_zero_coupling_influence(free_modes):
    for m in (2, 4, 6):
        fam = PairingFamily(Family.ALL, m)
        pts = np.sort(np.random.default_rng(m).uniform(-2, 2, m))
        assert influence_functional(pts, fam, free_modes, 5.0) == 0


def test_unsorted_points_rejected(weak_modes):
    fam = PairingFamily(Family.ALL, 2)
    with pytest.raises(ValueError):
        influence_functional(np.array([1.0, -1.0]), fam, weak_modes, 5.0)
