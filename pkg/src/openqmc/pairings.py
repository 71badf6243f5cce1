"""Wick pairings over ordered time points and the bath influence functionals.

Three diagram families are enumerated over m ordered points (0-based
indices):

* ``ALL``        all (m-1)!! perfect matchings;
* ``CONNECTED``  matchings whose arcs form one component under
  interleaving (two arcs are linked iff j1 < j2 < k1 < k2);
* ``BTB``        matchings admissible in the bold-thin-bold resummation.
  The family depends on the sign pattern of the points only through
  ``ell`` = 1 + (number of strictly negative points): a matching is
  dropped iff it contains a consecutive index block [n1, n2] made of
  complete pairs with n2 < ell - 2 or (n1 > ell and n2 < m - 1)
  (1-based: n2 < ell - 1, ell < n1, n2 < m).

Enumeration is deterministic (lexicographic in the pair list) and cached
per (kind, m, ell); the tables are shared read-only by all samples.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .bath import BathModes, correlation_B

__all__ = [
    "Family",
    "PairingFamily",
    "enumerate_all",
    "enumerate_connected",
    "enumerate_btb",
    "enumerate_family",
    "pairing_index_array",
    "pair_slots",
    "btb_ell",
    "influence_functional",
]

Pairing = tuple[tuple[int, int], ...]


class Family(enum.Enum):
    ALL = "all"
    CONNECTED = "connected"
    BTB = "btb"


@dataclass(frozen=True)
class PairingFamily:
    """A diagram family over m points; ell is required for BTB only."""

    kind: Family
    m: int
    ell: int | None = None

    def __post_init__(self):
        if self.kind is Family.BTB:
            if self.ell is None or not 1 <= self.ell <= self.m:
                raise ValueError("ell: BTB family needs 1 <= ell <= m")

    def pairings(self) -> tuple[Pairing, ...]:
        return enumerate_family(self.kind, self.m, self.ell)


def _check_even(m: int):
    if m < 2 or m % 2:
        raise ValueError(f"m: need an even point count >= 2, got {m}")


@lru_cache(maxsize=None)
def enumerate_all(m: int) -> tuple[Pairing, ...]:
    """All perfect matchings of {0..m-1}, each pair (j, k) with j < k."""
    _check_even(m)

    def rec(free: tuple[int, ...]):
        if not free:
            yield ()
            return
        first, rest = free[0], free[1:]
        for i, k in enumerate(rest):
            head = (first, k)
            for tail in rec(rest[:i] + rest[i + 1 :]):
                yield (head,) + tail

    return tuple(rec(tuple(range(m))))


def _interleaves(p1: tuple[int, int], p2: tuple[int, int]) -> bool:
    (a, b), (c, d) = p1, p2
    return a < c < b < d or c < a < d < b


def _is_connected(pairing: Pairing) -> bool:
    n = len(pairing)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in range(n):
            if v not in seen and _interleaves(pairing[u], pairing[v]):
                seen.add(v)
                stack.append(v)
    return len(seen) == n


@lru_cache(maxsize=None)
def enumerate_connected(m: int) -> tuple[Pairing, ...]:
    """Matchings whose arc-interleave graph is connected."""
    return tuple(q for q in enumerate_all(m) if _is_connected(q))


def _btb_keeps(pairing: Pairing, m: int, ell: int) -> bool:
    # A consecutive block of complete pairs strictly interior to a bold
    # section makes the diagram redundant.  0-based indices; the 1-based
    # conditions n2 < ell-1 and ell < n1, n2 < m translate as below.
    partner = {}
    for a, b in pairing:
        partner[a] = b
        partner[b] = a
    for n1 in range(m):
        for n2 in range(n1 + 1, m, 2):
            if not (n2 < ell - 2 or (n1 > ell - 1 and n2 < m - 1)):
                continue
            if all(n1 <= partner[i] <= n2 for i in range(n1, n2 + 1)):
                return False
    return True


@lru_cache(maxsize=None)
def enumerate_btb(m: int, ell: int) -> tuple[Pairing, ...]:
    """BTB-admissible matchings for the sign pattern with split index ell.

    ell is 1-based: points 0..ell-2 are negative, the rest nonnegative
    (ell = 1 when all points are nonnegative).
    """
    _check_even(m)
    if not 1 <= ell <= m:
        raise ValueError(f"ell: need 1 <= ell <= m, got {ell}")
    return tuple(q for q in enumerate_all(m) if _btb_keeps(q, m, ell))


def enumerate_family(kind: Family, m: int, ell: int | None = None):
    if kind is Family.ALL:
        return enumerate_all(m)
    if kind is Family.CONNECTED:
        return enumerate_connected(m)
    return enumerate_btb(m, ell)


def pair_slots(m: int) -> tuple[tuple[int, int], ...]:
    """Fixed ordering of the m(m-1)/2 index pairs used by the batch kernels."""
    return tuple(combinations(range(m), 2))


@lru_cache(maxsize=None)
def pairing_index_array(kind: Family, m: int, ell: int | None = None) -> np.ndarray:
    """Family as an int array (n_pairings, m/2) of slots into pair_slots(m)."""
    slot_of = {p: i for i, p in enumerate(pair_slots(m))}
    fam = enumerate_family(kind, m, ell)
    return np.array([[slot_of[p] for p in q] for q in fam], dtype=np.intp)


def btb_ell(points: np.ndarray) -> int:
    """Split index of a sign pattern: 1 + number of strictly negative points."""
    return 1 + int(np.count_nonzero(np.asarray(points) < 0))


def influence_functional(
    points, family: PairingFamily, bath: BathModes, beta: float
) -> complex:
    """Sum over the family's pairings of the product of arc correlations.

    Reference (scalar) implementation; returns 0 for an odd point count.
    """
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) < 0):
        raise ValueError("points: must be sorted ascending")
    m = pts.size
    if m % 2:
        return 0.0 + 0.0j
    if m != family.m:
        raise ValueError(f"points: family is over m={family.m}, got {m}")
    total = 0.0 + 0.0j
    for q in family.pairings():
        prod = 1.0 + 0.0j
        for j, k in q:
            prod *= correlation_B(bath, beta, pts[j], pts[k])
        total += prod
    return total
