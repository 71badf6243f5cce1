"""Batched evaluation of system functionals and influence functionals.

Internal plumbing shared by the Dyson and BTB solvers.  Samples are
processed in fixed-size chunks summed in chunk order, so results are
bitwise reproducible for any thread count.

For a sample s_1 <= ... <= s_m on [-t, t] the system chain

    U = G(s_m, t) Ws G(s_{m-1}, s_m) Ws ... Ws G(-t, s_1)

contains exactly one zero-crossing segment.  Splitting the chain there,
U_ij = (A E_f) |i><j| (E_l C) with E_x = e^{i s_x H}, so the four basis
functionals cost two partial products plus an outer product per sample.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import _fast
from .errors import NumericalCheckError
from .pairings import Family, pair_slots, pairing_index_array

CHUNK = 4096

__all__ = ["SegmentKit", "dyson_segments", "chain_tensor", "influence_batch",
           "basis_term", "bold_chain_term", "interp_table", "CHUNK"]


@dataclass(frozen=True)
class SegmentKit:
    """Propagator providers for the three segment flavours of a chain.

    seg_neg/seg_pos map an array of nonnegative gaps to stacked 2x2
    propagators for intervals left/right of zero; expi provides the
    e^{i theta H} factors of the crossing segment.  The remaining fields
    describe the same providers declaratively for the compiled kernels
    (mode "trig" for bare exponentials, "table" for bold interpolation);
    mode None disables the fast path.
    """

    seg_neg: Callable[[np.ndarray], np.ndarray]
    seg_pos: Callable[[np.ndarray], np.ndarray]
    expi: Callable[[np.ndarray], np.ndarray]
    ws: np.ndarray
    mode: str | None = None
    nu: float = 0.0
    vn: np.ndarray | None = None
    table: np.ndarray | None = None
    table_dt: float = 0.0


def dyson_segments(H: np.ndarray, ws: np.ndarray) -> SegmentKit:
    """Bare-propagator kit: e^{-i g H} left of zero, e^{+i g H} right."""
    from .system import expi_factory, herm_parts

    expi = expi_factory(H)
    alpha, nu, vn = herm_parts(H)
    fast = abs(alpha) < 1e-14  # compiled kernel assumes a traceless H
    return SegmentKit(
        seg_neg=lambda g: expi(-g),
        seg_pos=lambda g: expi(g),
        expi=expi,
        ws=np.asarray(ws, dtype=complex),
        mode="trig" if fast else None,
        nu=nu,
        vn=vn,
    )


@lru_cache(maxsize=None)
def _slot_arrays(m: int) -> tuple[np.ndarray, np.ndarray]:
    slots = pair_slots(m)
    a = np.fromiter((p[0] for p in slots), dtype=np.intp)
    b = np.fromiter((p[1] for p in slots), dtype=np.intp)
    return a, b


def interp_table(G0: np.ndarray, dt: float, s: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation of a propagator table (vectorized)."""
    n_max = G0.shape[0] - 1
    s = np.asarray(s, dtype=float)
    if s.size and (s.min() < -1e-12 or s.max() > n_max * dt * (1.0 + 1e-12) + 1e-12):
        raise NumericalCheckError(
            f"bold table: gap {float(s.max()):.6g} outside [0, {n_max * dt:.6g}]"
        )
    x = np.clip(s / dt, 0.0, float(n_max))
    idx = np.minimum(x.astype(np.intp), n_max - 1)
    frac = (x - idx)[..., None, None]
    return G0[idx] * (1.0 - frac) + G0[idx + 1] * frac


_DUMMY_TABLE = np.zeros((2, 2, 2), dtype=complex)


def _fast_ready(kit: SegmentKit, corr) -> bool:
    return (
        _fast.HAVE_NUMBA
        and kit.mode is not None
        and getattr(corr, "table_vals", None) is not None
    )


def influence_batch(
    P: np.ndarray,
    kind: Family,
    corr,
    neg_counts: np.ndarray,
) -> np.ndarray:
    """Influence functional for every row of P (S, M), M even.

    ``corr`` maps dtau arrays to B values (direct or tabulated).  For the
    BTB family the admissible pairing set depends on the row's sign split
    ell = neg_count + 1; rows are grouped accordingly.
    """
    S, M = P.shape
    ia, ib = _slot_arrays(M)
    dtau = np.abs(P[:, ia]) - np.abs(P[:, ib])
    bv = corr(dtau)
    out = np.empty(S, dtype=complex)
    if kind is Family.BTB:
        for c in np.unique(neg_counts):
            arcs = pairing_index_array(kind, M, int(c) + 1)
            rows = neg_counts == c
            out[rows] = bv[rows][:, arcs].prod(axis=2).sum(axis=1)
    else:
        arcs = pairing_index_array(kind, M)
        out[:] = bv[:, arcs].prod(axis=2).sum(axis=1)
    return out


def _diag_or_none(M: np.ndarray) -> np.ndarray | None:
    if abs(M[0, 1]) == 0.0 and abs(M[1, 0]) == 0.0:
        return np.diagonal(M).copy()
    return None


def chain_tensor(
    pts: np.ndarray,
    t: float,
    weights: np.ndarray,
    neg_counts: np.ndarray,
    kit: SegmentKit,
) -> np.ndarray:
    """sum_s weights[s] * U_ij(-t, pts[s], t) as a (i, j, 2, 2) tensor.

    All m+1 segment propagators of every sample are evaluated in two bulk
    provider calls; running suffix/prefix products over the whole chunk
    then give the partial chains left and right of each sample's crossing
    segment, which are selected per row by its crossing index.  A diagonal
    coupling operator is folded in as a row/column scaling.
    """
    S, m = pts.shape
    if S == 0:
        return np.zeros((2, 2, 2, 2), dtype=complex)
    cross = neg_counts.astype(np.intp)
    q = np.concatenate((np.full((S, 1), -t), pts, np.full((S, 1), t)), axis=1)
    gaps = np.diff(q, axis=1)
    # the crossing gap is never used; zero it so table-backed providers
    # are not asked for out-of-horizon values
    gaps[np.arange(S), cross] = 0.0

    gpos = kit.seg_pos(gaps)  # (S, m+1, 2, 2)
    gneg = kit.seg_neg(gaps)

    wdiag = _diag_or_none(kit.ws)
    if wdiag is None:
        seg_w_pos = gpos @ kit.ws  # G_k Ws
        seg_w_neg = kit.ws @ gneg  # Ws G_k
    else:
        seg_w_pos = gpos * wdiag[None, None, None, :]
        seg_w_neg = gneg * wdiag[None, None, :, None]

    eye = np.eye(2, dtype=complex)
    # suffix[j] = (G_m Ws)(G_{m-1} Ws)...(G_j Ws), positive-branch segments;
    # selected at j = cross+1, so index 0 is never needed
    suffix = np.empty((m + 2, S, 2, 2), dtype=complex)
    suffix[m + 1] = eye
    for j in range(m, 0, -1):
        suffix[j] = suffix[j + 1] @ seg_w_pos[:, j]
    # prefix[j] = (Ws G_{j-1})(Ws G_{j-2})...(Ws G_0), negative branch
    prefix = np.empty((m + 1, S, 2, 2), dtype=complex)
    prefix[0] = eye
    for j in range(1, m + 1):
        prefix[j] = seg_w_neg[:, j - 1] @ prefix[j - 1]

    rows = np.arange(S)
    left = suffix[cross + 1, rows]
    right = prefix[cross, rows]
    u = left @ kit.expi(q[rows, cross + 1])
    v = kit.expi(q[rows, cross]) @ right
    return np.einsum("s,sai,sjb->ijab", weights, u, v)


def _chunk_ranges(n: int, chunk: int):
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def _chunked(fn, n: int, threads: int, chunk: int, shape) -> np.ndarray:
    ranges = _chunk_ranges(n, chunk)
    if threads <= 1 or len(ranges) <= 1:
        parts = [fn(lo, hi) for lo, hi in ranges]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda r: fn(*r), ranges))
    total = np.zeros(shape, dtype=complex)
    for p in parts:  # fixed order keeps the reduction bitwise stable
        total += p
    return total


def basis_term(
    pts: np.ndarray,
    t: float,
    kit: SegmentKit,
    kind: Family,
    corr,
    *,
    append_final: bool = True,
    threads: int = 1,
    chunk: int = CHUNK,
) -> np.ndarray:
    """sum_s (-1)^{#neg} L_b(...) U_ij over a sample block (no prefactors).

    With append_final the influence functional runs over (s_1..s_m, t),
    as in the series for the memory kernel; without it, over the sample
    points alone (bare estimator).  When numba, a correlation table and a
    declarative segment kit are all available, a compiled per-sample
    kernel replaces the vectorized path (same chunk split, same result up
    to rounding).
    """
    m = pts.shape[1]
    M = m + 1 if append_final else m
    fast = _fast_ready(kit, corr)

    def one(lo: int, hi: int) -> np.ndarray:
        sub = pts[lo:hi]
        neg = (sub < 0).sum(axis=1)
        if fast:
            out = np.zeros((2, 2, 2, 2), dtype=complex)
            pa, pb = _slot_arrays(M)
            table = kit.table if kit.mode == "table" else _DUMMY_TABLE
            for c in np.unique(neg):
                rows = np.ascontiguousarray(sub[neg == c])
                ell = int(c) + 1 if kind is Family.BTB else None
                arcs = pairing_index_array(kind, M, ell)
                _fast.group_tensor_kernel(
                    rows, t, int(c), 0 if kit.mode == "trig" else 1,
                    kit.nu, kit.vn, table, kit.table_dt, kit.ws,
                    corr.table_grid0, corr.table_step, corr.table_vals,
                    arcs, pa, pb, append_final, out,
                )
            return out
        P = np.concatenate((sub, np.full((sub.shape[0], 1), t)), axis=1) \
            if append_final else sub
        lb = influence_batch(P, kind, corr, neg)
        w = np.where(neg % 2 == 0, 1.0, -1.0) * lb
        return chain_tensor(sub, t, w, neg, kit)

    return _chunked(one, pts.shape[0], threads, chunk, (2, 2, 2, 2))


def bold_chain_term(
    pts: np.ndarray,
    t: float,
    table: np.ndarray,
    table_dt: float,
    ws: np.ndarray,
    corr,
    *,
    threads: int = 1,
    chunk: int = CHUNK,
) -> np.ndarray:
    """sum_s L_b^c(s, t) * [Ws G(t-s_m) Ws G(s_m-s_{m-1}) ... Ws G(s_1)].

    One-sided chain of the bold pre-solve: all points in [0, t], a
    coupling insertion at every point and at the endpoint t, segments
    interpolated from the (possibly partial) bold table.
    """
    S, m = pts.shape
    ws = np.asarray(ws, dtype=complex)
    wdiag = _diag_or_none(ws)
    fast = _fast.HAVE_NUMBA and getattr(corr, "table_vals", None) is not None

    def one(lo: int, hi: int) -> np.ndarray:
        sub = pts[lo:hi]
        ns = sub.shape[0]
        if fast:
            out = np.zeros((2, 2), dtype=complex)
            pa, pb = _slot_arrays(m + 1)
            arcs = pairing_index_array(Family.CONNECTED, m + 1)
            _fast.bold_chain_kernel(
                np.ascontiguousarray(sub), t, table, table_dt, ws,
                corr.table_grid0, corr.table_step, corr.table_vals,
                arcs, pa, pb, out,
            )
            return out
        P = np.concatenate((sub, np.full((ns, 1), t)), axis=1)
        lb = influence_batch(P, Family.CONNECTED, corr, np.zeros(ns, dtype=int))
        q = np.concatenate((np.zeros((ns, 1)), sub, np.full((ns, 1), t)), axis=1)
        segs = interp_table(table, table_dt, np.diff(q, axis=1))
        if wdiag is None:
            wsegs = np.einsum("ab,skbc->skac", ws, segs)
        else:
            wsegs = segs * wdiag[None, None, :, None]
        out = wsegs[:, m]
        for k in range(m - 1, -1, -1):
            out = out @ wsegs[:, k]
        return np.einsum("s,sab->ab", lb, out)

    return _chunked(one, pts.shape[0], threads, chunk, (2, 2))
