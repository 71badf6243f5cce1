"""Compiled per-sample kernels for the march and pre-solve hot loops.

Optional: activated only when numba imports, the correlation evaluator is
table-backed, and the spin Hamiltonian is traceless (always true for the
bias/tunneling form).  The numpy implementations in ``estimators`` remain
the reference; tests pin the two paths against each other.  Kernels sum
samples sequentially, so results do not depend on thread count beyond the
fixed chunk split.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is normally present
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True, nogil=True)
def _expi_into(theta, nu, vn, out):
    # e^{i theta H} for traceless H = nu * vn, vn a unit Hermitian matrix
    c = np.cos(nu * theta)
    s = np.sin(nu * theta)
    out[0, 0] = c + 1j * s * vn[0, 0]
    out[0, 1] = 1j * s * vn[0, 1]
    out[1, 0] = 1j * s * vn[1, 0]
    out[1, 1] = c + 1j * s * vn[1, 1]


@njit(cache=True, nogil=True)
def _interp_into(gap, table, dt_table, out):
    n_max = table.shape[0] - 1
    x = gap / dt_table
    if x < 0.0:
        x = 0.0
    idx = int(x)
    if idx > n_max - 1:
        idx = n_max - 1
    f = x - idx
    if f > 1.0:
        f = 1.0
    g = 1.0 - f
    out[0, 0] = g * table[idx, 0, 0] + f * table[idx + 1, 0, 0]
    out[0, 1] = g * table[idx, 0, 1] + f * table[idx + 1, 0, 1]
    out[1, 0] = g * table[idx, 1, 0] + f * table[idx + 1, 1, 0]
    out[1, 1] = g * table[idx, 1, 1] + f * table[idx + 1, 1, 1]


@njit(cache=True, nogil=True)
def _matmul2(a, b, out):
    out[0, 0] = a[0, 0] * b[0, 0] + a[0, 1] * b[1, 0]
    out[0, 1] = a[0, 0] * b[0, 1] + a[0, 1] * b[1, 1]
    out[1, 0] = a[1, 0] * b[0, 0] + a[1, 1] * b[1, 0]
    out[1, 1] = a[1, 0] * b[0, 1] + a[1, 1] * b[1, 1]


@njit(cache=True, nogil=True)
def _b_lookup(dtau, bgrid0, bstep, bvals):
    x = (dtau - bgrid0) / bstep
    idx = int(x)
    if idx < 0:
        idx = 0
    top = bvals.shape[0] - 2
    if idx > top:
        idx = top
    f = x - idx
    return bvals[idx] * (1.0 - f) + bvals[idx + 1] * f


@njit(cache=True, nogil=True)
def group_tensor_kernel(
    pts, tval, cross, seg_mode, nu, vn, table, dt_table,
    ws, bgrid0, bstep, bvals, arcs, pa, pb, append_final, out,
):
    """Accumulate sum_s (-1)^cross L_b U_ij into out (2, 2, 2, 2).

    All rows share the crossing index ``cross`` (caller groups by the
    negative-point count).  seg_mode 0 evaluates bare trig segments,
    1 interpolates the bold table; the crossing factors are always trig.
    """
    n, m = pts.shape
    npairs = pa.shape[0]
    n_pairings = arcs.shape[0]
    n_arcs = arcs.shape[1]
    M = m + 1 if append_final else m
    sign = -1.0 if cross % 2 == 1 else 1.0

    P = np.empty(M)
    bv = np.empty(npairs, dtype=np.complex128)
    q = np.empty(m + 2)
    seg = np.empty((2, 2), dtype=np.complex128)
    tmp = np.empty((2, 2), dtype=np.complex128)
    acc = np.empty((2, 2), dtype=np.complex128)
    u = np.empty((2, 2), dtype=np.complex128)
    v = np.empty((2, 2), dtype=np.complex128)
    ef = np.empty((2, 2), dtype=np.complex128)
    el = np.empty((2, 2), dtype=np.complex128)

    for s_idx in range(n):
        for j in range(m):
            P[j] = pts[s_idx, j]
        if append_final:
            P[m] = tval
        for p in range(npairs):
            dtau = abs(P[pa[p]]) - abs(P[pb[p]])
            bv[p] = _b_lookup(dtau, bgrid0, bstep, bvals)
        lb = 0.0 + 0.0j
        for k in range(n_pairings):
            prod = bv[arcs[k, 0]]
            for a in range(1, n_arcs):
                prod = prod * bv[arcs[k, a]]
            lb += prod
        w = sign * lb

        q[0] = -tval
        for j in range(m):
            q[j + 1] = pts[s_idx, j]
        q[m + 1] = tval

        # left chain: product over segments m..cross+1 of (G_k Ws)
        acc[0, 0] = 1.0
        acc[0, 1] = 0.0
        acc[1, 0] = 0.0
        acc[1, 1] = 1.0
        for k in range(m, cross, -1):
            gap = q[k + 1] - q[k]
            if seg_mode == 0:
                _expi_into(gap, nu, vn, seg)
            else:
                _interp_into(gap, table, dt_table, seg)
            _matmul2(acc, seg, tmp)
            _matmul2(tmp, ws, acc)
        _expi_into(q[cross + 1], nu, vn, ef)
        _matmul2(acc, ef, u)

        # right chain: product over segments cross-1..0 of (Ws G_k)
        acc[0, 0] = 1.0
        acc[0, 1] = 0.0
        acc[1, 0] = 0.0
        acc[1, 1] = 1.0
        for k in range(cross - 1, -1, -1):
            gap = q[k + 1] - q[k]
            if seg_mode == 0:
                # negative-branch segment: adjoint of the trig propagator
                _expi_into(-gap, nu, vn, seg)
            else:
                _interp_into(gap, table, dt_table, seg)
                swap = seg[0, 1]
                seg[0, 1] = np.conj(seg[1, 0])
                seg[1, 0] = np.conj(swap)
                seg[0, 0] = np.conj(seg[0, 0])
                seg[1, 1] = np.conj(seg[1, 1])
            _matmul2(acc, ws, tmp)
            _matmul2(tmp, seg, acc)
        _expi_into(q[cross], nu, vn, el)
        _matmul2(el, acc, v)

        for i in range(2):
            for j in range(2):
                wu0 = w * u[0, i]
                wu1 = w * u[1, i]
                out[i, j, 0, 0] += wu0 * v[j, 0]
                out[i, j, 0, 1] += wu0 * v[j, 1]
                out[i, j, 1, 0] += wu1 * v[j, 0]
                out[i, j, 1, 1] += wu1 * v[j, 1]


@njit(cache=True, nogil=True)
def bold_chain_kernel(
    pts, tval, table, dt_table, ws, bgrid0, bstep, bvals, arcs, pa, pb, out
):
    """Accumulate sum_s L_b^c(s, t) [Ws G(t-s_m) Ws ... Ws G(s_1)] into out."""
    n, m = pts.shape
    npairs = pa.shape[0]
    n_pairings = arcs.shape[0]
    n_arcs = arcs.shape[1]

    P = np.empty(m + 1)
    bv = np.empty(npairs, dtype=np.complex128)
    q = np.empty(m + 2)
    seg = np.empty((2, 2), dtype=np.complex128)
    tmp = np.empty((2, 2), dtype=np.complex128)
    acc = np.empty((2, 2), dtype=np.complex128)

    for s_idx in range(n):
        for j in range(m):
            P[j] = pts[s_idx, j]
        P[m] = tval
        for p in range(npairs):
            dtau = abs(P[pa[p]]) - abs(P[pb[p]])
            bv[p] = _b_lookup(dtau, bgrid0, bstep, bvals)
        lb = 0.0 + 0.0j
        for k in range(n_pairings):
            prod = bv[arcs[k, 0]]
            for a in range(1, n_arcs):
                prod = prod * bv[arcs[k, a]]
            lb += prod

        q[0] = 0.0
        for j in range(m):
            q[j + 1] = pts[s_idx, j]
        q[m + 1] = tval
        acc[0, 0] = ws[0, 0]
        acc[0, 1] = ws[0, 1]
        acc[1, 0] = ws[1, 0]
        acc[1, 1] = ws[1, 1]
        for k in range(m, -1, -1):
            _interp_into(q[k + 1] - q[k], table, dt_table, seg)
            _matmul2(acc, seg, tmp)
            if k > 0:
                _matmul2(tmp, ws, acc)
            else:
                acc[0, 0] = tmp[0, 0]
                acc[0, 1] = tmp[0, 1]
                acc[1, 0] = tmp[1, 0]
                acc[1, 1] = tmp[1, 1]
        out[0, 0] += lb * acc[0, 0]
        out[0, 1] += lb * acc[0, 1]
        out[1, 0] += lb * acc[1, 0]
        out[1, 1] += lb * acc[1, 1]
