# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: child enumeration for S_k and span closure."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t

cnp.import_array()

DEF MAXN = 32
DEF MAXR = 16


def extend_level(const uint8_t[:, :, ::1] parents, const uint8_t[:, ::1] add,
                 const uint8_t[:, ::1] mul, const uint8_t[::1] neg, const uint8_t[::1] inv,
                 const uint8_t[::1] conj, const uint8_t[:, ::1] gram,
                 const int64_t[::1] ti, const int64_t[::1] tj, const uint8_t[::1] tc):
    """Children of each parent X (RREF, r x N): singular w perpendicular to X,
    with pivot c beyond the pivots of X, X[:, c] == 0, w[c] = 1.

    Returns (parent index, appended row) arrays.
    """
    cdef Py_ssize_t B = parents.shape[0], r = parents.shape[1], N = parents.shape[2]
    cdef Py_ssize_t q = add.shape[0], nt = ti.shape[0]
    if N > MAXN or r > MAXR:
        raise ValueError("instance exceeds kernel limits")
    cdef uint8_t g[MAXR][MAXN]
    cdef uint8_t A[MAXR][MAXN + 1]
    cdef uint8_t part[MAXN]
    cdef uint8_t basis[MAXN][MAXN]
    cdef uint8_t w[MAXN]
    cdef int64_t digits[MAXN]
    cdef Py_ssize_t pivcol[MAXR]
    cdef Py_ssize_t freecol[MAXN]
    cdef bint colzero[MAXN]
    cdef Py_ssize_t b, i, j, l, c, t, lp, u, nrow, npiv, nfree, row, k
    cdef uint8_t acc, f, x, val
    cdef bint ok
    cdef int64_t count, combo, total

    cdef Py_ssize_t cap = 1024, n_out = 0
    out_parent = np.empty(cap, dtype=np.int64)
    out_rows = np.empty((cap, N), dtype=np.uint8)
    cdef int64_t[::1] op = out_parent
    cdef uint8_t[:, ::1] orow = out_rows

    for b in range(B):
        lp = -1
        for i in range(r):
            for j in range(N):
                if parents[b, i, j] != 0:
                    if j > lp:
                        lp = j
                    break
        for j in range(N):
            colzero[j] = True
        for i in range(r):
            for j in range(N):
                if parents[b, i, j] != 0:
                    colzero[j] = False
            for j in range(N):
                acc = 0
                for l in range(N):
                    x = parents[b, i, l]
                    if x != 0 and gram[l, j] != 0:
                        acc = add[acc, mul[conj[x], gram[l, j]]]
                g[i][j] = acc
        for c in range(lp + 1, N):
            if not colzero[c]:
                continue
            u = N - 1 - c
            for i in range(r):
                for t in range(u):
                    A[i][t] = g[i][c + 1 + t]
                A[i][u] = neg[g[i][c]]
            # eliminate
            nrow = r
            npiv = 0
            for t in range(u):
                if npiv == nrow:
                    break
                row = -1
                for i in range(npiv, nrow):
                    if A[i][t] != 0:
                        row = i
                        break
                if row < 0:
                    continue
                if row != npiv:
                    for l in range(u + 1):
                        x = A[row][l]
                        A[row][l] = A[npiv][l]
                        A[npiv][l] = x
                f = inv[A[npiv][t]]
                for l in range(u + 1):
                    A[npiv][l] = mul[f, A[npiv][l]]
                for i in range(nrow):
                    if i != npiv and A[i][t] != 0:
                        f = A[i][t]
                        for l in range(u + 1):
                            A[i][l] = add[A[i][l], neg[mul[f, A[npiv][l]]]]
                pivcol[npiv] = t
                npiv += 1
            ok = True
            for i in range(npiv, nrow):
                if A[i][u] != 0:
                    ok = False
                    break
            if not ok:
                continue
            nfree = 0
            for t in range(u):
                k = 0
                for i in range(npiv):
                    if pivcol[i] == t:
                        k = 1
                        break
                if k == 0:
                    freecol[nfree] = t
                    nfree += 1
            for t in range(u):
                part[t] = 0
            for i in range(npiv):
                part[pivcol[i]] = A[i][u]
            for k in range(nfree):
                for t in range(u):
                    basis[k][t] = 0
                basis[k][freecol[k]] = 1
                for i in range(npiv):
                    basis[k][pivcol[i]] = neg[A[i][freecol[k]]]
            total = 1
            for k in range(nfree):
                total *= q
                digits[k] = 0
            for j in range(c):
                w[j] = 0
            w[c] = 1
            for combo in range(total):
                for t in range(u):
                    acc = part[t]
                    for k in range(nfree):
                        if digits[k] != 0 and basis[k][t] != 0:
                            acc = add[acc, mul[<uint8_t>digits[k], basis[k][t]]]
                    w[c + 1 + t] = acc
                val = 0
                for k in range(nt):
                    x = mul[conj[w[ti[k]]], w[tj[k]]]
                    if x != 0:
                        val = add[val, mul[tc[k], x]]
                if val == 0:
                    if n_out == cap:
                        cap *= 2
                        out_parent = np.resize(out_parent, cap)
                        out_rows = np.resize(out_rows, (cap, N))
                        op = out_parent
                        orow = out_rows
                    op[n_out] = b
                    for j in range(N):
                        orow[n_out, j] = w[j]
                    n_out += 1
                # odometer
                for k in range(nfree):
                    digits[k] += 1
                    if digits[k] < q:
                        break
                    digits[k] = 0
    return out_parent[:n_out].copy(), out_rows[:n_out].copy()


def closure_run(const int[:, ::1] blocks, const int[:, ::1] pencils, const int[:, ::1] hyp_pencils,
                const int64_t[::1] indptr, const int64_t[::1] inc, uint8_t[::1] closed,
                uint8_t[::1] counters, const int64_t[::1] seeds, const uint8_t[::1] allowed,
                int64_t[::1] trace, bint with_trace, bint restricted):
    """Worklist closure. Updates closed/counters in place; returns (new points, rounds)."""
    cdef Py_ssize_t npts = closed.shape[0]
    cdef Py_ssize_t s = blocks.shape[1], m = pencils.shape[0], t = pencils.shape[1]
    cdef Py_ssize_t rr = hyp_pencils.shape[1]
    queue_arr = np.empty(npts, dtype=np.int64)
    cdef int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, layer_end, rounds = 0
    cdef Py_ssize_t e, jj, tt, h, bidx, j
    cdef int64_t y, y2, bh, idx
    cdef uint8_t c
    cdef Py_ssize_t i
    with nogil:
        for i in range(seeds.shape[0]):
            y = seeds[i]
            if not closed[y]:
                closed[y] = 1
                queue[tail] = y
                tail += 1
                if with_trace:
                    trace[y] = -1
        layer_end = tail
        while head < tail:
            if head == layer_end:
                rounds += 1
                layer_end = tail
            y = queue[head]
            head += 1
            for e in range(indptr[y], indptr[y + 1]):
                bh = inc[e]
                bidx = bh // s
                h = bh - bidx * s
                for jj in range(rr):
                    j = hyp_pencils[h, jj]
                    idx = bidx * m + j
                    c = counters[idx]
                    if c >= 2:
                        continue
                    counters[idx] = c + 1
                    if c + 1 == 2:
                        for tt in range(t):
                            y2 = blocks[bidx, pencils[j, tt]]
                            if closed[y2]:
                                continue
                            if restricted and not allowed[y2]:
                                continue
                            closed[y2] = 1
                            queue[tail] = y2
                            tail += 1
                            if with_trace:
                                trace[y2] = idx
        if tail > 0:
            rounds += 1
    return tail - 0, rounds


def gather_lines(const int64_t[::1] pts, const int64_t[::1] indptr, const int64_t[::1] inc,
                 const int[:, ::1] hyp_pencils, Py_ssize_t s, Py_ssize_t m, int64_t[::1] out):
    """Write the ids of all lines through the given points (with multiplicity) into out."""
    cdef Py_ssize_t rr = hyp_pencils.shape[1]
    cdef Py_ssize_t n = 0, i, e, jj, h, bidx
    cdef int64_t y, bh
    with nogil:
        for i in range(pts.shape[0]):
            y = pts[i]
            for e in range(indptr[y], indptr[y + 1]):
                bh = inc[e]
                bidx = bh // s
                h = bh - bidx * s
                for jj in range(rr):
                    out[n] = bidx * m + hyp_pencils[h, jj]
                    n += 1
    return n
