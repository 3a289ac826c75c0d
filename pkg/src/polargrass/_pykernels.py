"""Pure numpy versions of the compiled kernels (same signatures and results)."""
from __future__ import annotations

import numpy as np


def _solve_affine(add, mul, neg, inv, A, rhs):
    """Solutions of A w = rhs as (particular, basis rows), or None if inconsistent."""
    A = A.copy()
    rhs = rhs.copy()
    nrow, u = A.shape
    piv = []
    r = 0
    for t in range(u):
        if r == nrow:
            break
        nz = np.nonzero(A[r:, t])[0]
        if nz.size == 0:
            continue
        i = r + nz[0]
        A[[r, i]] = A[[i, r]]
        rhs[[r, i]] = rhs[[i, r]]
        f = inv[A[r, t]]
        A[r] = mul[f, A[r]]
        rhs[r] = mul[f, rhs[r]]
        for i in range(nrow):
            if i != r and A[i, t]:
                f = A[i, t]
                A[i] = add[A[i], neg[mul[f, A[r]]]]
                rhs[i] = add[rhs[i], neg[mul[f, rhs[r]]]]
        piv.append(t)
        r += 1
    if np.any(rhs[r:] != 0):
        return None
    free = [t for t in range(u) if t not in piv]
    part = np.zeros(u, dtype=A.dtype)
    for i, t in enumerate(piv):
        part[t] = rhs[i]
    basis = np.zeros((len(free), u), dtype=A.dtype)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, t in enumerate(piv):
            basis[k, t] = neg[A[i, fc]]
    return part, basis


def extend_level(parents, add, mul, neg, inv, conj, gram, ti, tj, tc):
    parents = np.asarray(parents)
    B, r, N = parents.shape
    q = add.shape[0]
    out_parent, out_rows = [], []
    for b in range(B):
        X = parents[b]
        lp = -1
        for i in range(r):
            nz = np.nonzero(X[i])[0]
            lp = max(lp, nz[0])
        colzero = ~X.any(axis=0)
        g = np.zeros((r, N), dtype=np.uint8)
        for i in range(r):
            acc = np.zeros(N, dtype=np.uint8)
            for l in range(N):
                if X[i, l]:
                    acc = add[acc, mul[conj[X[i, l]], gram[l]]]
            g[i] = acc
        for c in range(lp + 1, N):
            if not colzero[c]:
                continue
            u = N - 1 - c
            sol = _solve_affine(add, mul, neg, inv, g[:, c + 1:], neg[g[:, c]])
            if sol is None:
                continue
            part, basis = sol
            nfree = len(basis)
            total = q ** nfree
            digits = np.zeros((total, nfree), dtype=np.int64)
            idx = np.arange(total)
            for k in range(nfree):
                digits[:, k] = (idx // q ** k) % q
            W = np.zeros((total, N), dtype=np.uint8)
            W[:, c] = 1
            tail = np.broadcast_to(part, (total, u)).copy()
            for k in range(nfree):
                tail = add[tail, mul[digits[:, k, None], basis[k][None, :]]]
            W[:, c + 1:] = tail
            val = np.zeros(total, dtype=np.uint8)
            for a, bb, cc in zip(ti, tj, tc):
                val = add[val, mul[cc, mul[conj[W[:, a]], W[:, bb]]]]
            hit = np.nonzero(val == 0)[0]
            out_parent.append(np.full(hit.size, b, dtype=np.int64))
            out_rows.append(W[hit])
    if not out_parent:
        return np.zeros(0, dtype=np.int64), np.zeros((0, N), dtype=np.uint8)
    return np.concatenate(out_parent), np.concatenate(out_rows)


def gather_lines(pts, indptr, inc, hyp_pencils, s, m, out=None):
    pts = np.asarray(pts, dtype=np.int64)
    starts, stops = indptr[pts], indptr[pts + 1]
    lens = stops - starts
    if lens.sum() == 0:
        return np.zeros(0, dtype=np.int64)
    pos = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens) + np.arange(lens.sum())
    bh = inc[pos]
    b, h = bh // s, bh % s
    lines = (b[:, None] * m + hyp_pencils[h]).ravel()
    if out is not None:
        out[: lines.size] = lines
        return lines.size
    return lines


def closure_run(blocks, pencils, hyp_pencils, indptr, inc, closed, counters, seeds,
                allowed, trace, with_trace, restricted, chunk=1 << 20):
    """Round-synchronous closure; reaches the same fixpoint and layer count as the worklist."""
    s = blocks.shape[1]
    m = pencils.shape[0]
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    frontier = seeds[closed[seeds] == 0]
    closed[frontier] = 1
    if with_trace:
        trace[frontier] = -1
    total = frontier.size
    rounds = 0
    while frontier.size:
        rounds += 1
        nxt = []
        step = max(1, chunk // max(1, hyp_pencils.shape[1] * 64))
        hits = []
        for start in range(0, frontier.size, step):
            hits.append(gather_lines(frontier[start:start + step], indptr, inc, hyp_pencils, s, m))
        lines = np.concatenate(hits) if hits else np.zeros(0, dtype=np.int64)
        if lines.size == 0:
            break
        ids, cnt = np.unique(lines, return_counts=True)
        before = counters[ids].astype(np.int64)
        after = np.minimum(before + cnt, 2)
        counters[ids] = after
        fire = ids[(before < 2) & (after >= 2)]
        if fire.size:
            b, j = fire // m, fire % m
            pts = blocks[b[:, None], pencils[j]]
            owner = np.broadcast_to(fire[:, None], pts.shape)
            pts, owner = pts.ravel().astype(np.int64), owner.ravel()
            keep = closed[pts] == 0
            if restricted:
                keep &= allowed[pts] != 0
            pts, owner = pts[keep], owner[keep]
            new, first = np.unique(pts, return_index=True)
            closed[new] = 1
            if with_trace:
                trace[new] = owner[first]
            nxt.append(new)
        frontier = np.concatenate(nxt) if nxt else np.zeros(0, dtype=np.int64)
        total += frontier.size
    return total, rounds
