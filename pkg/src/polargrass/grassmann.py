"""Grassmannians of polar spaces, span closure and rank certificates.

Lines are stored compressed. For 1 <= k < n every line {Y : X < Y < Z} lives
inside a block Z in S_{k+1}: the points of a block are its k-subspaces
(local hyperplanes of Z) and its lines are indexed by local (k-1)-subspaces
("pencils"). For k = n a block is an (n-1)-subspace with one line, the
generators through it. A line is the pair (block, pencil), with ID
block * m + pencil.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from math import comb

import numpy as np

from . import kernels
from .linalg import mat_mul, plucker_batch, rref_matrices, subspace_keys
from .polar import BudgetExceeded, PolarModel

__all__ = [
    "Geometry",
    "ClosureResult",
    "ClosureState",
    "RankCertificate",
    "IncrementalRank",
    "build_grassmannian",
    "span_closure",
    "naive_closure",
    "is_generating",
    "greedy_minimize",
    "plucker_rank",
    "generating_subsets",
    "generating_triples",
]


@dataclass
class Geometry:
    model: PolarModel
    k: int
    blocks: np.ndarray          # (B, s) int32 global point IDs
    pencils: np.ndarray         # (m, t) int32 local positions
    hyp_pencils: np.ndarray     # (s, r) int32 pencils through each local position
    indptr: np.ndarray          # (P + 1,) int64
    inc: np.ndarray             # flat block positions b * s + h, grouped by point
    meta: dict = dc_field(default_factory=dict)

    @property
    def npoints(self) -> int:
        return len(self.indptr) - 1

    @property
    def nlines(self) -> int:
        return self.blocks.shape[0] * self.pencils.shape[0]

    @property
    def line_size(self) -> int:
        return self.pencils.shape[1]

    @property
    def point_rows(self) -> np.ndarray:
        return self.model.level(self.k).rows

    @property
    def is_dual(self) -> bool:
        return self.k == self.model.n

    def line_points(self, line_ids) -> np.ndarray:
        ids = np.atleast_1d(np.asarray(line_ids, dtype=np.int64))
        m = self.pencils.shape[0]
        b, j = ids // m, ids % m
        return self.blocks[b[:, None], self.pencils[j]]

    def all_lines(self, chunk: int = 1 << 20):
        """Yield (line ids, points) in chunks."""
        for start in range(0, self.nlines, chunk):
            ids = np.arange(start, min(self.nlines, start + chunk))
            yield ids, self.line_points(ids)

    def lines_through(self, pid: int) -> np.ndarray:
        return kernels.pure.gather_lines(np.array([pid]), self.indptr, self.inc, self.hyp_pencils,
                                         self.blocks.shape[1], self.pencils.shape[0])

    def ids_of(self, mats) -> np.ndarray:
        return self.model.lookup(self.k, mats)

    def invariants(self) -> dict:
        return {"k": self.k, "points": self.npoints, "lines": self.nlines,
                "line_size": self.line_size}


def _local_tables(field, k: int):
    """Local hyperplanes and (k-1)-subspaces of V(k+1) and their incidence."""
    hyps = rref_matrices(field, k, k + 1)
    subs = rref_matrices(field, k - 1, k + 1)
    s, m = len(hyps), len(subs)
    inc = np.zeros((m, s), dtype=bool)
    hpiv = (hyps != 0).argmax(axis=2)
    for j in range(m):
        X = subs[j]
        ok = np.ones(s, dtype=bool)
        for row in X:
            coeffs = row[hpiv]                                   # (s, k)
            comb_ = mat_mul(field, coeffs[:, None, :], hyps)[:, 0, :]
            ok &= np.all(comb_ == row[None, :], axis=1)
        inc[j] = ok
    pencils = np.array([np.nonzero(inc[j])[0] for j in range(m)], dtype=np.int32)
    hyp_pencils = np.array([np.nonzero(inc[:, h])[0] for h in range(s)], dtype=np.int32)
    return hyps, pencils, hyp_pencils


def _reverse_index(blocks: np.ndarray, npoints: int):
    flat = blocks.ravel()
    order = np.argsort(flat, kind="stable").astype(np.int64)
    counts = np.bincount(flat, minlength=npoints)
    indptr = np.zeros(npoints + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, order


def _sub_ids(model: PolarModel, k: int, outer: np.ndarray, local: np.ndarray, chunk: int):
    """IDs in level k of local @ outer for every outer subspace; (len(outer), len(local))."""
    F = model.field
    lev = model.level(k)
    out = np.empty((len(outer), len(local)), dtype=np.int32)
    lpiv = (local != 0).argmax(axis=2)                        # (s, k)
    for start in range(0, len(outer), chunk):
        Z = outer[start:start + chunk]
        prodm = mat_mul(F, local[None], Z[:, None])           # (c, s, k, N), already RREF
        zpiv = (Z != 0).argmax(axis=2)                        # (c, k+1)
        piv = np.take_along_axis(zpiv[:, None, :].repeat(len(local), axis=1),
                                 np.broadcast_to(lpiv[None], (len(Z),) + lpiv.shape), axis=2)
        c, s = prodm.shape[:2]
        keys = subspace_keys(F, prodm.reshape(c * s, k, -1), piv.reshape(c * s, k))
        idx = np.searchsorted(lev.keys, keys)
        idx = np.minimum(idx, len(lev.keys) - 1)
        if not np.all(lev.keys[idx] == keys):
            raise AssertionError("subspace of a singular space missing from its level")
        out[start:start + chunk] = idx.reshape(c, s)
    return out


def build_grassmannian(model: PolarModel, k: int, chunk: int | None = None) -> Geometry:
    n = model.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    est = model.expected_count(k)
    if est > model.budget.max_grassmann:
        raise BudgetExceeded(f"points of the {k}-Grassmannian", est, model.budget.max_grassmann)
    F = model.field
    npts = len(model.level(k))
    if k < n:
        hyps, pencils, hyp_pencils = _local_tables(F, k)
        outer = model.level(k + 1).rows
        chunk = chunk or max(1, 2_000_000 // (len(hyps) * k * model.N))
        blocks = _sub_ids(model, k, outer, hyps, chunk)
        kind = "pencil"
    else:
        if n < 2:
            raise ValueError("dual polar spaces need rank >= 2")
        gens = model.level(n).rows
        hyps = rref_matrices(F, n - 1, n)
        chunk = chunk or max(1, 2_000_000 // (len(hyps) * n * model.N))
        faces = _sub_ids(model, n - 1, gens, hyps, chunk)       # (G, s)
        owner = np.repeat(np.arange(len(gens), dtype=np.int32), faces.shape[1])
        flat = faces.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=len(model.level(n - 1)))
        if counts.min() != counts.max():
            raise AssertionError("generators per (n-1)-subspace not constant")
        t = int(counts[0])
        blocks = owner[order].reshape(-1, t)
        pencils = np.arange(t, dtype=np.int32)[None, :]
        hyp_pencils = np.zeros((t, 1), dtype=np.int32)
        kind = "star"
        if t == 2:
            warnings.warn("all lines of this dual polar space are thin; closure is trivial",
                          stacklevel=2)
    blocks = np.ascontiguousarray(blocks, dtype=np.int32)
    indptr, inc = _reverse_index(blocks, npts)
    return Geometry(model, k, blocks, np.ascontiguousarray(pencils, dtype=np.int32),
                    np.ascontiguousarray(hyp_pencils, dtype=np.int32), indptr, inc,
                    meta={"line_kind": kind, "descriptor": model.descriptor})


# -- closure -----------------------------------------------------------------

@dataclass
class ClosureResult:
    closed: np.ndarray          # bool mask
    generated_all: bool
    seed_size: int
    new_count: int
    rounds: int
    trace: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.closed.sum())

    def ids(self) -> np.ndarray:
        return np.nonzero(self.closed)[0]

    def to_json(self) -> dict:
        return {"generated_all": self.generated_all, "seed_size": self.seed_size,
                "closure_size": self.size, "new": self.new_count, "rounds": self.rounds}


def _seed_array(seed) -> np.ndarray:
    a = np.asarray(seed)
    if a.dtype == bool:
        a = np.nonzero(a)[0]
    return np.ascontiguousarray(np.unique(a.astype(np.int64)))


class ClosureState:
    """Incremental closure: seeds can be added one batch at a time."""

    def __init__(self, geom: Geometry, allowed=None, backend: str | None = None,
                 with_trace: bool = False):
        self.geom = geom
        self.kern = kernels.get(backend)
        self.closed = np.zeros(geom.npoints, dtype=np.uint8)
        self.counters = np.zeros(geom.nlines, dtype=np.uint8)
        self.restricted = allowed is not None
        self.allowed = (np.ascontiguousarray(allowed, dtype=np.uint8) if allowed is not None
                        else np.ones(1, dtype=np.uint8))
        self.with_trace = with_trace
        self.trace = np.full(geom.npoints if with_trace else 1, -2, dtype=np.int64)
        self.rounds = 0

    def add(self, seed) -> int:
        seeds = _seed_array(seed)
        if self.restricted and seeds.size and not np.all(self.allowed[seeds]):
            raise ValueError("seed outside the allowed point set")
        before = int(self.closed.sum())
        g = self.geom
        _, rounds = self.kern.closure_run(g.blocks, g.pencils, g.hyp_pencils, g.indptr, g.inc,
                                          self.closed, self.counters, seeds, self.allowed,
                                          self.trace, self.with_trace, self.restricted)
        self.rounds = max(self.rounds, int(rounds))
        return int(self.closed.sum()) - before

    @property
    def size(self) -> int:
        return int(self.closed.sum())

    def generated_all(self) -> bool:
        target = self.geom.npoints if not self.restricted else int(self.allowed.sum())
        return self.size == target

    def copy(self) -> "ClosureState":
        other = object.__new__(ClosureState)
        other.__dict__.update(self.__dict__)
        other.closed = self.closed.copy()
        other.counters = self.counters.copy()
        other.trace = self.trace.copy()
        return other


def span_closure(geom: Geometry, seed, trace: bool = False, allowed=None,
                 backend: str | None = None, workers: int = 1) -> ClosureResult:
    seeds = _seed_array(seed)
    if workers > 1:
        closed, rounds = _parallel_closure(geom, seeds, workers, allowed)
        tr = None
    else:
        st = ClosureState(geom, allowed=allowed, backend=backend, with_trace=trace)
        st.add(seeds)
        closed, rounds = st.closed.astype(bool), st.rounds
        tr = st.trace if trace else None
    target = geom.npoints if allowed is None else int(np.count_nonzero(allowed))
    size = int(closed.sum())
    return ClosureResult(closed, size == target, int(seeds.size), size - int(seeds.size),
                         int(rounds), tr)


def _parallel_closure(geom: Geometry, seeds: np.ndarray, workers: int, allowed=None,
                      batch: int = 1 << 22):
    """Round-synchronous closure with the frontier gathered by a thread pool."""
    kern = kernels.get()
    s, m = geom.blocks.shape[1], geom.pencils.shape[0]
    r = geom.hyp_pencils.shape[1]
    closed = np.zeros(geom.npoints, dtype=bool)
    counters = np.zeros(geom.nlines, dtype=np.uint8)
    frontier = seeds
    closed[frontier] = True
    rounds = 0
    deg = np.diff(geom.indptr)

    def gather(pts):
        out = np.empty(int(deg[pts].sum()) * r, dtype=np.int64)
        n = kern.gather_lines(pts, geom.indptr, geom.inc, geom.hyp_pencils, s, m, out)
        return out[:n]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        while frontier.size:
            rounds += 1
            per = max(1, min(batch // max(1, int(deg.max()) * r), -(-frontier.size // workers)))
            parts = [frontier[i:i + per] for i in range(0, frontier.size, per)]
            fire = []
            for lines in pool.map(gather, parts):
                ids, cnt = np.unique(lines, return_counts=True)
                before = counters[ids]
                after = np.minimum(before.astype(np.int64) + cnt, 2).astype(np.uint8)
                counters[ids] = after
                fire.append(ids[(before < 2) & (after >= 2)])
            fire = np.concatenate(fire) if fire else np.zeros(0, np.int64)
            pts = geom.line_points(fire).ravel() if fire.size else np.zeros(0, np.int64)
            pts = np.unique(pts)
            pts = pts[~closed[pts]]
            if allowed is not None:
                pts = pts[np.asarray(allowed, dtype=bool)[pts]]
            closed[pts] = True
            frontier = pts.astype(np.int64)
    return closed, rounds


def naive_closure(geom: Geometry, seed) -> np.ndarray:
    """Reference fixpoint: sweep every line until nothing changes."""
    closed = np.zeros(geom.npoints, dtype=bool)
    closed[_seed_array(seed)] = True
    lines = geom.line_points(np.arange(geom.nlines))
    while True:
        cnt = closed[lines].sum(axis=1)
        grow = lines[cnt >= 2].ravel()
        if closed[grow].all():
            return closed
        closed[grow] = True


def is_generating(geom: Geometry, seed, allowed=None) -> bool:
    return span_closure(geom, seed, allowed=allowed).generated_all


def greedy_minimize(geom: Geometry, seed, allowed=None) -> np.ndarray:
    """Drop elements in descending ID order while the rest still generates."""
    cur = [int(x) for x in _seed_array(seed)]
    if not is_generating(geom, cur, allowed):
        raise ValueError("seed does not generate")
    for x in sorted(cur, reverse=True):
        trial = [y for y in cur if y != x]
        if is_generating(geom, trial, allowed):
            cur = trial
    return np.array(sorted(cur), dtype=np.int64)


def generating_subsets(geom: Geometry, seed, size: int, limit: int = 20) -> list:
    """All generating subsets of the given size (exhaustive; seeds of size <= limit)."""
    from itertools import combinations
    seed = [int(x) for x in _seed_array(seed)]
    if len(seed) > limit:
        raise ValueError(f"exhaustive search is limited to seeds of size <= {limit}")
    return [c for c in combinations(seed, size) if is_generating(geom, list(c))]


def generating_triples(geom: Geometry, limit: int | None = None) -> dict:
    """Exhaustive search for 3-element generating sets of a partial linear space.

    A triple with no collinear pair is closed already. A triple {a, b, r}
    with a, b on a line L has the span of L + r; if r sees no point of L that
    set is closed, otherwise it has the span of L and the line M through r
    meeting L. So some triple generates iff some pair of meeting lines does,
    and only those pairs are tried.
    """
    pts = geom.line_points(np.arange(geom.nlines))
    st0 = ClosureState(geom)
    found, tried = [], 0
    for L in range(geom.nlines):
        for x in pts[L]:
            for M in geom.lines_through(int(x)):
                if M <= L:
                    continue
                tried += 1
                st = st0.copy()
                st.add(np.concatenate([pts[L], pts[M]]))
                if st.generated_all():
                    a = [int(y) for y in pts[L] if y != x][0]
                    r = [int(y) for y in pts[M] if y != x][0]
                    found.append((a, int(x), r))
                    if limit is not None and len(found) >= limit:
                        return {"pairs_tried": tried, "generating": found}
    return {"pairs_tried": tried, "generating": found}


# -- rank certificates ------------------------------------------------------

class IncrementalRank:
    """Row space over a field, grown one batch at a time."""

    def __init__(self, field, width: int):
        self.F = field
        self.width = width
        self.rows = np.zeros((0, width), dtype=field.dtype)
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, X: np.ndarray) -> np.ndarray:
        F = self.F
        X = np.array(X, dtype=F.dtype, copy=True)
        for row, c in zip(self.rows, self.pivots):
            f = X[:, c].copy()
            nz = np.nonzero(f)[0]
            if nz.size:
                X[nz] = F.sub[X[nz], F.mul[f[nz, None], row[None, :]]]
        return X

    def add(self, X: np.ndarray, stop_at: int | None = None) -> np.ndarray:
        """Insert rows; returns a bool mask of the rows that raised the rank."""
        F = self.F
        X = self.reduce(np.atleast_2d(X))
        raised = np.zeros(len(X), dtype=bool)
        for i in range(len(X)):
            if stop_at is not None and self.rank >= stop_at:
                break
            v = X[i]
            nz = np.nonzero(v)[0]
            if nz.size == 0:
                continue
            c = int(nz[0])
            v = F.mul[F.inv_table[v[c]], v]
            # keep stored rows reduced at the new pivot
            f = self.rows[:, c].copy() if len(self.rows) else np.zeros(0, dtype=F.dtype)
            hit = np.nonzero(f)[0]
            if hit.size:
                self.rows[hit] = F.sub[self.rows[hit], F.mul[f[hit, None], v[None, :]]]
            self.rows = np.vstack([self.rows, v[None, :]])
            self.pivots.append(c)
            raised[i] = True
            rest = X[i + 1:]
            f = rest[:, c].copy()
            hit = np.nonzero(f)[0]
            if hit.size:
                rest[hit] = F.sub[rest[hit], F.mul[f[hit, None], v[None, :]]]
        return raised

    def independent(self, x: np.ndarray) -> bool:
        return bool(self.reduce(np.atleast_2d(x)).any())


@dataclass
class RankCertificate:
    upper: int | None
    upper_set: list | None
    upper_generates: bool | None
    lower: int | None
    lower_method: str | None
    extra: dict = dc_field(default_factory=dict)

    @property
    def pinned(self) -> bool:
        return (self.upper is not None and self.lower is not None and self.upper_generates
                and self.upper == self.lower)

    def consistent(self) -> bool:
        return self.upper is None or self.lower is None or self.upper >= self.lower

    def to_json(self) -> dict:
        out = {"upper": self.upper, "upper_generates": self.upper_generates,
               "lower": self.lower, "lower_method": self.lower_method,
               "verdict": (f"gr = {self.upper}" if self.pinned else
                           f"{self.lower} <= gr <= {self.upper}")}
        out.update(self.extra)
        return out


def plucker_rank(geom: Geometry, chunk: int = 50_000, sample_lines: int = 200,
                 seed: int = 0) -> dict:
    """Rank of the Plücker images of all points; verifies sampled lines map to lines."""
    if geom.is_dual:
        raise ValueError("the Plücker map does not embed the dual polar space")
    F = geom.model.field
    N, k = geom.model.N, geom.k
    width = comb(N, k)
    rows = geom.point_rows
    inc = IncrementalRank(F, width)
    for start in range(0, len(rows), chunk):
        X = plucker_batch(F, rows[start:start + chunk])
        X = inc.reduce(X)
        X = X[X.any(axis=1)]
        if len(X):
            inc.add(X, stop_at=width)
        if inc.rank >= width:
            break
    rng = np.random.default_rng(seed)
    ids = rng.choice(geom.nlines, size=min(sample_lines, geom.nlines), replace=False)
    embeds = True
    for pts in geom.line_points(ids):
        P = plucker_batch(F, rows[pts])
        r = IncrementalRank(F, width)
        r.add(P)
        if r.rank != 2:
            embeds = False
            break
    return {"rank": inc.rank, "width": width, "lines_embed": embeds,
            "sampled_lines": int(len(ids))}
