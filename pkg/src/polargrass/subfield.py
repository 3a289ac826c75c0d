"""Subfield rationality on 2-Grassmannians of orthogonal polar spaces.

A subspace is F0-rational when its RREF basis has entries in F0, so the
rational elements of a geometry over F are read off the stored rows. The
geometry of the polar space over F0 then sits inside the one over F as the
set of rational points, and its lines are exactly the lines of the big
geometry carrying two rational points; closure restricted to the rational
points therefore computes spans in the small geometry.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grassmann import Geometry, span_closure
from .linalg import canonicalize, mat_mul, rref_batch, rref_matrices

__all__ = [
    "SubfieldContext",
    "Adjoined",
    "ObstructionError",
    "OmegaReport",
    "rational_lines",
    "cor54_adjoin",
    "gset_predicate",
    "omega_obstruction",
    "points_on",
]


class ObstructionError(AssertionError):
    """A claim of the non-generation argument failed on a concrete model."""


def points_on(model, mats: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    """Point IDs of every projective point in each RREF matrix of a stack (M, r, N)."""
    F = model.field
    mats = np.asarray(mats, dtype=F.dtype)
    M, r, N = mats.shape
    coeff = rref_matrices(F, 1, r)[:, 0, :]                   # normalized, leading 1
    out = np.empty((M, len(coeff)), dtype=np.int64)
    step = max(1, chunk // len(coeff))
    for s in range(0, M, step):
        V = mat_mul(F, coeff[None], mats[s:s + step])         # (c, P, N), normalized
        ids = model.lookup(1, V.reshape(-1, 1, N))
        out[s:s + step] = ids.reshape(len(V), len(coeff))
    if np.any(out < 0):
        raise ValueError("matrix spans a non-singular point")
    return out


class SubfieldContext:
    """Rational points and rational geometry points of a geometry over F for F0 of degree sub_degree."""

    def __init__(self, geom: Geometry, sub_degree: int = 1):
        model = geom.model
        F = model.field
        if sub_degree >= F.e or F.e % sub_degree:
            raise ValueError(f"degree {sub_degree} does not give a proper subfield of {F}")
        self.geom = geom
        self.model = model
        self.field = F
        self.sub_degree = sub_degree
        self.q0 = F.p ** sub_degree
        self.sub_mask = F.subfield_mask(sub_degree)
        self.rational_points = self.sub_mask[model.points].all(axis=1)
        self.rational = self.sub_mask[geom.point_rows].all(axis=(1, 2))
        # proper intermediate fields K with F0 <= K < F
        self.between = [t for t in F.subfield_degrees() if t % sub_degree == 0 and t < F.e]
        self._hull = None

    @property
    def k(self) -> int:
        return self.geom.k

    def rational_ids(self) -> np.ndarray:
        return np.nonzero(self.rational)[0]

    def is_rational_rows(self, mats) -> np.ndarray:
        mats = np.asarray(mats)
        return self.sub_mask[mats].all(axis=tuple(range(1, mats.ndim)))

    def fully_irrational(self, vecs) -> np.ndarray:
        """Normalized vectors that are not K-rational for any intermediate K containing F0."""
        vecs = np.atleast_2d(np.asarray(vecs))
        ok = np.ones(len(vecs), dtype=bool)
        for t in self.between:
            ok &= ~self.field.subfield_mask(t)[vecs].all(axis=1)
        return ok

    def extend(self, rows_f0) -> int:
        """The element <X>_F of a rational subspace given by F0 rows."""
        S = canonicalize(self.field, rows_f0, self.model.N)
        if not self.sub_mask[S.rows].all():
            raise ValueError("rows are not F0-rational")
        return int(self.model.lookup(S.rank, S.rows[None])[0])

    def hull_lines(self) -> np.ndarray:
        """For every point, the unique rational line through it when the point is
        fully irrational and its Galois conjugates span a singular line; else -1."""
        if self._hull is None:
            F, model = self.field, self.model
            P = model.points
            r = F.e // self.sub_degree
            frob = F.pow_table[:, self.q0]
            conj = [P]
            for _ in range(r - 1):
                conj.append(frob[conj[-1]])
            R, ranks = rref_batch(F, np.stack(conj, axis=1))
            out = np.full(len(P), -1, dtype=np.int64)
            cand = np.nonzero((ranks == 2) & self.fully_irrational(P))[0]
            if cand.size:
                ids = model.lookup(2, R[cand, :2])
                out[cand] = ids
            self._hull = out
        return self._hull


def rational_lines(geom: Geometry, ctx: SubfieldContext) -> np.ndarray:
    """IDs of the F0-rational points of a geometry."""
    if ctx.geom is not geom:
        raise ValueError("context belongs to another geometry")
    return ctx.rational_ids()


def _opposite(form, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Mask for stacks of line pairs (M, 2, N) with A^perp cap B trivial."""
    F = form.field
    G = form.functional(A)                                    # (M, 2, N)
    m = mat_mul(F, G, np.swapaxes(B, -1, -2))                 # (M, 2, 2)
    det = F.sub[F.mul[m[..., 0, 0], m[..., 1, 1]], F.mul[m[..., 0, 1], m[..., 1, 0]]]
    return det != 0


@dataclass
class Adjoined:
    p: np.ndarray
    q: np.ndarray
    rows: np.ndarray
    id: int
    p_id: int
    skipped: list = dc_field(default_factory=list)

    def to_json(self, F) -> dict:
        fmt = lambda v: [F.element_str(x) for x in v]  # noqa: E731
        return {"p": fmt(self.p), "q": fmt(self.q), "t": [fmt(r) for r in self.rows],
                "t_id": self.id, "skipped_rational": len(self.skipped)}


def _line_rows(ctx: SubfieldContext, line) -> np.ndarray:
    a = np.asarray(line)
    if a.ndim == 0:
        return ctx.model.level(2).rows[int(a)]
    return canonicalize(ctx.field, a, ctx.model.N).rows


def cor54_adjoin(ctx: SubfieldContext, l0, l1) -> Adjoined:
    """The line t = <p, p^perp cap l1> for the least suitable point p of l0.

    l0 and l1 are opposite rational lines (IDs or rows). p is taken in ID
    order among the points of l0 such that neither p nor q = p^perp cap l1 is
    rational over any intermediate field containing F0.
    """
    model, F, form = ctx.model, ctx.field, ctx.model.form
    if ctx.k != 2:
        raise ValueError("the context must be on the 2-Grassmannian")
    if model.d > 1:
        raise ValueError(f"defect {model.d} > 1 is outside the hypothesis")
    A, B = _line_rows(ctx, l0), _line_rows(ctx, l1)
    for name, L in (("l0", A), ("l1", B)):
        if len(L) != 2 or not model.is_totally_singular(L):
            raise ValueError(f"{name} is not a singular line")
        if not ctx.sub_mask[L].all():
            raise ValueError(f"{name} is not F0-rational")
    if not _opposite(form, A[None], B[None])[0]:
        raise ValueError("l0 and l1 are not opposite")
    pids = np.sort(points_on(model, A[None])[0])
    skipped = []
    for pid in pids:
        p = model.points[pid]
        if not ctx.fully_irrational(p)[0]:
            skipped.append(int(pid))
            continue
        c = form.polar(p, B)
        q = canonicalize(F, F.sub[F.mul[c[1], B[0]], F.mul[c[0], B[1]]][None]).rows[0]
        if not ctx.fully_irrational(q)[0]:
            skipped.append(int(pid))
            continue
        T = canonicalize(F, np.array([p, q]), model.N)
        if not model.is_totally_singular(T.rows):
            raise AssertionError("adjoined line is not singular")
        tid = int(model.lookup(2, T.rows[None])[0])
        return Adjoined(p, q, T.rows, tid, int(pid), skipped)
    raise ValueError("no point of l0 avoids every intermediate field")


def _witness_scan(ctx: SubfieldContext, ids: np.ndarray, chunk: int = 1 << 14):
    """First line m (in ID order) meeting two opposite rational lines in fully irrational points."""
    model, form = ctx.model, ctx.model.form
    hull = ctx.hull_lines()
    lines = model.level(2).rows
    for s in range(0, len(ids), chunk):
        part = ids[s:s + chunk]
        pts = points_on(model, lines[part])                   # (c, q+1)
        hl = hull[pts]
        m = pts.shape[1]
        for i in range(m):
            for j in range(i + 1, m):
                a, b = hl[:, i], hl[:, j]
                cand = np.nonzero((a >= 0) & (b >= 0) & (a != b))[0]
                if cand.size == 0:
                    continue
                opp = _opposite(form, lines[a[cand]], lines[b[cand]])
                if opp.any():
                    c = cand[np.argmax(opp)]
                    return {"m": int(part[c]), "l": int(a[c]), "l_prime": int(b[c]),
                            "points": [int(pts[c, i]), int(pts[c, j])]}
    return None


def gset_predicate(ctx: SubfieldContext, G, witness: bool = False):
    """Whether a set of rational lines meets the F0-generation criterion.

    True iff G generates the geometry over F0 and some line m in the span of
    G over F meets the extensions of two opposite rational lines in points
    that are rational over no intermediate field.
    """
    geom = ctx.geom
    if ctx.k != 2:
        raise ValueError("the context must be on the 2-Grassmannian")
    G = np.unique(np.asarray(G, dtype=np.int64))
    if G.size and not ctx.rational[G].all():
        raise ValueError("G contains non-rational lines")
    info = {"generates_over_F0": False, "witness": None}
    res0 = span_closure(geom, G, allowed=ctx.rational)
    info["generates_over_F0"] = res0.generated_all
    if res0.generated_all:
        full = span_closure(geom, G)
        info["span_size"] = full.size
        info["witness"] = _witness_scan(ctx, full.ids())
    ok = bool(info["generates_over_F0"] and info["witness"] is not None)
    return (ok, info) if witness else ok


@dataclass
class OmegaReport:
    q: int
    q0: int
    omega1: np.ndarray
    omega2: np.ndarray
    omega: np.ndarray
    total: int
    is_subspace: bool
    lines_scanned: int
    equals_closure: bool
    proper: bool
    witness_id: int
    witness_outside: bool
    witness_planes: list
    planes_claim: bool

    @property
    def ok(self) -> bool:
        return (self.is_subspace and self.equals_closure and self.proper
                and self.witness_outside and self.planes_claim
                and len(self.witness_planes) > 0 and all(c == 1 for _, c in self.witness_planes))

    def to_json(self) -> dict:
        return {"q": self.q, "q0": self.q0, "omega1": int(self.omega1.sum()),
                "omega2": int(self.omega2.sum()), "omega": int(self.omega.sum()),
                "total": self.total, "is_subspace": self.is_subspace,
                "lines_scanned": self.lines_scanned, "equals_closure": self.equals_closure,
                "proper": self.proper, "witness_id": self.witness_id,
                "witness_outside": self.witness_outside,
                "witness_planes": [{"plane": p, "rational_points": c} for p, c in self.witness_planes],
                "planes_with_two_rational_points_are_rational": self.planes_claim,
                "ok": self.ok}


def omega_obstruction(ctx: SubfieldContext, strict: bool = True) -> OmegaReport:
    """Check the obstruction to F0-generation of the line Grassmannian of Q+(5, F).

    Omega1 is the set of lines meeting the rational points, Omega2 the set of
    lines inside rational planes. The union is checked to be a proper
    subspace equal to the span of the rational lines, with the line
    <(1,0,e,0,0,0), (0,e,0,-1,0,0)> outside it.
    """
    model, F, geom = ctx.model, ctx.field, ctx.geom
    if ctx.k != 2 or model.n != 3 or model.d != 0 or model.hermitian:
        raise ValueError("the obstruction lives on the lines of a hyperbolic quadric of rank 3")
    lines = model.level(2).rows
    planes = model.level(3).rows
    omega1 = ctx.rational_points[points_on(model, lines)].any(axis=1)
    rat_planes = ctx.sub_mask[planes].all(axis=(1, 2))
    omega2 = np.zeros(len(lines), dtype=bool)
    omega2[geom.blocks[rat_planes].ravel()] = True
    omega = omega1 | omega2

    is_sub, scanned = True, 0
    for _, pts in geom.all_lines():
        scanned += len(pts)
        cnt = omega[pts].sum(axis=1)
        if np.any((cnt >= 2) & ~omega[pts].all(axis=1)):
            is_sub = False
    closure = span_closure(geom, ctx.rational_ids()).closed
    equals = bool(np.array_equal(closure, omega))

    rat_in_plane = ctx.rational_points[points_on(model, planes)].sum(axis=1)
    planes_claim = bool(np.all(rat_planes[rat_in_plane >= 2]))

    e = F.eps
    if ctx.sub_mask[e]:
        raise ValueError("the field generator lies in F0")
    W = np.zeros((2, model.N), dtype=F.dtype)
    W[0, 0], W[0, 2] = 1, e
    W[1, 1], W[1, 3] = e, F.neg[1]
    Wc = canonicalize(F, W, model.N).rows
    wid = int(model.lookup(2, Wc[None])[0])
    if wid < 0:
        raise ObstructionError("the witness line is not singular")
    from .gensets import contains_rows
    through = np.nonzero(contains_rows(F, planes, Wc))[0]
    wplanes = [(int(b), int(rat_in_plane[b])) for b in through]

    rep = OmegaReport(F.q, ctx.q0, omega1, omega2, omega, len(lines), is_sub, scanned, equals,
                      bool(not omega.all()), wid, bool(not omega[wid]), wplanes, planes_claim)
    if strict and not rep.ok:
        raise ObstructionError(f"obstruction check failed: {rep.to_json()}")
    return rep
