"""Generating sets for polar Grassmannians.

The recursive builders work in local coordinates. A sub-problem (a
hyperplane section, the quotient by a point) gets its own form through a
Chart, is solved there and lifted back one level, so every private builder
returns a stack of RREF matrices in the coordinates of the form it was given.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import comb

import numpy as np

from .forms import FormSpec, _trace_solution, standard_form, witt_decompose
from .grassmann import (
    ClosureState,
    Geometry,
    IncrementalRank,
    build_grassmannian,
    greedy_minimize,
    is_generating,
    span_closure,
)
from .linalg import canonicalize, mat_mul, plucker_batch
from .polar import Chart, Hyperplane, PolarModel, build_model, frame

__all__ = [
    "GenSet",
    "HypothesisError",
    "apartment",
    "genset_k2",
    "genset_k",
    "genset_singular",
    "hermitian_genset",
    "orth_q2_genset",
    "polar_genset",
    "random_triple",
    "contains_rows",
    "q2_base_lines",
]


class HypothesisError(ValueError):
    """A construction was called with data violating one of its hypotheses."""

    def __init__(self, condition: str, msg: str):
        self.condition = condition
        super().__init__(f"{condition}: {msg}")


@dataclass
class GenSet:
    model: PolarModel
    k: int
    rows: np.ndarray                 # (M, k, N) RREF
    tags: list
    ids: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.ids)

    def tag_counts(self) -> dict:
        out: dict = {}
        for t in self.tags:
            out[t] = out.get(t, 0) + 1
        return out

    def verify(self, geom: Geometry | None = None, backend=None):
        geom = geom if geom is not None else build_grassmannian(self.model, self.k)
        return span_closure(geom, self.ids, backend=backend)

    def rational_mask(self, sub_degree: int = 1) -> np.ndarray:
        sub = self.model.field.subfield_mask(sub_degree)
        return sub[self.rows].all(axis=(1, 2))

    def to_json(self) -> dict:
        F = self.model.field
        return {"k": self.k, "size": self.size, "tags": self.tag_counts(),
                "elements": [[[F.element_str(x) for x in r] for r in m] for m in self.rows],
                **self.meta}


def _make(model: PolarModel, k: int, parts, meta=None) -> GenSet:
    """Merge (rows, tag) parts into a GenSet; the first tag of a repeated element wins."""
    rows, tags = [], []
    for R, tag in parts:
        R = np.asarray(R, dtype=model.field.dtype).reshape(-1, k, model.N)
        rows.append(R)
        tags.extend(tag if isinstance(tag, list) else [tag] * len(R))
    R = np.concatenate(rows) if rows else np.zeros((0, k, model.N), dtype=model.field.dtype)
    ids = model.lookup(k, R) if len(R) else np.zeros(0, dtype=np.int64)
    if np.any(ids < 0):
        raise AssertionError("constructed element is not a singular subspace")
    _, first = np.unique(ids, return_index=True)
    first = np.sort(first)
    return GenSet(model, k, R[first], [tags[i] for i in first], ids[first].astype(np.int64),
                  meta or {})


# -- small helpers -------------------------------------------------------------

def contains_rows(F, mats: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Mask of RREF matrices in a stack whose row space contains every row of Z."""
    mats = np.asarray(mats)
    ok = np.ones(len(mats), dtype=bool)
    if len(mats) == 0 or len(Z) == 0:
        return ok
    piv = (mats != 0).argmax(axis=2)
    for z in np.atleast_2d(Z):
        coeff = z[piv]
        comb_ = mat_mul(F, coeff[:, None, :], mats)[:, 0, :]
        ok &= np.all(comb_ == z[None, :], axis=1)
    return ok


def _in_kernel(F, mats: np.ndarray, g: np.ndarray) -> np.ndarray:
    return ~mat_mul(F, mats, g[:, None])[..., 0].any(axis=1)


def _rank2(F, A: np.ndarray) -> np.ndarray:
    """Mask of stacks A (M, r, 2) of rank 2."""
    M, r, _ = A.shape
    ok = np.zeros(M, dtype=bool)
    for i in range(r):
        for j in range(i + 1, r):
            det = F.sub[F.mul[A[:, i, 0], A[:, j, 1]], F.mul[A[:, j, 0], A[:, i, 1]]]
            ok |= det != 0
    return ok


def _point(F, v) -> np.ndarray:
    return canonicalize(F, np.atleast_2d(v)).rows[0]


def _functional(model: PolarModel, H) -> np.ndarray:
    if isinstance(H, Hyperplane):
        return np.asarray(H.functional, dtype=model.field.dtype)
    return np.asarray(H, dtype=model.field.dtype)


def _lift(chart: Chart, mats: np.ndarray) -> np.ndarray:
    mats = np.asarray(mats)
    if mats.shape[1] == 0 and len(chart.prefix) == 0:
        return np.zeros((len(mats), 0, chart.ambient.N), dtype=chart.field.dtype)
    return chart.lift(mats)


# -- the recursive builder ------------------------------------------------------

class _Builder:
    def __init__(self, budget=None, backend=None, rational: int | None = None, trim: bool = True,
                 seed: int = 0, tries: int = 200):
        self.budget = budget
        self.backend = backend
        self.rational = rational
        self.trim = trim
        self.seed = seed
        self.tries = tries
        self.notes: list = []

    def model(self, form: FormSpec) -> PolarModel:
        return PolarModel(form, budget=self.budget, backend=self.backend)

    def _deg(self, form: FormSpec):
        if self.rational and form.has_subfield_coefficients(self.rational):
            return self.rational
        return None

    def witt(self, form: FormSpec):
        return witt_decompose(form, subfield_degree=self._deg(form))

    # k = 1: a frame plus one point per anisotropic direction
    def k1(self, form: FormSpec):
        F = form.field
        w = self.witt(form)
        pts = [u for u, _ in w.pairs] + [v for _, v in w.pairs]
        tags = ["frame"] * (2 * w.n)
        u1, v1 = w.pairs[0]
        for z in w.V0:
            if form.hermitian:
                b = _trace_solution(F, int(F.neg[form.value(z)]))
                x = F.add[F.add[z, u1], F.mul[b, v1]]
            else:
                x = F.sub[F.add[z, u1], F.mul[form.value(z), v1]]
            pts.append(x)
            tags.append("chain")
        rows = np.array([_point(F, p) for p in pts], dtype=F.dtype)[:, None, :]
        return rows, tags

    def hats(self, model: PolarModel, Zs: np.ndarray, G: np.ndarray, k: int, deg=None):
        """For each Z, the least k-subspace Zhat > Z with rank(Zhat G^T) = 2."""
        F = model.field
        lev = model.level(k).rows
        good = _rank2(F, mat_mul(F, lev, G.T))
        if deg:
            good &= F.subfield_mask(deg)[lev].all(axis=(1, 2))
        out = []
        for Z in Zs:
            idx = np.nonzero(good & contains_rows(F, lev, Z))[0]
            if idx.size == 0:
                raise AssertionError("no admissible extension of an inner element")
            out.append(lev[idx[0]])
        return np.array(out, dtype=F.dtype).reshape(-1, k, model.N)

    def generic(self, form: FormSpec, k: int):
        """Singular-hyperplane construction with q = u_1, p0 = v_1, recursively."""
        F = form.field
        if k == 0:
            return np.zeros((1, 0, form.N), dtype=F.dtype), ["empty"]
        if k == 1:
            return self.k1(form)
        model = self.model(form)
        n = model.n
        if k >= n:
            rows = model.level(k).rows
            return rows, ["S_k(all)"] * len(rows)
        w = self.witt(form)
        q, p0 = _point(F, w.pairs[0][0]), _point(F, w.pairs[0][1])
        G = np.array([form.functional(q), form.functional(p0)])
        ident = Chart.identity(form)
        rq, rp, sec = ident.residue(q[None]), ident.residue(p0[None]), ident.section(G)
        parts = []
        R, _ = self.generic(rq.form, k - 1)
        parts.append((_lift(rq, R), "S_k(q)"))
        if k < n - 1:
            R, _ = self.generic(sec.form, k)
            parts.append((_lift(sec, R), "S_k({q,p0}perp)"))
        else:
            R = sec.model(self.budget).level(k).rows
            parts.append((_lift(sec, R), "S_k({q,p0}perp)"))
        R, _ = self.generic(rp.form, k - 1)
        parts.append((_lift(rp, R), "S_k(p0)"))
        inner, _ = self.generic(sec.form, k - 2)
        parts.append((self.hats(model, _lift(sec, inner), G, k, self._deg(form)), "hat-Z"))
        rows = np.concatenate([p[0] for p in parts])
        tags = sum([[p[1]] * len(p[0]) for p in parts], [])
        return rows, tags

    # Hermitian tower over the defect
    def herm(self, form: FormSpec, k: int):
        F = form.field
        if k == 0:
            return np.zeros((1, 0, form.N), dtype=F.dtype), ["empty"]
        if k == 1:
            return self.k1(form)
        model = self.model(form)
        if model.d == 0:
            return self.herm_base(form, model, k)
        w = model.witt
        z = w.V0[-1]
        g = form.functional(z)
        u1, v1 = w.pairs[0]
        b = _trace_solution(F, int(F.neg[form.value(z)]))
        p0 = _point(F, F.add[F.add[z, u1], F.mul[b, v1]])
        G = np.array([g, form.functional(p0)])
        ident = Chart.identity(form)
        K, rp, KP = ident.section(g[None]), ident.residue(p0[None]), ident.section(G)
        parts = []
        R, _ = self.herm(K.form, k)
        parts.append((_lift(K, R), "G_K"))
        R, _ = self.herm(rp.form, k - 1)
        parts.append((_lift(rp, R), "G_p0"))
        inner, _ = self.herm(KP.form, k - 2)
        parts.append((self.hats(model, _lift(KP, inner), G, k), "hat-Z"))
        rows = np.concatenate([p[0] for p in parts])
        tags = sum([[p[1]] * len(p[0]) for p in parts], [])
        return rows, tags

    def herm_base(self, form: FormSpec, model: PolarModel, k: int):
        rows, tags = self.generic(form, k)
        geom = build_grassmannian(model, k)
        ids = model.lookup(k, rows)
        _, first = np.unique(ids, return_index=True)
        first = np.sort(first)
        rows, tags, ids = rows[first], [tags[i] for i in first], ids[first]
        if not is_generating(geom, ids):
            raise AssertionError("base construction does not generate")
        target = comb(2 * model.n, k)
        note = {"n": model.n, "k": k, "constructed": len(ids), "target": target}
        keep = np.arange(len(ids))
        if self.trim and len(ids) > target:
            keep, how = self.trim_to(geom, ids, tags, target)
            note["trim_method"] = how
        note["trimmed"] = int(len(keep))
        self.notes.append(note)
        return rows[keep], [tags[i] for i in keep]

    def trim_to(self, geom: Geometry, ids: np.ndarray, tags: list, target: int):
        """Pick a generating subset of the given size, guided by Plücker independence.

        Elements coming from the small recursive parts are tried first; the
        rest are visited in seeded random orders. Falls back to greedy removal.
        """
        F = geom.model.field
        P = plucker_batch(F, geom.point_rows[ids])
        big = np.array([t.startswith("S_k({q,p0}") for t in tags])
        small_idx, big_idx = np.nonzero(~big)[0], np.nonzero(big)[0]
        rng = np.random.default_rng(self.seed)
        for attempt in range(self.tries):
            order = np.concatenate([small_idx, rng.permutation(big_idx)])
            inc = IncrementalRank(F, P.shape[1])
            sel = []
            for i in order:
                if inc.add(P[i:i + 1])[0]:
                    sel.append(int(i))
                    if len(sel) == target:
                        break
            if len(sel) == target and is_generating(geom, ids[sel]):
                return np.sort(np.array(sel)), f"plucker-guided (attempt {attempt + 1})"
        keep = greedy_minimize(geom, ids)
        pos = {int(x): i for i, x in enumerate(ids)}
        return np.array(sorted(pos[int(x)] for x in keep)), "greedy"

    # orthogonal line Grassmannians: hyperplane towers down to Q(6, q)
    def orth2(self, form: FormSpec):
        F = form.field
        model = self.model(form)
        n, d = model.n, model.d
        N = form.N
        if n == 3 and d == 1:
            rows = q2_base_lines(F.p, seed=self.seed).astype(F.dtype)
            return rows, ["base-search"] * len(rows)
        if n < 3 or (n == 3 and d == 0):
            raise ValueError("the tower needs n >= 3, and d > 0 when n = 3")
        I = np.eye(N, dtype=F.dtype)
        one = 1
        if d == 0:
            g = np.zeros(N, dtype=F.dtype)
            g[2 * n - 2], g[2 * n - 1] = one, F.neg[one]
            basis = np.vstack([I[:2 * n - 2], F.add[I[2 * n - 2], I[2 * n - 1]][None]])
            p0 = I[2 * n - 1]
            sub = f"Qparab({n - 1},{F.q})"
        elif d == 1:
            g = I[2 * n]
            basis = I[:2 * n]
            p0 = F.add[F.sub[I[0], I[1]], I[2 * n]]
            sub = f"Qplus({n},{F.q})"
        else:
            g = I[2 * n + 1]
            basis = I[:2 * n + 1]
            mu = form.matrix[2 * n + 1, 2 * n + 1]
            p0 = F.add[F.sub[I[0], F.mul[mu, I[1]]], I[2 * n + 1]]
            sub = f"Qparab({n},{F.q})"
        if int(form.value(p0)) != 0:
            raise AssertionError("tower point is not singular")
        Hc = Chart.identity(form).restrict_rows(basis)
        if not np.array_equal(Hc.form.matrix, standard_form(sub).matrix):
            raise AssertionError("hyperplane section is not in standard shape")
        G = np.array([g, form.functional(p0)])
        rp = Chart.identity(form).residue(p0[None])
        parts = []
        R, tags = self.orth2(Hc.form)
        parts.append((_lift(Hc, R), [f"H2:{t}" for t in tags]))
        R, _ = self.k1(rp.form)
        parts.append((_lift(rp, R), ["S_2(p0)"] * len(R)))
        deg = self.rational if d <= 1 else None
        parts.append((self.hats(model, np.zeros((1, 0, N), dtype=F.dtype), G, 2, deg), ["l0"]))
        rows = np.concatenate([p[0] for p in parts])
        return rows, sum([p[1] for p in parts], [])


@lru_cache(maxsize=None)
def q2_base_lines(p: int, seed: int = 0, sample: int = 400, trials: int = 50) -> np.ndarray:
    """21 lines generating Q_2(6, p) over the prime field, found by greedy growth.

    Each step adds a line maximizing the closure gain over a seeded sample of
    candidates; restarts change the seed until 21 lines suffice.
    """
    model = build_model(f"Qparab(3,{p})")
    geom = build_grassmannian(model, 2)
    target = comb(7, 2)
    best = None
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        st = ClosureState(geom)
        chosen: list = []
        while not st.generated_all() and len(chosen) <= target:
            cand = np.nonzero(st.closed == 0)[0]
            if len(cand) > sample:
                cand = np.sort(rng.choice(cand, sample, replace=False))
            gains = np.array([st.copy().add([c]) for c in cand])
            top = np.nonzero(gains == gains.max())[0]
            c = int(cand[rng.choice(top)])
            st.add([c])
            chosen.append(c)
        if st.generated_all() and (best is None or len(chosen) < len(best)):
            best = chosen
        if best is not None and len(best) <= target:
            break
    if best is None:
        raise RuntimeError("greedy search found no generating set")
    out = geom.point_rows[np.sort(np.array(best))].copy()
    out.setflags(write=False)
    return out


# -- public constructions ---------------------------------------------------------

def apartment(model: PolarModel, frm: np.ndarray | None = None) -> GenSet:
    """The 2^n generators spanned by maximal cliques of a frame."""
    F, n = model.field, model.n
    frm = frame(model) if frm is None else np.asarray(frm, dtype=F.dtype)
    rows = []
    for bits in range(2 ** n):
        pts = np.array([frm[n + i] if (bits >> i) & 1 else frm[i] for i in range(n)])
        if not model.is_totally_singular(pts):
            raise AssertionError("frame clique does not span a singular subspace")
        S = canonicalize(F, pts, model.N)
        if S.rank != n:
            raise AssertionError("frame clique is not independent")
        rows.append(S.rows)
    return _make(model, n, [(np.array(rows), "apartment")])


def _check_k2(model: PolarModel, g: np.ndarray, p0: np.ndarray, l0: np.ndarray):
    F, form = model.field, model.form
    if model.n <= 2:
        raise HypothesisError("rank", "the construction needs rank n > 2")
    if int(form.value(p0)) != 0:
        raise HypothesisError("p0 singular", "p0 is not a point of the polar space")
    if int(mat_mul(F, p0[None], g[:, None])[0, 0]) == 0:
        raise HypothesisError("p0 not in H", "p0 lies in H")
    if len(l0) != 2 or not model.is_totally_singular(l0) or canonicalize(F, l0).rank != 2:
        raise HypothesisError("l0 singular line", "l0 is not a singular line")
    a = mat_mul(F, l0, g[:, None])[:, 0]
    b = form.polar(p0, l0)
    if not a.any():
        raise HypothesisError("l0 not in H", "l0 is contained in H")
    if not np.any(b):
        raise HypothesisError("l0 not in p0perp", "l0 is contained in p0^perp")
    if not _rank2(F, np.stack([a, b], axis=1)[None])[0]:
        raise HypothesisError("distinct traces", "H and p0^perp meet l0 in the same point")


def genset_k2(model: PolarModel, H, p0, l0) -> GenSet:
    """S_2(H) together with S_2(p0) and the line l0."""
    F = model.field
    g = _functional(model, H)
    p0 = _point(F, p0)
    l0 = canonicalize(F, l0, model.N).rows
    _check_k2(model, g, p0, l0)
    return genset_k(model, g, p0, 2, l0=l0)


def _k_sets(model: PolarModel, k: int, g: np.ndarray, p0: np.ndarray):
    F = model.field
    lev = model.level(k).rows
    inH = _in_kernel(F, lev, g)
    thru = contains_rows(F, lev, p0[None])
    return lev[inH], lev[thru]


def genset_k(model: PolarModel, H, p0, k: int, inner=None, l0=None,
             check_inner: bool = True, budget=None) -> GenSet:
    """S_k(H) together with S_k(p0) and one extension Zhat of each inner element Z.

    inner is a generating set of the (k-2)-Grassmannian of H cap p0^perp,
    given as (M, k-2, N) matrices; it is built when omitted.
    """
    F, form, n = model.field, model.form, model.n
    if not 2 <= k < n:
        raise HypothesisError("k range", f"need 2 <= k < n = {n}")
    g = _functional(model, H)
    p0 = _point(F, p0)
    if int(form.value(p0)) != 0:
        raise HypothesisError("p0 singular", "p0 is not a point of the polar space")
    if int(mat_mul(F, p0[None], g[:, None])[0, 0]) == 0:
        raise HypothesisError("p0 not in H", "p0 lies in H")
    G = np.array([g, form.functional(p0)])
    b = _Builder(budget=budget or model.budget)
    meta = {}
    if k == 2:
        if l0 is None:
            l0 = b.hats(model, np.zeros((1, 0, model.N), dtype=F.dtype), G, 2)[0]
        hat = np.asarray(l0, dtype=F.dtype)[None]
    else:
        sec = Chart.identity(form).section(G)
        if inner is None:
            R, _ = b.generic(sec.form, k - 2)
            inner = _lift(sec, R)
        inner = np.asarray(inner, dtype=F.dtype).reshape(-1, k - 2, model.N)
        if np.any(mat_mul(F, inner, G.T)):
            raise HypothesisError("inner in H cap p0perp", "inner element outside H cap p0^perp")
        if check_inner and model.expected_count(k - 2) <= 200_000:
            geom_in = build_grassmannian(model, k - 2)
            allowed = ~mat_mul(F, model.level(k - 2).rows, G.T).any(axis=(1, 2))
            ok = span_closure(geom_in, model.lookup(k - 2, inner), allowed=allowed).generated_all
            meta["inner_generates"] = bool(ok)
            if not ok:
                raise HypothesisError("inner generates", "inner set does not generate")
        hat = b.hats(model, inner, G, k)
    SH, Sp = _k_sets(model, k, g, p0)
    return _make(model, k, [(SH, "S_k(H)"), (Sp, "S_k(p0)"), (hat, "hat-Z")], meta)


def genset_singular(model: PolarModel, q, p0, k: int, inner=None,
                    allow_top: bool = False) -> GenSet:
    """S_k(q), S_k({q,p0}^perp), S_k(p0) and the extensions Zhat, for a singular hyperplane q^perp.

    For k = n - 1 the middle part carries no lines of its own, so the
    construction degenerates; it is refused unless allow_top is set.
    """
    F, form, n = model.field, model.form, model.n
    q, p0 = _point(F, q), _point(F, p0)
    if not 2 <= k < n:
        raise HypothesisError("k range", f"need 2 <= k < n = {n}")
    if k == n - 1 and not allow_top:
        raise HypothesisError("k < n-1", "the geometry on {q,p0}^perp has no lines when k = n-1")
    if int(form.value(q)) or int(form.value(p0)):
        raise HypothesisError("singular points", "q and p0 must be points of the polar space")
    if int(form.polar(q, p0)) == 0:
        raise HypothesisError("p0 not in qperp", "p0 is collinear with q")
    G = np.array([form.functional(q), form.functional(p0)])
    b = _Builder(budget=model.budget)
    if k == 2:
        inner = np.zeros((1, 0, model.N), dtype=F.dtype)
    elif inner is None:
        sec = Chart.identity(form).section(G)
        R, _ = b.generic(sec.form, k - 2)
        inner = _lift(sec, R)
    hat = b.hats(model, np.asarray(inner, dtype=F.dtype), G, k)
    lev = model.level(k).rows
    Sq = lev[contains_rows(F, lev, q[None])]
    Sp = lev[contains_rows(F, lev, p0[None])]
    Sm = lev[~mat_mul(F, lev, G.T).any(axis=(1, 2))]
    return _make(model, k, [(Sq, "S_k(q)"), (Sm, "S_k({q,p0}perp)"), (Sp, "S_k(p0)"),
                            (hat, "hat-Z")])


def polar_genset(model: PolarModel, rational: int | None = None) -> GenSet:
    """2n + d points generating the polar space: a frame plus a chain point per defect direction."""
    rows, tags = _Builder(rational=rational).k1(model.form)
    return _make(model, 1, [(rows, tags)])


def hermitian_genset(q0: int, n: int, d: int, k: int, budget=None, trim: bool = True,
                     seed: int = 0, model: PolarModel | None = None) -> GenSet:
    """Generating set of H_k built along the defect tower, of target size C(2n+d, k)."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n = {n}")
    model = model if model is not None else build_model(f"H({n},{d},{q0})", budget=budget)
    b = _Builder(budget=model.budget, trim=trim, seed=seed)
    rows, tags = b.herm(model.form, k)
    target = comb(2 * n + d, k)
    gs = _make(model, k, [(rows, tags)])
    gs.meta.update({"target": target, "base_cases": b.notes,
                    "size_claim": "withheld (F4)" if q0 == 2 and k > 1 else "C(2n+d,k)"})
    return gs


def orth_q2_genset(q: int, n: int, d: int, budget=None, seed: int = 0,
                   model: PolarModel | None = None) -> GenSet:
    """Generating set of Q_2 of size C(2n+d, 2) from hyperplane towers over Q(6, q)."""
    from .gf import prime_power
    p, e = prime_power(q)
    if not (e == 1 or q in (4, 8, 9)):
        raise ValueError(f"unsupported field order {q}")
    if n < 3 or d > 2 or (n == 3 and d == 0):
        raise ValueError("need n >= 3, d <= 2 and d > 0 when n = 3")
    desc = {0: "Qplus", 1: "Qparab", 2: "Qminus"}[d] + f"({n},{q})"
    model = model if model is not None else build_model(desc, budget=budget)
    b = _Builder(budget=model.budget, rational=1, seed=seed)
    rows, tags = b.orth2(model.form)
    gs = _make(model, 2, [(rows, tags)])
    gs.meta.update({"target": comb(2 * n + d, 2), "rationality_claimed": d <= 1})
    return gs


def random_triple(model: PolarModel, rng: np.random.Generator, kind: str | None = None,
                  max_tries: int = 1000):
    """A random (H, p0, l0) satisfying the hypotheses of the k = 2 construction."""
    from .polar import hyperplane
    F, form = model.field, model.form
    pts = model.points
    lines = model.level(2).rows
    for _ in range(max_tries):
        kd = kind or ("nondegenerate" if rng.random() < 0.5 else "singular")
        if kd == "singular":
            seed = pts[rng.integers(len(pts))]
        else:
            seed = rng.integers(0, F.q, size=model.N).astype(F.dtype)
            if int(form.value(seed)) == 0 or not form.functional(seed).any():
                continue
        try:
            H = hyperplane(model, kd, seed)
        except ValueError:
            continue
        out = np.nonzero(~H.members)[0]
        p0 = pts[out[rng.integers(len(out))]]
        G = np.array([H.functional, form.functional(p0)])
        good = np.nonzero(_rank2(F, mat_mul(F, lines, G.T)))[0]
        if good.size == 0:
            continue
        l0 = lines[good[rng.integers(len(good))]]
        return H, p0, l0
    raise RuntimeError("no admissible triple found")
