"""Finite polar spaces: singular points, singular k-subspaces, perps,
hyperplanes, residues and frames.

Subspaces of a level are stored as a stack of RREF matrices sorted by their
integer key; the position in that order is the subspace ID.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from . import kernels
from .forms import FormSpec, WittData, standard_form, witt_decompose
from .linalg import (
    Subspace,
    canonicalize,
    mat_mul,
    null_space,
    rref,
    rref_batch,
    subspace_keys,
)

__all__ = [
    "Budget",
    "BudgetExceeded",
    "PolarModel",
    "Level",
    "Chart",
    "Hyperplane",
    "build_model",
    "count_singular_subspaces",
    "hyperplane",
    "upper_residue",
    "frame",
]


class BudgetExceeded(RuntimeError):
    """Raised before building an instance whose size exceeds the configured budget."""

    def __init__(self, what: str, estimate: int, cap: int):
        self.estimate, self.cap = estimate, cap
        super().__init__(f"instance too large: {what} ~{estimate:,} exceeds budget {cap:,} "
                         "(use --budget large or raise the cap)")


@dataclass(frozen=True)
class Budget:
    max_projective: int = 5_000_000      # projective points scanned
    max_grassmann: int = 1_000_000       # points of a Grassmannian / size of a level

    @classmethod
    def named(cls, name) -> "Budget":
        if isinstance(name, Budget):
            return name
        if name in (None, "default"):
            return cls()
        if name == "large":
            return cls(50_000_000, 20_000_000)
        if name == "unlimited":
            return cls(10 ** 18, 10 ** 18)
        raise ValueError(f"unknown budget {name!r}")


def count_singular_subspaces(n: int, d: int, q: int, k: int, hermitian: bool) -> int:
    """|S_k| of a finite polar space of rank n and defect d over GF(q)."""
    if k < 0 or k > n:
        return 0
    if hermitian:
        q0 = int(round(q ** 0.5))
        # q^(x + e) with e = d + 1/2, written in terms of q0
        up = lambda x: q0 ** (2 * x + 2 * d + 1)   # noqa: E731
    else:
        up = lambda x: q ** (x + d)                # noqa: E731
    num = prod((q ** (n - i) - 1) * (up(n - i - 1) + 1) for i in range(k))
    den = prod(q ** i - 1 for i in range(1, k + 1))
    return num // den


@dataclass
class Level:
    k: int
    rows: np.ndarray     # (M, k, N) RREF, sorted by key
    keys: np.ndarray     # (M,) int64 ascending

    def __len__(self):
        return len(self.keys)


class PolarModel:
    """The polar space of a non-degenerate form, with lazily enumerated levels."""

    def __init__(self, form: FormSpec, budget: Budget | str | None = None,
                 witt: WittData | None = None, backend: str | None = None):
        self.form = form
        self.field = form.field
        self.N = form.N
        self.budget = Budget.named(budget)
        self.witt = witt if witt is not None else witt_decompose(form)
        self.n, self.d = self.witt.n, self.witt.d
        self.backend = backend
        self._levels: dict[int, Level] = {}
        self._levels[0] = Level(0, np.zeros((1, 0, self.N), dtype=self.field.dtype),
                                np.zeros(1, dtype=np.int64))

    @property
    def descriptor(self) -> str:
        return self.form.descriptor or "custom"

    @property
    def hermitian(self) -> bool:
        return self.form.hermitian

    def expected_count(self, k: int) -> int:
        return count_singular_subspaces(self.n, self.d, self.field.q, k, self.hermitian)

    def invariants(self) -> dict:
        return {"descriptor": self.descriptor, "field": self.field.descriptor,
                "modulus": list(self.field.modulus), "N": self.N, "n": self.n, "d": self.d,
                "d1": self.witt.d1, "d2": self.witt.d2, "kind": self.form.kind}

    # -- levels -----------------------------------------------------------
    def level(self, k: int) -> Level:
        if k < 0:
            raise ValueError("k must be >= 0")
        if k > self.n:
            raise ValueError(f"no singular {k}-subspaces: the rank is {self.n}")
        if k not in self._levels:
            if k == 1:
                scanned = (self.field.q ** self.N - 1) // (self.field.q - 1)
                if scanned > self.budget.max_projective:
                    raise BudgetExceeded("projective points", scanned, self.budget.max_projective)
            est = self.expected_count(k)
            if est > self.budget.max_grassmann and k > 1:
                raise BudgetExceeded(f"singular {k}-subspaces", est, self.budget.max_grassmann)
            parent = self.level(k - 1)
            self._levels[k] = self._extend(parent)
        return self._levels[k]

    def _extend(self, parent: Level, chunk: int = 200_000) -> Level:
        F, form = self.field, self.form
        kern = kernels.get(self.backend)
        conj = F.sigma if form.hermitian else np.arange(F.q, dtype=F.dtype)
        ti, tj, tc = form.terms
        rows_out, keys_out = [], []
        for start in range(0, len(parent), chunk):
            par = np.ascontiguousarray(parent.rows[start:start + chunk], dtype=np.uint8)
            pidx, last = kern.extend_level(
                par, F.add, F.mul, F.neg, F.inv_table, np.ascontiguousarray(conj, dtype=np.uint8),
                np.ascontiguousarray(form.gram, dtype=np.uint8), ti, tj, tc.astype(np.uint8))
            if len(pidx) == 0:
                continue
            child = np.concatenate([par[pidx], last[:, None, :]], axis=1)
            rows_out.append(child)
            keys_out.append(subspace_keys(F, child))
        k = parent.k + 1
        if not rows_out:
            return Level(k, np.zeros((0, k, self.N), dtype=F.dtype), np.zeros(0, dtype=np.int64))
        rows = np.concatenate(rows_out)
        keys = np.concatenate(keys_out)
        order = np.argsort(keys, kind="stable")
        return Level(k, rows[order], keys[order])

    @property
    def points(self) -> np.ndarray:
        return self.level(1).rows[:, 0, :]

    @property
    def npoints(self) -> int:
        return len(self.level(1))

    def lookup(self, k: int, mats) -> np.ndarray:
        """IDs of RREF matrices (M, k, N) in level k; -1 where absent."""
        mats = np.asarray(mats, dtype=self.field.dtype)
        lev = self.level(k)
        keys = subspace_keys(self.field, mats)
        idx = np.searchsorted(lev.keys, keys)
        idx = np.minimum(idx, len(lev.keys) - 1)
        found = lev.keys[idx] == keys
        return np.where(found, idx, -1)

    def subspace_id(self, S) -> int:
        if not isinstance(S, Subspace):
            S = canonicalize(self.field, S, self.N)
        if S.rank == 0:
            return 0
        return int(self.lookup(S.rank, S.rows[None])[0])

    def subspace(self, k: int, i: int) -> Subspace:
        rows = self.level(k).rows[i]
        return Subspace(self.field, rows, tuple((rows != 0).argmax(axis=1)), self.N)

    # -- singularity and perps ---------------------------------------------
    def is_totally_singular(self, rows) -> bool:
        rows = np.asarray(rows, dtype=self.field.dtype)
        if len(rows) == 0:
            return True
        if np.any(self.form.value(rows) != 0):
            return False
        G = self.form.functional(rows)
        return not np.any(mat_mul(self.field, G, rows.T))

    def perp_mask(self, rows) -> np.ndarray:
        """Points orthogonal to every row (rows need not be singular)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=self.field.dtype))
        G = self.form.functional(rows)
        vals = mat_mul(self.field, self.points, G.T)
        return ~vals.any(axis=1)

    def perp(self, S) -> np.ndarray:
        rows = S.rows if isinstance(S, Subspace) else S
        return np.nonzero(self.perp_mask(rows))[0]

    def collinearity(self) -> np.ndarray:
        P = self.points
        if len(P) > 20_000:
            raise BudgetExceeded("collinearity matrix rows", len(P), 20_000)
        G = self.form.functional(P)
        return ~mat_mul(self.field, P, G.T).astype(bool)


def build_model(descriptor: str, budget=None, backend=None) -> PolarModel:
    return PolarModel(standard_form(descriptor), budget=budget, backend=backend)


# -- charts: coordinates on sections and quotients ---------------------------

class Chart:
    """Coordinates y in F^m for subspaces <prefix, y @ basis> of the ambient space.

    A plain section has an empty prefix; the quotient by a singular subspace X
    uses X as prefix and a complement of X in X^perp as basis.
    """

    def __init__(self, form: FormSpec, basis, prefix=None, sub_form: FormSpec | None = None):
        F = form.field
        self.ambient = form
        self.field = F
        self.basis = np.asarray(basis, dtype=F.dtype).reshape(-1, form.N)
        self.prefix = (np.zeros((0, form.N), dtype=F.dtype) if prefix is None
                       else np.asarray(prefix, dtype=F.dtype).reshape(-1, form.N))
        self.form = sub_form if sub_form is not None else form.restrict(self.basis)
        self._model = None

    @classmethod
    def identity(cls, form: FormSpec) -> "Chart":
        return cls(form, np.eye(form.N, dtype=form.field.dtype), sub_form=form)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def model(self, budget=None) -> PolarModel:
        if self._model is None:
            self._model = PolarModel(self.form, budget=budget)
        return self._model

    def to_ambient(self, vecs) -> np.ndarray:
        return mat_mul(self.field, np.asarray(vecs, dtype=self.field.dtype), self.basis)

    def lift(self, mats) -> np.ndarray:
        """Chart subspaces (M, r, m) -> ambient RREF stack (M, j + r, N)."""
        mats = np.asarray(mats, dtype=self.field.dtype)
        if mats.ndim == 2:
            mats = mats[None]
        M = len(mats)
        amb = mat_mul(self.field, mats, self.basis) if mats.shape[1] else \
            np.zeros((M, 0, self.ambient.N), dtype=self.field.dtype)
        if len(self.prefix):
            amb = np.concatenate([np.broadcast_to(self.prefix, (M,) + self.prefix.shape), amb], axis=1)
        R, ranks = rref_batch(self.field, amb)
        full = amb.shape[1]
        if np.any(ranks != full):
            raise ValueError("lifted rows are dependent")
        return R

    def section(self, functionals) -> "Chart":
        """Sub-chart on {y : g . y = 0 for each functional g given in chart coordinates}."""
        ns = null_space(self.field, functionals, self.dim)
        return Chart(self.ambient, mat_mul(self.field, ns, self.basis), self.prefix,
                     sub_form=self.form.restrict(ns))

    def restrict_rows(self, rows) -> "Chart":
        rows = np.asarray(rows, dtype=self.field.dtype)
        return Chart(self.ambient, mat_mul(self.field, rows, self.basis), self.prefix,
                     sub_form=self.form.restrict(rows))

    def residue(self, X) -> "Chart":
        """Quotient chart X^perp / X for a totally singular X (rows in chart coordinates)."""
        F = self.field
        X = np.atleast_2d(np.asarray(X, dtype=F.dtype))
        W = residue_complement(self.form, X)
        return Chart(self.ambient, mat_mul(F, W, self.basis),
                     np.vstack([self.prefix, mat_mul(F, X, self.basis)]),
                     sub_form=self.form.restrict(W))

    def functional_in_chart(self, g_ambient) -> np.ndarray:
        """Restriction of an ambient linear functional to chart coordinates."""
        g = np.atleast_2d(np.asarray(g_ambient, dtype=self.field.dtype))
        return mat_mul(self.field, g, self.basis.T)


def residue_complement(form: FormSpec, X) -> np.ndarray:
    """Rows of a complement of X inside X^perp (deterministic)."""
    F = form.field
    X = np.atleast_2d(np.asarray(X, dtype=F.dtype))
    P = null_space(F, form.functional(X), form.N)
    span, _ = rref(F, X, form.N)
    cur = list(span)
    comp = []
    for row in P:
        trial = np.array(cur + [row])
        if len(rref(F, trial, form.N)[1]) > len(cur):
            cur.append(row)
            comp.append(row)
    return np.array(comp, dtype=F.dtype).reshape(-1, form.N)


def upper_residue(model: PolarModel, X) -> tuple[PolarModel, Chart]:
    """Polar space X^perp / X and the chart lifting its subspaces to S_{k+j}(X)."""
    S = X if isinstance(X, Subspace) else canonicalize(model.field, X, model.N)
    if S.rank >= model.n:
        raise ValueError("upper residue undefined for maximal subspaces")
    if not model.is_totally_singular(S.rows):
        raise ValueError("X is not totally singular")
    chart = Chart.identity(model.form).residue(S.rows)
    return chart.model(model.budget), chart


# -- hyperplanes -------------------------------------------------------------

@dataclass
class Hyperplane:
    kind: str                    # 'singular' | 'nondegenerate' | 'equation'
    functional: np.ndarray       # H = ker(functional) ∩ P
    seed: np.ndarray | None
    members: np.ndarray          # bool mask over model points
    induced: tuple | None = None  # (n', d') of the induced polar space when non-degenerate

    def contains_rows(self, field, rows) -> bool:
        rows = np.atleast_2d(rows)
        return not np.any(mat_mul(field, rows, self.functional[:, None]))


def hyperplane(model: PolarModel, kind: str, seed) -> Hyperplane:
    F, form = model.field, model.form
    seed = np.asarray(seed, dtype=F.dtype)
    if kind == "equation":
        g = seed
    else:
        sing = int(form.value(seed)) == 0
        if kind == "singular" and not sing:
            raise ValueError("a singular hyperplane needs a singular seed point")
        if kind == "nondegenerate" and sing:
            raise ValueError("a non-degenerate hyperplane needs a non-singular pole")
        if kind not in ("singular", "nondegenerate"):
            raise ValueError(f"unknown hyperplane kind {kind!r}")
        g = form.functional(seed)
    if not g.any():
        raise ValueError("seed lies in the radical: its perp is the whole space")
    members = ~mat_mul(F, model.points, g[:, None])[:, 0].astype(bool)
    if members.all():
        raise ValueError("not a proper hyperplane of the polar space")
    induced = None
    if kind != "singular":
        basis = null_space(F, g[None, :], model.N)
        try:
            w = witt_decompose(form.restrict(basis))
            induced = (w.n, w.d)
        except ValueError:
            induced = None
    return Hyperplane(kind, g, seed if kind != "equation" else None, members, induced)


def frame(model: PolarModel) -> np.ndarray:
    """2n normalized points [u_1..u_n, v_1..v_n] from the hyperbolic pairs."""
    F = model.field
    pts = [canonicalize(F, u).rows[0] for u, _ in model.witt.pairs]
    pts += [canonicalize(F, v).rows[0] for _, v in model.witt.pairs]
    out = np.array(pts, dtype=F.dtype)
    n = model.n
    G = model.form.functional(out)
    perp = ~mat_mul(F, out, G.T).astype(bool)
    for i in range(n):
        for j in range(n):
            if perp[i, n + j] != (i != j):
                raise AssertionError("frame collinearity pattern violated")
    return out
