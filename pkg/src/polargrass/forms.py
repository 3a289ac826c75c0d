"""Quadratic and Hermitian forms, Witt decomposition and space descriptors."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from .gf import Field, get_field, parse_field
from .linalg import canonicalize, mat_mul, null_space, rref

__all__ = [
    "FormSpec",
    "WittData",
    "DegenerateFormError",
    "standard_form",
    "parse_space",
    "witt_decompose",
    "split_anisotropic",
    "split_alternating",
    "normalized_vectors",
]


class DegenerateFormError(ValueError):
    def __init__(self, vector, msg="form is degenerate"):
        self.vector = np.asarray(vector)
        super().__init__(f"{msg}: radical vector {list(map(int, self.vector))}")


class FormSpec:
    """A quadratic form q(x) = sum_{i<=j} C[i,j] x_i x_j or a sigma-Hermitian
    form h(x, y) = sum sigma(x_i) M[i,j] y_j on V(N, F)."""

    def __init__(self, kind: str, field: Field, matrix, descriptor: str | None = None,
                 check: bool = True):
        if kind not in ("quadratic", "hermitian"):
            raise ValueError(f"unknown form kind {kind!r}")
        A = np.array(matrix, dtype=np.int64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("coefficient matrix must be square")
        if A.size and (A.min() < 0 or A.max() >= field.q):
            raise ValueError("coefficients are not element codes")
        A = A.astype(field.dtype)
        N = A.shape[0]
        if kind == "quadratic":
            C = np.triu(A)
            low = np.tril(A, -1).T
            C = field.add[C, low]
            G = field.add[C, C.T]
            # diagonal of the bilinearization is 2 C_ii; the line above already doubles it
        else:
            if not field.has_conjugation:
                raise ValueError(f"{field} has odd degree: no Hermitian conjugation")
            if not np.array_equal(A.T, field.sigma[A]):
                raise ValueError("matrix is not sigma-Hermitian")
            C = A
            G = A
        C.setflags(write=False)
        G.setflags(write=False)
        self.kind, self.field, self.N = kind, field, N
        self.matrix = C
        self.gram = G
        self.descriptor = descriptor
        nz = np.nonzero(C)
        self.terms = (nz[0].astype(np.int64), nz[1].astype(np.int64), C[nz].astype(np.int64))
        if check:
            self.check_nondegenerate()

    # -- evaluation -----------------------------------------------------
    @property
    def hermitian(self) -> bool:
        return self.kind == "hermitian"

    def _conj(self, X):
        return self.field.sigma[X] if self.hermitian else X

    def value(self, X) -> np.ndarray:
        """q(x) for quadratic forms, h(x, x) for Hermitian ones; leading axes broadcast."""
        F = self.field
        X = np.asarray(X, dtype=F.dtype)
        if X.shape[-1] != self.N:
            raise ValueError(f"vector length {X.shape[-1]} != {self.N}")
        out = np.zeros(X.shape[:-1], dtype=F.dtype)
        Xc = self._conj(X)
        for i, j, c in zip(*self.terms):
            out = F.add[out, F.mul[c, F.mul[Xc[..., i], X[..., j]]]]
        return out

    def polar(self, X, Y) -> np.ndarray:
        """Bilinearization f(x, y) (quadratic) or h(x, y) (Hermitian)."""
        return self._dot(self.functional(X), Y)

    def _dot(self, G, Y):
        F = self.field
        G = np.asarray(G, dtype=F.dtype)
        Y = np.asarray(Y, dtype=F.dtype)
        out = np.zeros(np.broadcast_shapes(G.shape[:-1], Y.shape[:-1]), dtype=F.dtype)
        for j in range(self.N):
            out = F.add[out, F.mul[G[..., j], Y[..., j]]]
        return out

    def eval(self, x, y=None):
        if y is None:
            return int(self.value(x)) if np.asarray(x).ndim == 1 else self.value(x)
        r = self.polar(x, y)
        return int(r) if np.ndim(r) == 0 else r

    def bilinearize(self):
        if self.hermitian:
            raise ValueError("bilinearization is defined for quadratic forms only")
        return lambda x, y: self.eval(x, y)

    def functional(self, X) -> np.ndarray:
        """Rows g with f(x, y) = sum_j g_j y_j."""
        X = np.asarray(X, dtype=self.field.dtype)
        return mat_mul(self.field, self._conj(X)[..., None, :], self.gram)[..., 0, :]

    def is_singular(self, X) -> np.ndarray:
        return self.value(X) == 0

    # -- structure ------------------------------------------------------
    def radical(self) -> np.ndarray:
        """Basis of Rad(f) = {y : f(x, y) = 0 for all x}."""
        return null_space(self.field, self.gram, self.N)

    def check_nondegenerate(self):
        R = self.radical()
        if len(R) == 0:
            return
        if self.hermitian or self.field.p != 2:
            raise DegenerateFormError(R[0])
        vecs = canonicalize(self.field, R, self.N).vectors()
        vals = self.value(vecs)
        bad = np.nonzero((vals == 0) & vecs.any(axis=1))[0]
        if bad.size:
            raise DegenerateFormError(vecs[bad[0]], "polar space is degenerate")

    def subdefects(self):
        """(d1, d2): dim of the bilinear radical and the rest of the defect."""
        w = witt_decompose(self)
        return w.d1, w.d2

    def restrict(self, basis, check: bool = True) -> "FormSpec":
        """Form induced on the span of the given rows, in coordinates w.r.t. them."""
        F = self.field
        B = np.asarray(basis, dtype=F.dtype)
        m = len(B)
        if self.hermitian:
            M = np.zeros((m, m), dtype=F.dtype)
            for a in range(m):
                M[a] = self.polar(B[a], B)
            return FormSpec("hermitian", F, M, check=check)
        C = np.zeros((m, m), dtype=F.dtype)
        for a in range(m):
            C[a, a] = self.value(B[a])
            if a + 1 < m:
                C[a, a + 1:] = self.polar(B[a], B[a + 1:])
        return FormSpec("quadratic", F, C, check=check)

    def has_subfield_coefficients(self, sub_degree: int) -> bool:
        return bool(np.all(self.field.subfield_mask(sub_degree)[self.matrix]))

    def to_json(self):
        return {"kind": self.kind, "field": self.field.descriptor,
                "matrix": [[int(x) for x in r] for r in self.matrix]}

    def __repr__(self):
        return f"FormSpec({self.descriptor or self.kind}, N={self.N}, {self.field.descriptor})"


# -- Witt decomposition -------------------------------------------------

def normalized_vectors(field: Field, basis: np.ndarray, chunk: int = 1 << 15,
                       subfield: np.ndarray | None = None):
    """Yield chunks of normalized vectors of span(basis), in coefficient key order.

    Coefficient vectors have first nonzero entry 1; they are ordered by the
    position of that entry, then by the remaining entries (earliest most
    significant). With `subfield` (a sorted array of codes) the remaining
    entries range over the subfield only.
    """
    m = len(basis)
    vals = np.arange(field.q) if subfield is None else np.asarray(subfield)
    s = len(vals)
    for i in range(m):
        free = m - 1 - i
        total = s ** free
        for start in range(0, total, chunk):
            idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
            coeffs = np.zeros((len(idx), m), dtype=field.dtype)
            coeffs[:, i] = 1
            for j in range(free):
                coeffs[:, m - 1 - j] = vals[(idx // s ** j) % s]
            yield mat_mul(field, coeffs, basis)


def _first(field, basis, pred, subfield=None):
    for vecs in normalized_vectors(field, basis, subfield=subfield):
        hit = np.nonzero(pred(vecs))[0]
        if hit.size:
            return vecs[hit[0]]
    return None


@dataclass
class WittData:
    pairs: list            # [(u_i, v_i)]
    V0: np.ndarray         # rows
    R: np.ndarray          # radical of the bilinearization (char 2 quadratic), rows
    n: int
    d: int
    d1: int
    d2: int
    extra: dict = dc_field(default_factory=dict)

    @property
    def u(self):
        return np.array([p[0] for p in self.pairs])

    @property
    def v(self):
        return np.array([p[1] for p in self.pairs])


def _perp_in(form: FormSpec, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Rows spanning {w in span(W) : f(x, w) = 0 for x in X}, RREF in ambient coordinates."""
    F = form.field
    G = form.functional(X)                      # (r, N)
    A = mat_mul(F, G, W.T)                       # (r, m): constraint on coefficients
    ns = null_space(F, A, len(W))
    if len(ns) == 0:
        return np.zeros((0, form.N), dtype=F.dtype)
    return rref(F, mat_mul(F, ns, W), form.N)[0]


def _trace_solution(F: Field, target: int) -> int:
    """Least lambda with lambda + sigma(lambda) = target."""
    lam = np.arange(F.q)
    hit = np.nonzero(F.add[lam, F.sigma[lam]] == target)[0]
    return int(hit[0])


def witt_decompose(form: FormSpec, subfield_degree: int | None = None) -> WittData:
    """Greedy decomposition into hyperbolic pairs and an anisotropic complement.

    u is the least singular normalized vector of the current complement, v
    the least vector with f(u, v) != 0, rescaled and corrected to be
    singular. With subfield_degree the search is restricted to vectors over
    that subfield (the form must have coefficients there).
    """
    F = form.field
    sub = None
    if subfield_degree is not None:
        if not form.has_subfield_coefficients(subfield_degree):
            raise ValueError("form has coefficients outside the requested subfield")
        sub = np.nonzero(F.subfield_mask(subfield_degree))[0]
    W = np.eye(form.N, dtype=F.dtype)
    pairs = []
    while len(W):
        u = _first(F, W, lambda V: form.is_singular(V), sub)
        if u is None:
            break
        gu = form.functional(u)
        w = _first(F, W, lambda V: form._dot(gu, V) != 0, sub)
        if w is None:
            raise DegenerateFormError(u)
        v = F.mul[F.inv_table[form.polar(u, w)], w]
        if form.hermitian:
            lam = _trace_solution(F, int(F.neg[form.value(v)]))
            v = F.add[v, F.mul[lam, u]]
        else:
            v = F.sub[v, F.mul[form.value(v), u]]
        pairs.append((u.copy(), v.copy()))
        W = _perp_in(form, W, np.array([u, v]))
    V0 = W
    R = np.zeros((0, form.N), dtype=F.dtype)
    if not form.hermitian and F.p == 2:
        R = form.radical()
    return WittData(pairs=pairs, V0=V0, R=R, n=len(pairs), d=len(V0), d1=len(R),
                    d2=len(V0) - len(R))


def split_alternating(form: FormSpec, basis, m: int) -> list:
    """m mutually orthogonal planes <v_j, w_j> with f(v_j, w_j) != 0 inside span(basis).

    f must be non-degenerate on span(basis).
    """
    F = form.field
    cur = np.asarray(basis, dtype=F.dtype)
    if 2 * m > len(cur):
        raise ValueError(f"cannot split {m} planes from a {len(cur)}-dimensional space")
    planes = []
    for _ in range(m):
        v = cur[0]
        fv = form.polar(v, cur)
        nz = np.nonzero(fv)[0]
        if nz.size == 0:
            raise DegenerateFormError(v, "bilinear form degenerate on the subspace")
        w = cur[nz[0]]
        planes.append(np.array([v, w]))
        cur = _perp_in(form, cur, np.array([v, w]))
    return planes


def split_anisotropic(form: FormSpec, witt: WittData, m: int) -> list:
    """Split m planes from a complement V0' of R in V0 (char 2 quadratic forms)."""
    F = form.field
    if form.hermitian or F.p != 2:
        raise ValueError("sub-defect splitting applies to quadratic forms in characteristic 2")
    if 2 * m > witt.d2:
        raise ValueError(f"2m = {2 * m} exceeds the elliptic sub-defect {witt.d2}")
    comp = []
    span = list(witt.R)
    for row in witt.V0:
        trial = np.array(span + [row])
        if len(rref(F, trial, form.N)[1]) > len(span):
            span.append(row)
            comp.append(row)
    if m == 0:
        return []
    return split_alternating(form, np.array(comp), m)


# -- descriptors ----------------------------------------------------------

def _qminus_pair(F: Field):
    """(lambda, mu) making t^2 + lambda t + mu irreducible, pinned canonically."""
    if F.p == 2:
        for delta in range(1, F.q):
            if F.trace(delta) == 1:
                return 1, delta
    else:
        for nu in range(1, F.q):
            if not F.is_square(nu):
                return 0, int(F.neg[nu])
    raise AssertionError("no anisotropic binary form found")


def standard_form(descriptor: str) -> FormSpec:
    desc = descriptor.strip()
    if desc.startswith("custom:"):
        spec = json.loads(desc[len("custom:"):])
        F = parse_field(spec["field"])
        kind = spec.get("kind", "quadratic")
        mat = [[F.parse_element(x) if isinstance(x, str) else int(x) for x in r] for r in spec["matrix"]]
        return FormSpec(kind, F, mat, descriptor=desc)
    m = re.fullmatch(r"(Qplus|Qparab|Qminus)\(\s*(\d+)\s*,\s*(\d+)\s*\)", desc)
    if m:
        name, n, q = m.group(1), int(m.group(2)), int(m.group(3))
        F = get_field(q)
        d = {"Qplus": 0, "Qparab": 1, "Qminus": 2}[name]
        N = 2 * n + d
        C = np.zeros((N, N), dtype=np.int64)
        for i in range(n):
            C[2 * i, 2 * i + 1] = 1
        if d == 1:
            C[2 * n, 2 * n] = 1
        elif d == 2:
            lam, mu = _qminus_pair(F)
            C[2 * n, 2 * n] = 1
            C[2 * n, 2 * n + 1] = lam
            C[2 * n + 1, 2 * n + 1] = mu
        return FormSpec("quadratic", F, C, descriptor=f"{name}({n},{q})")
    m = re.fullmatch(r"H\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)", desc)
    if m:
        n, d, q0 = (int(g) for g in m.groups())
        if d > 1:
            raise ValueError("finite fields admit anisotropic Hermitian forms of dimension <= 1 only")
        F = get_field(q0 * q0)
        N = 2 * n + d
        M = np.zeros((N, N), dtype=np.int64)
        for i in range(n):
            M[2 * i, 2 * i + 1] = 1
            M[2 * i + 1, 2 * i] = 1
        if d == 1:
            M[2 * n, 2 * n] = 1
        return FormSpec("hermitian", F, M, descriptor=f"H({n},{d},{q0})")
    raise ValueError(f"unknown space descriptor {descriptor!r}")


parse_space = standard_form
