"""Coordinate fixtures: named subspaces over F4, F8, F9 and identities between them.

Bundles are JSON files shipped with the package. Entries are stored as
tokens ("e^5", "-1", "e^-1") and parsed in the pinned field, so a bundle
only makes sense with the modulus it names; a mismatch is refused.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from importlib import resources

import numpy as np

from .forms import FormSpec, standard_form
from .gf import Field, parse_field
from .linalg import Subspace, canonicalize, intersect, null_space, span_sum

__all__ = ["FIXTURES", "Bundle", "FixtureMismatch", "load_fixture", "verify_fixture"]

FIXTURES = ("m-gen", "t-gen-4", "t-gen-8", "t-gen-9", "not-gen")
SCHEMA = 1


class FixtureMismatch(ValueError):
    """The bundle's field modulus does not match the field it is read in."""


@dataclass
class Bundle:
    name: str
    space: str
    fields: dict
    sub_degree: int
    subspaces: dict
    identities: list
    description: str = ""
    raw: dict = dc_field(default_factory=dict, repr=False)

    @property
    def default_field(self) -> str:
        return next(iter(self.fields))


def load_fixture(name: str) -> Bundle:
    """Load a shipped bundle by name, or a bundle file by path."""
    if name in FIXTURES:
        text = resources.files("polargrass").joinpath("fixtures", f"{name}.json").read_text()
    else:
        with open(name) as fh:
            text = fh.read()
    data = json.loads(text)
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported fixture schema {data.get('schema')!r}")
    return Bundle(data["name"], data["space"], dict(data["fields"]), int(data["subfield_degree"]),
                  data["subspaces"], data["identities"], data.get("description", ""), data)


@dataclass
class _Ctx:
    F: Field
    form: FormSpec
    sub: np.ndarray
    spaces: dict


def _context(bundle: Bundle, field: str | None) -> _Ctx:
    desc = field or bundle.default_field
    if desc not in bundle.fields:
        raise FixtureMismatch(f"bundle {bundle.name} has no coordinates for {desc}")
    F = parse_field(desc)
    if list(F.modulus) != list(bundle.fields[desc]):
        raise FixtureMismatch(f"{desc} modulus {list(F.modulus)} differs from the bundle's "
                              f"{bundle.fields[desc]}")
    form = standard_form(bundle.space.replace("{q}", str(F.q)))
    spaces = {}
    for key, rows in bundle.subspaces.items():
        M = np.array([[F.parse_element(t) for t in r] for r in rows], dtype=np.int64)
        S = canonicalize(F, M, form.N)
        if S.rank != len(rows):
            raise ValueError(f"{key}: the given rows are dependent")
        spaces[key] = S
    return _Ctx(F, form, F.subfield_mask(bundle.sub_degree), spaces)


def _singular(ctx: _Ctx, S: Subspace) -> bool:
    R = S.rows
    if np.any(ctx.form.value(R)):
        return False
    return not np.any(ctx.form.polar(R[:, None, :], R[None, :, :]))


def _rational_points(ctx: _Ctx, S: Subspace) -> int:
    return int(ctx.sub[S.points()].all(axis=1).sum())


def _on_line(ctx: _Ctx, T: Subspace, A: Subspace, B: Subspace):
    X, Z = intersect(A, B), span_sum(A, B)
    if X.rank != A.rank - 1 or Z.rank != A.rank + 1:
        return False, "generators are not adjacent"
    if not _singular(ctx, Z):
        return False, "generators span a non-singular subspace"
    if T.rank != A.rank or not (T.contains(X) and Z.contains(T)):
        return False, "target is off the line"
    return True, ""


def _planes_through(ctx: _Ctx, L: Subspace) -> set:
    F, form = ctx.F, ctx.form
    W = null_space(F, form.functional(L.rows), form.N)
    P = canonicalize(F, W, form.N)
    out = set()
    for v in P.points():
        if int(form.value(v)) or L.contains_vector(v):
            continue
        out.add(canonicalize(F, np.vstack([L.rows, v]), form.N))
    return out


def _check(ctx: _Ctx, ident: dict):
    """List of (label, passed, detail) for one identity entry."""
    sp, kind = ctx.spaces, ident["kind"]
    out = []
    if kind == "singular":
        for t in ident["targets"]:
            out.append((f"{t} is totally singular", _singular(ctx, sp[t]), ""))
    elif kind == "rational":
        for t in ident["targets"]:
            out.append((f"{t} is F0-rational", bool(ctx.sub[sp[t].rows].all()), ""))
    elif kind == "irrational":
        for t in ident["targets"]:
            ok = not ctx.sub[sp[t].rows].all()
            out.append((f"{t} is not F0-rational", ok, ""))
    elif kind == "opposite":
        a, b = ident["pair"]
        m = ctx.form.polar(sp[a].rows[:, None, :], sp[b].rows[None, :, :])
        ok = m.shape == (2, 2) and int(ctx.F.sub[ctx.F.mul[m[0, 0], m[1, 1]],
                                                  ctx.F.mul[m[0, 1], m[1, 0]]]) != 0
        out.append((f"{a} and {b} are opposite", ok, ""))
    elif kind == "contains":
        c, m = ident["container"], ident["member"]
        out.append((f"{m} lies in {c}", sp[c].contains(sp[m]), ""))
    elif kind == "on_line":
        t, (a, b) = ident["target"], ident["between"]
        ok, why = _on_line(ctx, sp[t], sp[a], sp[b])
        out.append((f"{t} in <{a},{b}>", ok, why))
    elif kind == "rational_point":
        for t in ident["targets"]:
            c = _rational_points(ctx, sp[t])
            out.append((f"{t} contains an F0-rational point", c > 0, f"{c} rational points"))
    elif kind == "rational_point_count":
        t, want = ident["target"], int(ident["count"])
        c = _rational_points(ctx, sp[t])
        out.append((f"{t} has exactly {want} F0-rational points", c == want, f"found {c}"))
    elif kind == "planes_through":
        t, names = ident["target"], ident["planes"]
        got = _planes_through(ctx, sp[t])
        want = {sp[x] for x in names}
        out.append((f"the singular planes through {t} are {', '.join(names)}", got == want,
                    f"{len(got)} planes"))
    else:
        raise ValueError(f"unknown identity kind {kind!r}")
    return out


def verify_fixture(bundle: Bundle | str, field: str | None = None, workers: int = 1) -> dict:
    """Check every identity of a bundle; the report names each failing one."""
    if isinstance(bundle, str):
        bundle = load_fixture(bundle)
    ctx = _context(bundle, field)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda i: _check(ctx, i), bundle.identities))
    else:
        parts = [_check(ctx, i) for i in bundle.identities]
    rows = [{"identity": lab, "pass": bool(ok), **({"detail": d} if d else {})}
            for part in parts for lab, ok, d in part]
    failed = [r["identity"] for r in rows if not r["pass"]]
    return {"fixture": bundle.name, "field": ctx.F.descriptor, "modulus": list(ctx.F.modulus),
            "space": ctx.form.descriptor, "checks": rows, "failed": failed,
            "passed": not failed}
