"""Command-line front end.

Exit status: 0 when the requested claim is verified, 2 when it is refuted,
1 for usage, descriptor, budget, cache and fixture errors.
"""
from __future__ import annotations

import argparse
import hashlib
import inspect
import json
import sys
import time

import numpy as np

from . import __version__
from .cache import CacheError, cached_geometry
from .fixtures import FIXTURES, FixtureMismatch, load_fixture, verify_fixture
from .gf import parse_field
from .grassmann import Geometry, span_closure
from .gensets import (
    HypothesisError,
    apartment,
    genset_k,
    genset_singular,
    hermitian_genset,
    orth_q2_genset,
    polar_genset,
    random_triple,
)
from .linalg import canonicalize
from .polar import BudgetExceeded, Budget
from .scenarios import SCENARIOS, rank_certificate, run_scenario
from .subfield import SubfieldContext, cor54_adjoin, gset_predicate, omega_obstruction

REPORT_SCHEMA = 1
EXIT_OK, EXIT_ERROR, EXIT_REFUTED = 0, 1, 2


class UsageError(ValueError):
    pass


# -- helpers -------------------------------------------------------------------

def _field_hash(F) -> str:
    return hashlib.sha256(f"{F.descriptor}:{list(F.modulus)}".encode()).hexdigest()[:12]


def _model_info(geom: Geometry) -> dict:
    m = geom.model
    return dict(m.invariants(), modulus_hash=_field_hash(m.field), k=geom.k,
                points=geom.npoints, lines=geom.nlines, line_size=geom.line_size)


def _geometry(args, k: int | None = None) -> Geometry:
    k = args.k if k is None else k
    if k is None:
        raise UsageError("--k is required")
    geom, source = cached_geometry(args.space, k, root=args.cache_dir, budget=args.budget,
                                   use_cache=not args.no_cache)
    args._source = source
    return geom


def _sub_degree(F, spec: str) -> int:
    """Degree of the subfield named 'F<q0>' inside F."""
    sub = parse_field(spec)
    if sub.p != F.p or F.e % sub.e or sub.e == F.e:
        raise UsageError(f"{spec} is not a proper subfield of {F.descriptor}")
    return sub.e


def _rows_ids(geom: Geometry, mats) -> np.ndarray:
    F, N = geom.model.field, geom.model.N
    out = []
    for rows in mats:
        S = canonicalize(F, np.array([[F.parse_element(t) for t in r] for r in rows]), N)
        if S.rank != geom.k:
            raise UsageError(f"seed element of rank {S.rank} in the {geom.k}-Grassmannian")
        i = int(geom.model.lookup(geom.k, S.rows[None])[0])
        if i < 0:
            raise UsageError("seed element is not a singular subspace")
        out.append(i)
    return np.array(out, dtype=np.int64)


def _construction(geom: Geometry, name: str, seed: int):
    model, k = geom.model, geom.k
    F, n, d = model.field, model.n, model.d
    if name == "auto":
        if k == 1:
            name = "polar"
        elif k == n:
            name = "apartment"
        elif model.hermitian:
            name = "hermitian"
        elif k == 2 and n >= 3 and not (n == 3 and d == 0) and d <= 2:
            name = "orth"
        else:
            name = "hyperplane"
    if name == "polar":
        return polar_genset(model)
    if name == "apartment":
        return apartment(model)
    if name == "hermitian":
        if not model.hermitian:
            raise UsageError("the hermitian construction needs a Hermitian space")
        return hermitian_genset(int(round(F.q ** 0.5)), n, d, k, model=model, seed=seed)
    if name == "orth":
        return orth_q2_genset(F.q, n, d, model=model, seed=seed)
    rng = np.random.default_rng(seed)
    if name == "hyperplane":
        H, p0, l0 = random_triple(model, rng)
        return genset_k(model, H, p0, k, l0=l0 if k == 2 else None)
    if name == "singular":
        H, p0, _ = random_triple(model, rng, kind="singular")
        return genset_singular(model, H.seed, p0, k, allow_top=(k == n - 1))
    raise UsageError(f"unknown construction {name!r}")


def _seed(geom: Geometry, spec: str, args) -> tuple[np.ndarray, dict]:
    kind, _, rest = spec.partition(":")
    if kind == "rational":
        ctx = SubfieldContext(geom, _sub_degree(geom.model.field, rest or f"F{geom.model.field.p}"))
        return ctx.rational_ids(), {"seed": spec}
    if kind == "ids":
        ids = np.array([int(x) for x in rest.split(",") if x.strip()], dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= geom.npoints):
            raise UsageError("seed ID out of range")
        return ids, {"seed": spec}
    if kind == "file":
        with open(rest) as fh:
            return _rows_ids(geom, json.load(fh)), {"seed": spec}
    if kind == "fixture":
        name, _, keys = rest.partition(":")
        keys, _, field = keys.partition("@")
        b = load_fixture(name)
        field = field or b.default_field
        if field != geom.model.field.descriptor or list(geom.model.field.modulus) != b.fields.get(field):
            raise FixtureMismatch(f"fixture {name} over {field} does not match "
                                  f"{geom.model.field.descriptor}")
        return _rows_ids(geom, [b.subspaces[x] for x in keys.split(",")]), {"seed": spec}
    if kind in ("construction", "apartment", "polar", "hermitian", "orth", "hyperplane",
                "singular"):
        gs = _construction(geom, (rest or "auto") if kind == "construction" else kind, args.rng_seed)
        return gs.ids, {"seed": spec, "tags": gs.tag_counts()}
    raise UsageError(f"bad seed spec {spec!r}")


# -- commands ------------------------------------------------------------------

def cmd_build(args) -> tuple[dict, int]:
    geom = _geometry(args)
    m = geom.model
    levels = {str(k): len(m.level(k)) for k in sorted(m._levels) if k > 0}
    return {"model": _model_info(geom), "levels": levels,
            "timings": {"source": args._source}}, EXIT_OK


def cmd_span(args) -> tuple[dict, int]:
    geom = _geometry(args)
    ids, info = _seed(geom, args.seed_spec, args)
    res = span_closure(geom, ids, workers=args.workers, backend=args.backend)
    out = {"model": _model_info(geom), **info, **res.to_json()}
    code = EXIT_OK
    if args.expect == "all":
        code = EXIT_OK if res.generated_all else EXIT_REFUTED
    elif args.expect == "proper":
        code = EXIT_REFUTED if res.generated_all else EXIT_OK
    return out, code


def cmd_genset(args) -> tuple[dict, int]:
    geom = _geometry(args)
    gs = _construction(geom, args.construction, args.rng_seed)
    out = {"model": _model_info(geom), "genset": gs.to_json()}
    if args.no_verify:
        return out, EXIT_OK
    res = span_closure(geom, gs.ids, backend=args.backend)
    out["closure"] = res.to_json()
    ok = res.generated_all and ("target" not in gs.meta or gs.size <= gs.meta["target"])
    return out, EXIT_OK if ok else EXIT_REFUTED


def cmd_verify(args) -> tuple[dict, int]:
    fn = SCENARIOS[args.scenario]
    accepted = inspect.signature(fn).parameters
    params = {key: getattr(args, key) for key in ("n", "q", "q0", "d", "k", "space", "trials")
              if getattr(args, key, None) is not None and key in accepted}
    if "seed" in accepted:
        params["seed"] = args.rng_seed
    if "budget" in accepted:
        params["budget"] = args.budget
    missing = [p for p, v in accepted.items() if v.default is v.empty and p not in params]
    if missing:
        raise UsageError(f"scenario {args.scenario} needs --{missing[0]}")
    rep = run_scenario(args.scenario, **params)
    return rep, EXIT_OK if rep["passed"] else EXIT_REFUTED


def cmd_rank(args) -> tuple[dict, int]:
    cert = rank_certificate(args.space, args.k, budget=args.budget,
                            char2_plucker=args.char2_plucker)
    out = cert.to_json()
    if not cert.consistent() or cert.upper_generates is False:
        return out, EXIT_REFUTED
    return out, EXIT_OK


def cmd_subfield(args) -> tuple[dict, int]:
    geom = _geometry(args, k=2 if args.k is None else args.k)
    F = geom.model.field
    ctx = SubfieldContext(geom, _sub_degree(F, args.sub or f"F{F.p}"))
    out = {"model": _model_info(geom), "subfield": f"F{ctx.q0}",
           "rational_points": int(ctx.rational_points.sum()),
           "rational_elements": int(ctx.rational.sum())}
    code = EXIT_OK
    if args.check == "omega":
        rep = omega_obstruction(ctx, strict=False)
        out["omega"] = rep.to_json()
        code = EXIT_OK if rep.ok else EXIT_REFUTED
    elif args.check == "gset":
        ok, info = gset_predicate(ctx, ctx.rational_ids(), witness=True)
        out["gset"] = {"holds": ok, **info}
        if args.expect is not None:
            code = EXIT_OK if ok == (args.expect == "all") else EXIT_REFUTED
    elif args.check == "adjoin":
        N = geom.model.N
        e = np.eye(N, dtype=np.int64)
        adj = cor54_adjoin(ctx, e[[0, 4]] if N >= 6 else e[[0, 2]], e[[1, 5]] if N >= 6 else e[[1, 3]])
        res = span_closure(geom, np.append(ctx.rational_ids(), adj.id))
        out["adjoin"] = {**adj.to_json(F), **res.to_json()}
        if args.expect is not None:
            code = EXIT_OK if res.generated_all == (args.expect == "all") else EXIT_REFUTED
    return out, code


def cmd_fixture(args) -> tuple[dict, int]:
    rep = verify_fixture(load_fixture(args.name), args.field, workers=args.workers)
    return rep, EXIT_OK if rep["passed"] else EXIT_REFUTED


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polargrass", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", default="default",
                        help="default, large or unlimited (caps on enumeration sizes)")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--cache-dir", help="cache directory (default $POLARGRASS_CACHE)")
    common.add_argument("--no-cache", action="store_true", help="neither read nor write the cache")
    common.add_argument("--backend", choices=["compiled", "python"], default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--rng-seed", type=int, default=0, help="RNG seed for randomized choices")
    common.add_argument("--no-timings", action="store_true", help="omit wall-clock timings")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    b = add("build", "enumerate a polar space and one of its Grassmannians")
    b.add_argument("--space", required=True)
    b.add_argument("--k", type=int, required=True)

    s = add("span", "span closure of a seed set")
    s.add_argument("--space", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--seed", dest="seed_spec", default="construction",
                   help="rational:F<q0> | construction[:name] | apartment | ids:1,2 | "
                        "file:PATH | fixture:NAME:key1,key2[@F<q>]")
    s.add_argument("--expect", choices=["all", "proper"])

    g = add("genset", "build a generating set and verify it by closure")
    g.add_argument("--space", required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--construction", default="auto",
                   choices=["auto", "polar", "apartment", "hermitian", "orth", "hyperplane",
                            "singular"])
    g.add_argument("--no-verify", action="store_true")

    v = add("verify", "run a named verification scenario")
    v.add_argument("scenario", choices=sorted(SCENARIOS))
    for flag in ("n", "q", "q0", "d", "k", "trials"):
        v.add_argument(f"--{flag}", type=int)
    v.add_argument("--space")

    r = add("rank", "upper and lower bounds for the generating rank")
    r.add_argument("--space", required=True)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--char2-plucker", action="store_true",
                   help="also compute the Plücker rank for quadrics in characteristic 2")

    f = add("subfield", "rationality analysis over a subfield")
    f.add_argument("--space", required=True)
    f.add_argument("--k", type=int)
    f.add_argument("--sub", help="subfield as F<q0> (default: the prime field)")
    f.add_argument("--check", choices=["gset", "omega", "adjoin"], default="gset")
    f.add_argument("--expect", choices=["all", "proper"])

    x = add("fixture", "verify a coordinate fixture")
    x.add_argument("name", choices=list(FIXTURES))
    x.add_argument("--field", help="field to read the bundle in (bundles may list several)")
    return p


COMMANDS = {"build": cmd_build, "span": cmd_span, "genset": cmd_genset, "verify": cmd_verify,
            "rank": cmd_rank, "subfield": cmd_subfield, "fixture": cmd_fixture}


def _fail(kind: str, msg: str) -> int:
    print(f"polargrass: error [{kind}]: {msg}", file=sys.stderr)
    return EXIT_ERROR


def run(argv=None) -> tuple[int, dict | None]:
    """Parse and execute; returns (exit code, report)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_OK if exc.code == 0 else EXIT_ERROR), None
    try:
        Budget.named(args.budget)
    except ValueError as exc:
        return _fail("usage", str(exc)), None
    t0 = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except BudgetExceeded as exc:
        return _fail("budget", str(exc)), None
    except FixtureMismatch as exc:
        return _fail("fixture-mismatch", str(exc)), None
    except CacheError as exc:
        return _fail("cache", str(exc)), None
    except HypothesisError as exc:
        return _fail("hypothesis", str(exc)), None
    except UsageError as exc:
        return _fail("usage", str(exc)), None
    except ValueError as exc:
        kind = "descriptor" if "descriptor" in str(exc) or "prime power" in str(exc) else "usage"
        return _fail(kind, str(exc)), None
    timings = report.pop("timings", {})
    echo = {k: v for k, v in sorted(vars(args).items())
            if not k.startswith("_") and k not in ("out", "cache_dir", "no_timings")}
    full = {"schema": REPORT_SCHEMA, "tool": "polargrass", "version": __version__,
            "command": echo, "exit_code": code, **report}
    if not args.no_timings:
        timings["wall"] = round(time.perf_counter() - t0, 3)
        full["timings"] = timings
    text = json.dumps(full, indent=1, ensure_ascii=False, default=_jsonable)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code, full


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
