"""Batch command-line front end.

Subcommands compute, verify and export the desk-scale results: dimension
tables, homology reports for the filtration layers, cells, coinvariants and
cobar complexes, the verification suites, and the solved twisting data.
Outputs are deterministic; expensive results are cached content-addressed
under the cache directory with embedded checksums.

Exit codes: 0 pass, 1 verification failure, 2 resource cap, 3 usage error.
Flags have OPKZ_-prefixed environment variable equivalents.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .exact_linalg import ResourceCapError, homology
from . import barratt_eccles as be
from . import complete_graph as cg
from . import operad_core as oc
from . import cobar as cb
from . import twisting as tw
from . import report


def _env_default(name, fallback=None):
    return os.environ.get("OPKZ_" + name, fallback)


def build_parser():
    p = argparse.ArgumentParser(
        prog="opkz",
        description="exact chain-level computations for the Barratt-Eccles "
                    "operad, its little-cubes filtration and cobar duals")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=int(_env_default("N", "2")))
    common.add_argument("--arity", type=int,
                        default=int(_env_default("ARITY", "3")))
    common.add_argument("--degree-max", type=int,
                        default=_maybe_int(_env_default("DEGREE_MAX")))
    common.add_argument("--ring", default=_env_default("RING", "Z"),
                        help="Z, F2, F3 or Fp:<p>")
    common.add_argument("--out", choices=("json", "csv", "text"),
                        default=_env_default("OUT", "text"))
    common.add_argument("--out-dir", default=_env_default("OUT_DIR"),
                        help="write the delimited output and a rendered "
                             "figure into this directory")
    common.add_argument("--cache-dir", default=_env_default("CACHE_DIR"))
    common.add_argument("--seed", type=int,
                        default=int(_env_default("SEED", "0")))
    common.add_argument("--jobs", type=int,
                        default=int(_env_default("JOBS", "1")))
    common.add_argument("--mem-cap", type=int,
                        default=int(_env_default("MEM_CAP", "400")),
                        help="approximate cap in MB on enumerated bases")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("dims", parents=[common],
                   help="component ranks per (n, arity, degree)")
    hp = sub.add_parser("homology", parents=[common],
                        help="homology tables for E_n(r), cells, "
                             "coinvariants and cobar complexes")
    hp.add_argument("--target", choices=("en", "cells", "coinv", "cobar"),
                    default="en")
    hp.add_argument("--chi", type=int, default=None,
                    help="character twist for coinvariants (default n mod 2)")
    cp = sub.add_parser("check", parents=[common],
                        help="verification suites with counterexample dump")
    cp.add_argument("--suite", required=True,
                    choices=("axioms", "kgraph", "cobar", "koszul",
                             "latching", "sphere"))
    cp.add_argument("--m", type=int, default=2, help="cup power for sphere")
    sub.add_parser("omega", parents=[common],
                   help="solve and export the twisting elements")
    sub.add_parser("phi", parents=[common],
                   help="build and export the cobar-to-constant morphisms")
    sub.add_parser("psi", parents=[common],
                   help="solve and export the cell-constrained lifting")
    return p


def _maybe_int(v):
    return int(v) if v not in (None, "") else None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 3 if e.code not in (0, None) else 0
    be.DEFAULT_BASIS_CAP = max(1000, args.mem_cap * 1000)
    try:
        return _dispatch(args)
    except ResourceCapError as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return 2
    except (AssertionError, ValueError) as e:
        print(f"verification failure: {e}", file=sys.stderr)
        return 1


def _dispatch(args):
    if args.command == "dims":
        rows = _cached(args, "dims", _dims_rows)
        _emit(args, rows, ["n", "arity", "degree", "rank"], "dims",
              report.render_dims_figure)
        return 0
    if args.command == "homology":
        rows = _cached(args, f"homology-{args.target}", _homology_rows)
        _emit(args, rows, ["object", "degree", "betti", "torsion"],
              f"homology_{args.target}", report.render_homology_figure)
        return 0
    if args.command == "check":
        ok, rows = _run_suite(args)
        _emit(args, rows, ["check", "status", "detail"], f"check_{args.suite}",
              None)
        return 0 if ok else 1
    if args.command == "omega":
        fam = tw.solve_omega(args.n, args.arity)
        payload = fam.to_json_obj()
        payload["manifest"]["version"] = __version__
        _emit_payload(args, payload, "omega")
        return 0
    if args.command == "phi":
        fam = tw.solve_omega(args.n, args.arity)
        phi = tw.build_phi(fam, args.n, args.arity)
        payload = phi.to_json_obj()
        payload["manifest"]["version"] = __version__
        _emit_payload(args, payload, "phi")
        return 0
    if args.command == "psi":
        fam = tw.solve_omega(args.n, args.arity)
        psi = tw.lift_psi(fam, args.n, args.arity)
        payload = psi.to_json_obj()
        payload["manifest"]["version"] = __version__
        _emit_payload(args, payload, "psi")
        return 0
    raise ValueError(f"unknown command {args.command}")


# ---------------------------------------------------------------------------
# command bodies
# ---------------------------------------------------------------------------

def _dims_rows(args):
    rows = []
    for r in range(1, args.arity + 1):
        if r == 1:
            rows.append({"n": args.n, "arity": 1, "degree": 0, "rank": 1})
            continue
        basis = be.enumerate_en(args.n, r)
        for d, simps in sorted(basis.items()):
            if args.degree_max is not None and d > args.degree_max:
                continue
            rows.append({"n": args.n, "arity": r, "degree": d,
                         "rank": len(simps)})
    return rows


def _homology_rows(args):
    rows = []
    if args.target == "en":
        for r in range(2, args.arity + 1):
            rep = homology(be.en_chain_complex(args.n, r), args.ring)
            for d, (b, tor) in sorted(rep.groups.items()):
                rows.append({"object": f"E_{args.n}({r})", "degree": d,
                             "betti": b, "torsion": tor})
    elif args.target == "cells":
        ks = cg.enumerate_kn(args.n, args.arity)
        work = [(args.n, k.r, k.mu, k.sigma, args.ring) for k in ks]
        if args.jobs > 1:
            # independent cells reduce in parallel; imap keeps the
            # deterministic order, so output is identical for any job count
            import multiprocessing
            with multiprocessing.Pool(args.jobs) as pool:
                results = list(pool.imap(_cell_homology_worker, work))
        else:
            results = [_cell_homology_worker(w) for w in work]
        for k, groups in zip(ks, results):
            name = f"E(mu={k.mu},sigma={k.sigma})"
            for d, b, tor in groups:
                rows.append({"object": name, "degree": d, "betti": b,
                             "torsion": list(tor)})
    elif args.target == "coinv":
        chi = args.chi if args.chi is not None else args.n % 2
        C = tw.coinvariants(args.n, args.arity, chi)
        rep = homology(C.chain_complex(), args.ring)
        for d, (b, tor) in sorted(rep.groups.items()):
            rows.append({"object": f"E_{args.n}({args.arity})_Sigma chi={chi}",
                         "degree": d, "betti": b, "torsion": tor})
    elif args.target == "cobar":
        for r in range(2, args.arity + 1):
            cx = cb.en_cobar(args.n, r, args.arity)
            rep = homology(cx.chain_complex("total"), args.ring)
            for d, (b, tor) in sorted(rep.groups.items()):
                rows.append({"object": f"Bc(D_{args.n})({r})", "degree": d,
                             "betti": b, "torsion": tor})
    return rows


def _cell_homology_worker(item):
    n, r, mu, sigma, ring = item
    k = cg.WeightSystem(r, tuple(mu), tuple(sigma))
    rep = homology(cg.build_cell("E", n, k).complex, ring)
    return [(d, b, tuple(tor)) for d, (b, tor) in sorted(rep.groups.items())]


def _run_suite(args):
    import random
    rng = random.Random(args.seed)
    rows = []
    ok = True

    def record(name, good, detail=""):
        nonlocal ok
        ok = ok and bool(good)
        rows.append({"check": name, "status": "pass" if good else "FAIL",
                     "detail": detail})

    if args.suite == "axioms":
        P = be.en_truncation(args.n, min(args.arity, 3))
        fails = oc.check_truncation_axioms(P, rng, samples=300)
        record("operad axioms", not fails, f"{len(fails)} failures")
    elif args.suite == "kgraph":
        basis = be.enumerate_en(args.n, args.arity)
        bad = 0
        for _ in range(2000):
            ds = [d for d in basis if basis[d]]
            d = rng.choice(ds)
            s = rng.choice(basis[d])
            ks = cg.kappa(s)
            for face, _sg in be.face_boundary_terms(s):
                if not cg.leq(cg.kappa(face), ks):
                    bad += 1
            w = tuple(rng.sample(range(1, args.arity + 1), args.arity))
            if cg.kappa(tuple(be.perm_mul(w, p) for p in s)) != cg.cg_act(w, ks):
                bad += 1
        record("kappa functoriality", bad == 0, f"{bad} failures")
        union = cg.union_cells(args.n, args.arity)
        full = be.enumerate_en(args.n, args.arity)
        record("cell union", {d: set(v) for d, v in union.items()} ==
               {d: set(v) for d, v in full.items()})
        sample = cg.enumerate_kn(args.n, args.arity)
        if len(sample) > 12:
            sample = rng.sample(sample, 12)
        acyclic = all(homology(cg.build_cell("E", args.n, k).complex,
                               "Z").groups == {0: (1, [])} for k in sample)
        record("cell acyclicity", acyclic)
    elif args.suite == "cobar":
        rep = cb.cobar_sanity(args.n, args.arity)
        record("cobar squares", not rep["squares"], str(rep["squares"][:2]))
        record("twist routes agree", not rep["routes"], str(rep["routes"][:1]))
    elif args.suite == "koszul":
        rep = cb.koszulness_report(args.n, args.arity)
        for r, info in rep.items():
            record(f"koszulness arity {r}", info["match"],
                   f"betti={info['betti']}")
    elif args.suite == "latching":
        ks = cg.enumerate_kn(args.n, args.arity)
        if len(ks) > 12:
            ks = rng.sample(ks, 12)
        for k in ks:
            good, detail = cg.extended_latching_split_injective(args.n, k)
            record(f"latching {k.mu}/{k.sigma}", good, str(detail))
    elif args.suite == "sphere":
        f, fdeg = be.sphere_action(args.m, args.arity)
        consts = set()
        good = True
        for s in be.enumerate_e_degree(args.arity, fdeg):
            cupv = f(s)
            ch = be.Chain.of(s)
            for _ in range(args.m):
                ch = be.suspension_sigma(ch)
            ev = be.augmentation(ch) if not ch.is_zero() else 0
            if (cupv == 0) != (ev == 0):
                good = False
            elif cupv:
                consts.add(ev * cupv)
        record("sphere action support", good)
        record("sphere action sign", len(consts) <= 1,
               f"global sign set {sorted(consts)}")
    return ok, rows


# ---------------------------------------------------------------------------
# output and cache plumbing
# ---------------------------------------------------------------------------

def _config_key(args, op):
    payload = {k: v for k, v in sorted(vars(args).items())
               if k not in ("out", "out_dir", "cache_dir", "jobs")}
    blob = json.dumps({"op": op, "cfg": payload, "version": __version__},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _cached(args, op, fn):
    if not args.cache_dir:
        return fn(args)
    cdir = Path(args.cache_dir)
    cdir.mkdir(parents=True, exist_ok=True)
    key = _config_key(args, op)
    path = cdir / f"{op}-{key}.json"
    if path.exists():
        blob = json.loads(path.read_text())
        body = json.dumps(blob["payload"], sort_keys=True)
        digest = hashlib.sha256(body.encode()).hexdigest()
        if digest == blob.get("checksum"):
            return blob["payload"]
        path.unlink()  # corrupted cache entry: recompute
    payload = fn(args)
    body = json.dumps(payload, sort_keys=True)
    blob = {"checksum": hashlib.sha256(body.encode()).hexdigest(),
            "version": __version__, "payload": payload}
    path.write_text(json.dumps(blob, sort_keys=True))
    return payload


def _emit(args, rows, columns, stem, figure_fn):
    if args.out == "json":
        text = report.rows_to_json(rows)
    elif args.out == "csv":
        text = report.rows_to_csv(rows, columns)
    else:
        text = report.rows_to_text(rows, columns)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ext = {"json": "json", "csv": "csv", "text": "txt"}[args.out]
        (out / f"{stem}.{ext}").write_text(text)
        if figure_fn is not None and rows:
            fig_rows = rows
            if figure_fn is report.render_homology_figure:
                fig_rows = [r for r in rows
                            if r["object"] == rows[0]["object"]]
            figure_fn(fig_rows, out / f"{stem}.png", stem.replace("_", " "))
    else:
        sys.stdout.write(text)


def _emit_payload(args, payload, stem):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.json").write_text(text)
    else:
        sys.stdout.write(text + "\n")


if __name__ == "__main__":
    sys.exit(main())
