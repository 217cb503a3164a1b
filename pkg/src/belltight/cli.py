"""Command-line front end: ``belltight <command> [options]``.

Exit codes: 0 success, 2 a reproduced row or certificate failed, 3 a row or
computation was skipped because of the enumeration budget, 1 usage or input
errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical import (
    DEFAULT_BUDGET,
    EnumerationBudgetError,
    classical_bound_exact,
    classical_bound_tetra,
)
from .core import Scenario, ScenarioError, as_alpha, load_inequality, settings_from_dim
from .geometry import FIG1_ALPHA1, FIG1_ALPHA2, cross_section
from .quantum import QuantumOptions, quantum_value
from .reproduce import family, reproduce
from .tables import TABLE_IDS, family_generators
from .tighten import (
    DegenerateNormalizationError,
    TightenOptions,
    certify_facet,
    classical_value,
    ratio,
    tighten,
)

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_SKIP = 0, 1, 2, 3


# ---------------------------------------------------------------- output

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if not np.isfinite(x):
            return None if np.isnan(x) else ("inf" if x > 0 else "-inf")
        return x
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _to_csv(obj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(obj, list) and obj and isinstance(obj[0], dict):
        keys = list(obj[0])
        w.writerow(keys)
        for row in obj:
            w.writerow([json.dumps(row[k]) if isinstance(row[k], (list, dict)) else row[k]
                        for k in keys])
    elif isinstance(obj, dict):
        w.writerow(["key", "value"])
        for k, v in obj.items():
            w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
    else:
        w.writerow([obj])
    return buf.getvalue()


def emit(args, obj, csv_rows=None) -> None:
    obj = _plain(obj)
    if args.format == "csv":
        text = _to_csv(_plain(csv_rows) if csv_rows is not None else obj)
    else:
        text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- inputs

def _parse_vector(text: str) -> np.ndarray:
    parts = [p for p in text.replace("(", "").replace(")", "").replace(",", " ").split() if p]
    try:
        vals = [int(p) for p in parts]
        return np.array(vals, dtype=np.int64)
    except ValueError:
        return np.array([float(p) for p in parts], dtype=float)


def read_inequality(args) -> tuple[Scenario, np.ndarray]:
    if getattr(args, "input", None):
        sc, coeffs = load_inequality(args.input)
        if args.n_parties is not None:
            sc = Scenario(args.n_parties, sc.n_settings)
        return sc, coeffs.flatten()
    if getattr(args, "alpha", None) is None or args.n_parties is None:
        raise ScenarioError("give --input FILE, or --alpha and -N")
    alpha = as_alpha(_parse_vector(args.alpha))
    return Scenario(args.n_parties, settings_from_dim(alpha.shape[0])), alpha


def threads_from(args) -> int:
    env = os.environ.get("BELLTIGHT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, args.threads)


def quantum_opts(args) -> QuantumOptions:
    return QuantumOptions(n_grid=args.n_grid, n_starts=args.n_starts, seed=args.seed)


# ---------------------------------------------------------------- commands

def cmd_bound(args) -> int:
    sc, alpha = read_inequality(args)
    method = args.method
    if method == "auto":
        try:
            res = classical_bound_exact(alpha, sc, budget=args.budget, threads=threads_from(args))
        except EnumerationBudgetError:
            res = classical_bound_tetra(alpha, sc)
    elif method == "exact":
        try:
            res = classical_bound_exact(alpha, sc, budget=args.budget, threads=threads_from(args))
        except EnumerationBudgetError as exc:
            print(f"skipped: {exc}", file=sys.stderr)
            return EXIT_SKIP
    else:
        res = classical_bound_tetra(alpha, sc)
    out = {"beta_c": res.beta_c, "method": res.method, "n_minimizers": res.n_minimizers}
    if res.degenerate:
        out["degenerate"] = True
    if args.dump_vertices:
        D = res.design
        with open(args.dump_vertices, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"d{i}" for i in range(sc.design_dim)])
            for row in D:
                w.writerow([_plain(v) for v in row])
    emit(args, out)
    return EXIT_OK


def cmd_qvalue(args) -> int:
    sc, alpha = read_inequality(args)
    sol = quantum_value(alpha, sc, quantum_opts(args))
    emit(args, {"beta_q": sol.beta_q, "theta": sol.theta_star, "gap": sol.spectral_gap,
                "degenerate": sol.degenerate})
    return EXIT_OK


def cmd_ratio(args) -> int:
    sc, alpha = read_inequality(args)
    beta_c, method = classical_value(alpha, sc, args.budget)
    if not beta_c < 0:
        raise DegenerateNormalizationError(f"beta_c = {beta_c} is not negative; ratio undefined")
    delta, beta_q, _ = ratio(alpha, sc, quantum_opts(args), beta_c=beta_c)
    emit(args, {"delta": delta, "beta_q": beta_q, "beta_c": beta_c, "method": method})
    return EXIT_OK


def cmd_certify(args) -> int:
    sc, alpha = read_inequality(args)
    cert = certify_facet(alpha, sc, budget=args.budget)
    emit(args, cert.as_dict())
    if not cert.exhaustive:
        return EXIT_SKIP
    return EXIT_OK if cert.is_facet else EXIT_FAIL


def cmd_tighten(args) -> int:
    sc, alpha = read_inequality(args)
    free = None
    if args.free:
        free = [bool(int(x)) for x in _parse_vector(args.free)]
    offset = None if not args.origin else _parse_vector(args.origin).astype(float)
    opts = TightenOptions(step_size=args.step, max_outer=args.max_outer, seed=args.seed,
                          noise_sigma=args.noise_sigma, free_mask=free, origin_offset=offset,
                          quantum=QuantumOptions(n_grid=args.n_grid, n_starts=min(args.n_starts, 4),
                                                 seed=args.seed))
    res = tighten(alpha, sc, opts)
    report = {
        "scenario": {"n_parties": sc.n_parties, "n_settings": sc.n_settings},
        "status": res.status,
        "alpha_final": res.alpha_final,
        "delta": res.delta,
        "beta_q": res.beta_q,
        "beta_c": res.beta_c,
        "theta": res.theta,
        "n_steps": res.n_steps,
        "n_noise_steps": res.n_noise_steps,
        "certificate": None if res.certificate is None else res.certificate.as_dict(),
        "alpha_rational": None if res.certificate is None else res.certificate.alpha_rational,
        "trajectory": [
            {"iteration": p.iteration, "alpha": p.alpha, "beta_c": p.beta_c, "beta_q": p.beta_q,
             "delta": p.delta, "rank": p.rank} for p in res.trajectory
        ],
    }
    emit(args, report, csv_rows=report["trajectory"])
    ok = res.certificate is not None and res.certificate.is_facet
    return EXIT_OK if ok else EXIT_FAIL


def cmd_section(args) -> int:
    if args.preset == "fig1":
        sc, a1, a2 = Scenario(2, 2), FIG1_ALPHA1, FIG1_ALPHA2
    elif args.preset in ("m2", "m3"):
        if args.n_parties is None:
            raise ScenarioError("the family presets need -N")
        g1, g2 = family_generators(args.preset)
        sc = Scenario(args.n_parties, 2 if args.preset == "m2" else 3)
        a1 = np.array(g1, float) / (2 * args.n_parties)
        a2 = np.array(g2, float) / (2 * args.n_parties)
    else:
        if args.alpha1 is None or args.alpha2 is None or args.n_parties is None:
            raise ScenarioError("give --alpha1, --alpha2 and -N, or a --preset")
        a1 = np.asarray(_parse_vector(args.alpha1), float)
        a2 = np.asarray(_parse_vector(args.alpha2), float)
        sc = Scenario(args.n_parties, settings_from_dim(a1.shape[0]))
    curve = cross_section(a1, a2, sc, n_phi=args.n_phi,
                          quantum_opts=QuantumOptions(n_grid=args.n_grid, n_starts=0, seed=args.seed),
                          budget=args.budget)
    out = args.out or "section.csv"
    curve.write_csv(out)
    vpath = args.vertices_out or str(Path(out).with_suffix("")) + ".vertices.csv"
    curve.write_vertices_csv(vpath)
    print(json.dumps({"curve": out, "vertices": vpath, "n_phi": len(curve.phi),
                      "bound_method": curve.bound_method,
                      "max_ratio": float(np.max(np.where(curve.beta_c < 0,
                                                         curve.beta_q / curve.beta_c, -np.inf)))},
                     sort_keys=True))
    return EXIT_OK


def cmd_family(args) -> int:
    members = family(args.kind, args.n_parties, budget=args.budget,
                     quantum_opts=quantum_opts(args))
    rows = [m.as_dict() for m in members]
    best = max(members, key=lambda m: m.delta)
    emit(args, {"kind": args.kind, "n_parties": args.n_parties, "members": rows,
                "argmax_n": best.n, "max_delta": best.delta},
         csv_rows=[{"n": r["n"], "alpha": r["alpha"], "beta_c": r["beta_c"], "beta_q": r["beta_q"],
                    "delta": r["delta"],
                    "is_facet": r["certificate"]["is_facet"] if r["certificate"] else None}
                   for r in rows])
    ok = all(m.certificate is not None and m.certificate.is_facet for m in members)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_reproduce(args) -> int:
    ids = TABLE_IDS if args.table == "all" else (args.table,)
    reports = [reproduce(t, budget=args.budget, quantum_opts=quantum_opts(args),
                         certify=not args.no_certify, threads=threads_from(args)) for t in ids]
    dicts = [r.as_dict() for r in reports]
    if not args.timing:
        for d in dicts:
            for row in d["rows"]:
                row.pop("seconds", None)
    rows = [row for d in dicts for row in d["rows"]]
    emit(args, dicts if len(dicts) > 1 else dicts[0], csv_rows=rows)
    for r in reports:
        for row in r.rows:
            flag = "skip" if row.skipped else ("pass" if row.passed else "FAIL")
            print(f"{flag} {r.table_id} row {row.row}: N={row.n_parties} beta_c={row.beta_c} "
                  f"delta={row.delta:.6f}" + (f" ({row.note})" if row.note else ""),
                  file=sys.stderr)
    if any(r.n_failed for r in reports):
        return EXIT_FAIL
    if any(r.n_skipped for r in reports):
        return EXIT_SKIP
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=1,
                        help="enumeration worker threads (BELLTIGHT_THREADS overrides)")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                        help="maximum number of compositions to enumerate")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv")
    common.set_defaults(format="json")
    common.add_argument("--out", help="write structured output here instead of stdout")
    common.add_argument("--n-grid", type=int, default=5, help="angle grid points per free angle")
    common.add_argument("--n-starts", type=int, default=32, help="random angle starts")

    ineq = argparse.ArgumentParser(add_help=False)
    ineq.add_argument("--input", help="inequality JSON file")
    ineq.add_argument("--alpha", help="flat coefficient vector, e.g. '0,0,1,1,-1'")
    ineq.add_argument("-N", "--n-parties", type=int, help="number of parties")

    p = argparse.ArgumentParser(prog="belltight", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"belltight {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bound", parents=[common, ineq], help="classical bound")
    s.add_argument("--method", choices=("auto", "exact", "tetra"), default="auto")
    s.add_argument("--dump-vertices", help="CSV file for minimizer design vectors")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("qvalue", parents=[common, ineq], help="quantum value")
    s.set_defaults(func=cmd_qvalue)

    s = sub.add_parser("ratio", parents=[common, ineq], help="quantum-to-classical ratio")
    s.set_defaults(func=cmd_ratio)

    s = sub.add_parser("certify", parents=[common, ineq], help="facet certificate")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("tighten", parents=[common, ineq], help="projected ratio ascent")
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--max-outer", type=int, default=500)
    s.add_argument("--noise-sigma", type=float, default=0.01)
    s.add_argument("--free", help="0/1 mask of coordinates allowed to move")
    s.add_argument("--origin", help="design-space origin offset")
    s.set_defaults(func=cmd_tighten)

    s = sub.add_parser("section", parents=[common], help="2-D primal/dual cross-section")
    s.add_argument("--alpha1")
    s.add_argument("--alpha2")
    s.add_argument("-N", "--n-parties", type=int)
    s.add_argument("--preset", choices=("fig1", "m2", "m3"))
    s.add_argument("--n-phi", type=int, default=720)
    s.add_argument("--vertices-out", help="CSV of projected vertices and hull order")
    s.set_defaults(func=cmd_section)

    s = sub.add_parser("family", parents=[common], help="certify a coefficient family")
    s.add_argument("--kind", choices=("m2", "m3"), required=True)
    s.add_argument("-N", "--n-parties", type=int, required=True)
    s.set_defaults(func=cmd_family)

    s = sub.add_parser("reproduce", parents=[common], help="recompute an embedded table")
    s.add_argument("table", choices=TABLE_IDS + ("all",))
    s.add_argument("--no-certify", action="store_true", help="skip facet certification")
    s.add_argument("--timing", action="store_true", help="include per-row timings")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, DegenerateNormalizationError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
