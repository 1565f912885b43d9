"""Command-line entry point: norms, certificates, contents, harnesses.

Reports are JSON (or CSV for gallery tables), deterministic byte for byte:
sorted keys, fixed reduction orders, seeded randomness, no timestamps.
Exit codes: 0 compute/pass, 1 assertion failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import blocks, duality, gallery, hausdorff, propcheck
from .grid import (
    CellSet,
    CubeFamily,
    ExponentPair,
    GridFunction,
    cell_set_from_json,
    grid_function_from_json,
    grid_function_to_json,
)
from .morrey import morrey_norm


def _family(name: str) -> CubeFamily:
    return CubeFamily.DYADIC if name == "dyadic" else CubeFamily.ALL


def _load_function(path: str) -> GridFunction:
    with open(path) as fh:
        return grid_function_from_json(json.load(fh))


def _load_cell_set(path: str) -> CellSet:
    with open(path) as fh:
        return cell_set_from_json(json.load(fh))


def _emit(report: dict, out: str | None, fmt: str = "json") -> None:
    if fmt == "csv":
        rows = report.get("rows", [])
        lines = []
        if rows:
            header = sorted(rows[0].keys())
            lines.append(",".join(header))
            for row in rows:
                lines.append(",".join(str(row[k]) for k in header))
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cube_json(cube) -> dict:
    return {"anchor": list(cube.anchor), "side": cube.side_cells}


def _cmd_norm(args) -> int:
    f = _load_function(args.input)
    pq = ExponentPair(args.p, args.q)
    res = morrey_norm(f, pq, _family(args.family))
    report = {
        "quantity": "morrey_norm",
        "params": {"p": args.p, "q": args.q, "family": args.family},
        "value": res.value,
        "argmax": _cube_json(res.argmax_cube),
        "family": res.family.value,
        "quasi_norm": res.is_quasi,
    }
    _emit(report, args.out)
    return 0


def _cmd_blocknorm(args) -> int:
    f = _load_function(args.input)
    pq = ExponentPair(args.p, args.q)
    try:
        cert = blocks.block_norm(f, pq, args.tol, _family(args.family))
        converged = True
    except blocks.BlockNormError as err:
        cert = err.certificate
        converged = False
    report = {
        "quantity": "block_norm_certificate",
        "params": {"p": args.p, "q": args.q, "tol": args.tol, "family": args.family},
        "upper": cert.upper,
        "lower": cert.lower,
        "gap": cert.gap,
        "converged": converged,
        "witness": grid_function_to_json(cert.witness_g),
        "decomposition": [
            {
                "lambda": lam,
                "cube": _cube_json(block.support_cube),
                "values": [float(v) for v in block.values.ravel()],
            }
            for lam, block in cert.decomposition.terms
        ],
    }
    _emit(report, args.out)
    return 0 if converged else 1


def _cmd_duality(args) -> int:
    f = _load_function(args.input)
    pq = ExponentPair(args.p, args.q)
    ok = True
    if args.check == "associate":
        oracle = duality.morrey_oracle(pq)
        res = duality.associate_norm(f, oracle, args.tol)
        report = {
            "quantity": "associate_norm",
            "params": {"p": args.p, "q": args.q, "tol": args.tol, "check": args.check},
            "lower": res.lower,
            "upper": res.upper,
            "flagged": res.flagged,
        }
    elif args.check == "second-associate":
        oracle = duality.morrey_oracle(pq)
        rep = duality.second_associate_check(f, oracle, args.tol)
        ok = rep.passed
        report = {
            "quantity": "second_associate_check",
            "params": {"p": args.p, "q": args.q, "tol": args.tol, "check": args.check},
            "rho": rep.rho_upper,
            "second": rep.second_upper,
            "relative_deviation": rep.relative_deviation,
            "passed": rep.passed,
            "inconclusive": rep.inconclusive,
        }
    else:  # gap
        assoc = duality.block_associate_norm(f, pq)
        direct = morrey_norm(f, pq).value
        dev = abs(assoc - direct) / max(direct, np.finfo(float).tiny)
        ok = dev <= 1e-10
        report = {
            "quantity": "associate_identity_gap",
            "params": {"p": args.p, "q": args.q, "check": args.check},
            "block_associate": assoc,
            "morrey": direct,
            "relative_deviation": dev,
            "passed": ok,
        }
    _emit(report, args.out)
    return 0 if ok else 1


def _cmd_hausdorff(args) -> int:
    with open(args.set) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "members" in data:
        cells = cell_set_from_json(data)
        if cells.domain.dimension == 1:
            E = hausdorff.IntervalSet.from_cell_set(cells)
            value = hausdorff.content_1d(E, hausdorff.ContentQuery(args.d, args.r))
            exact = True
        else:
            value = hausdorff.content_upper_nd(cells, args.d)
            exact = False
    else:
        E = hausdorff.IntervalSet(data)
        value = hausdorff.content_1d(E, hausdorff.ContentQuery(args.d, args.r))
        exact = True
    report = {
        "quantity": "hausdorff_content",
        "params": {"d": args.d, "r": args.r if np.isfinite(args.r) else "inf"},
        "value": value,
        "exact": exact,
    }
    _emit(report, args.out)
    return 0


def _cmd_axioms(args) -> int:
    pq = ExponentPair(args.p, args.q)
    from .grid import GridDomain

    domain = GridDomain(args.dim, args.cells)
    if args.oracle == "morrey":
        oracle = duality.morrey_oracle(pq)
    else:
        oracle = duality.block_oracle(pq, tol=args.tol)
    rep = propcheck.check_axioms(oracle, domain, trials=args.trials, seed=args.seed)
    report = {
        "quantity": "norm_axiom_suite",
        "params": {
            "oracle": args.oracle,
            "p": args.p,
            "q": args.q,
            "trials": args.trials,
            "seed": args.seed,
            "cells": args.cells,
            "dim": args.dim,
        },
        "passed": rep.passed,
        "inconclusive": rep.inconclusive,
        "indicator_norm_table": sorted(set(rep.indicator_norms)),
        "best_p5_constant": max((c for _, c in rep.p5_constants), default=0.0),
    }
    _emit(report, args.out)
    return 0 if rep.all_passed else 1


def _cmd_fatou(args) -> int:
    f = _load_function(args.input)
    pq = ExponentPair(args.p, args.q)
    rep = propcheck.fatou_harness(pq, f, steps=args.steps, tol=args.tol)
    report = {
        "quantity": "block_norm_monotone_limit",
        "params": {"p": args.p, "q": args.q, "steps": args.steps, "tol": args.tol},
        "steps": [{"k": s.index, "lower": s.lower, "upper": s.upper} for s in rep.steps],
        "limit_lower": rep.limit_lower,
        "limit_upper": rep.limit_upper,
        "monotone": rep.monotone,
        "final_deviation": rep.final_deviation,
        "passed": rep.passed,
    }
    _emit(report, args.out)
    return 0 if rep.passed else 1


def _cmd_gallery(args) -> int:
    ok = True
    if args.case == "p5-failure":
        rows = []
        for J in range(1, args.groups + 1):
            _, rep = gallery.example_p5_failure(args.p, args.q, J, alpha=args.alpha)
            rows.append(
                {
                    "groups": J,
                    "set_integral": rep.set_integral,
                    "norm": rep.norm,
                    "ratio": rep.ratio,
                    "argmax_single_interval": rep.argmax_single_interval,
                }
            )
            ok = ok and rep.argmax_single_interval
        report = {
            "quantity": "set_integral_vs_norm_growth",
            "params": {"p": args.p, "q": args.q, "groups": args.groups, "alpha": args.alpha},
            "rows": rows,
        }
    elif args.case == "non-dense":
        _, rep = gallery.example_non_dense(args.p, args.q, args.k)
        ok = rep.min_tail_norm >= 1.0 - 1e-9
        report = {
            "quantity": "truncation_tail_norms",
            "params": {"p": args.p, "q": args.q, "k": args.k},
            "norm": rep.norm,
            "rows": [{"cutoff": c, "tail_norm": t} for c, t in rep.tails],
            "min_tail_norm": rep.min_tail_norm,
        }
    elif args.case == "functional-seq":
        if args.input:
            f = _step_from_json(args.input)
        else:
            E, _ = gallery.example_non_dense(args.p, args.q, args.k)
            f = gallery.StepFunction1D.from_segments([(a, b, 1.0) for a, b in E])
        seq = gallery.example_functional_sequence(f, args.p, args.q, args.k)
        report = {
            "quantity": "window_integral_sequence",
            "params": {"p": args.p, "q": args.q, "k": args.k},
            "rows": [{"k": i + 1, "integral": v} for i, v in enumerate(seq)],
        }
    else:  # power
        rep = gallery.power_function_norm(args.p, args.q, args.levels)
        ok = all(r.centered for r in rep.rows)
        report = {
            "quantity": "power_function_norm_convergence",
            "params": {"p": args.p, "q": args.q, "levels": args.levels},
            "limit": rep.limit,
            "rows": [
                {
                    "level": r.level,
                    "value": r.value,
                    "relative_error": r.relative_error,
                    "centered": r.centered,
                }
                for r in rep.rows
            ],
        }
    _emit(report, args.out, fmt=args.format)
    return 0 if ok else 1


def _step_from_json(path: str) -> "gallery.StepFunction1D":
    with open(path) as fh:
        data = json.load(fh)
    return gallery.StepFunction1D.from_segments([tuple(seg) for seg in data["segments"]])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="morreylab", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("MORREYLAB_THREADS", "1")),
        help="worker cap (computations are deterministic regardless)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, tol=False):
        sp.add_argument("--p", type=float, required=True)
        sp.add_argument("--q", type=float, required=True)
        sp.add_argument("--out", default=None)
        if tol:
            sp.add_argument("--tol", type=float, default=1e-3)

    sp = sub.add_parser("norm", help="Morrey norm with argmax cube")
    sp.add_argument("--input", required=True)
    sp.add_argument("--family", choices=["all", "dyadic"], default="all")
    common(sp)
    sp.set_defaults(func=_cmd_norm)

    sp = sub.add_parser("blocknorm", help="block norm with two-sided certificate")
    sp.add_argument("--input", required=True)
    sp.add_argument("--family", choices=["all", "dyadic"], default="all")
    common(sp, tol=True)
    sp.set_defaults(func=_cmd_blocknorm)

    sp = sub.add_parser("duality", help="associate-norm identities")
    sp.add_argument("--check", choices=["associate", "second-associate", "gap"], required=True)
    sp.add_argument("--input", required=True)
    common(sp, tol=True)
    sp.set_defaults(func=_cmd_duality)

    sp = sub.add_parser("hausdorff", help="Hausdorff content of a set")
    sp.add_argument("--set", required=True, help="IntervalSet or CellSet JSON")
    sp.add_argument("--d", type=float, required=True)
    sp.add_argument("--r", type=float, default=float("inf"))
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_hausdorff)

    sp = sub.add_parser("axioms", help="randomized function-norm axiom suite")
    sp.add_argument("--oracle", choices=["morrey", "block"], required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--cells", type=int, default=16)
    sp.add_argument("--dim", type=int, default=1)
    common(sp, tol=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_axioms)

    sp = sub.add_parser("fatou", help="monotone truncation limit for the block norm")
    sp.add_argument("--input", required=True)
    sp.add_argument("--steps", type=int, default=6)
    common(sp, tol=True)
    sp.set_defaults(func=_cmd_fatou)

    sp = sub.add_parser("gallery", help="named example families")
    sp.add_argument("case", choices=["p5-failure", "non-dense", "functional-seq", "power"])
    sp.add_argument("--groups", type=int, default=6)
    sp.add_argument("--alpha", type=float, default=100.0)
    sp.add_argument("--k", type=int, default=20)
    sp.add_argument("--levels", type=int, default=10)
    sp.add_argument("--input", default=None, help="segments JSON for functional-seq")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    common(sp)
    sp.set_defaults(func=_cmd_gallery)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.threads < 1:
        parser.print_usage(sys.stderr)
        return 2
    np.random.seed(args.seed % (2**32))
    try:
        return args.func(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
