"""Command-line front end.

Machine-readable JSON (or CSV for bench) goes to standard output; human
summaries and diagnostics go to standard error. Exit codes: 0 success,
1 unreadable or malformed input files, 2 domain violations (bad eps,
unknown rvs, caps, unsupported topologies). The enumeration cap honours
the LIFTCOMP_ENUM_CAP environment variable throughout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import EPS_DOMAIN, GenConfig, X_DOMAIN, emit_csv, run_grid
from .bounds import bound_set, distance_exact, odds_envelope
from .eacp import run_eacp
from .errors import LiftcompError, ModelFormatError
from .inference import Query, query_enumerate, query_lifted_star, query_ve
from .io import load_evidence, load_fg, save_fg
from .model import Evidence, FactorGraph, resolve_cap
from .pfgio import save_pfg

__all__ = ["main"]


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc


def _load_model(path: str) -> FactorGraph:
    return load_fg(_read_bytes(path))


def _evidence_from_pairs(pairs: list[str] | None) -> Evidence:
    if not pairs:
        return Evidence()
    items = []
    for pair in pairs:
        rv, sep, value = pair.partition("=")
        if not sep or not rv or not value:
            raise LiftcompError(f"evidence must look like RV=value, got {pair!r}")
        items.append((rv, value))
    return Evidence(tuple(items))


def _emit(payload: object) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_compress(args: argparse.Namespace) -> int:
    fg = _load_model(args.model)
    evidence = load_evidence(_read_bytes(args.evidence)) if args.evidence else Evidence()
    result = run_eacp(fg, args.eps, evidence)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pfg_path = out / "pfg.json"
    mprime_path = out / "m_prime.json"
    pfg_path.write_bytes(save_pfg(result.pfg))
    mprime_path.write_bytes(save_fg(result.m_prime))
    groups = [
        {
            "index": gi,
            "size": len(group),
            "members": [m.factor for m in group],
            "max_rel_dev": result.per_group_max_rel_dev[gi],
        }
        for gi, group in enumerate(result.grouping.groups)
    ]
    n_factors = len(fg.factors)
    n_groups = result.n_groups()
    _emit(
        {
            "eps": args.eps,
            "n_factors": n_factors,
            "n_groups": n_groups,
            "compression_ratio": n_groups / n_factors,
            "groups": groups,
            "rv_classes": [list(c) for c in result.rv_classes],
            "outputs": {"pfg": str(pfg_path), "m_prime": str(mprime_path)},
        }
    )
    print(
        f"compressed {n_factors} factors into {n_groups} groups at eps={args.eps}",
        file=sys.stderr,
    )
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    fg = _load_model(args.model)
    evidence = _evidence_from_pairs(args.evidence)
    q = Query(args.target, evidence, args.value)
    if args.method == "enum":
        res = query_enumerate(fg, q)
    elif args.method == "ve":
        res = query_ve(fg, q)
    else:
        comp = run_eacp(fg, args.eps, Evidence())
        res = query_lifted_star(comp.pfg, args.target, q)
    payload = {
        "target": args.target,
        "method": res.method,
        "ops": res.ops,
        "distribution": res.distribution,
    }
    if args.value is not None:
        payload["value"] = args.value
        payload["p"] = res.distribution[args.value]
    _emit(payload)
    print(f"queried {args.target} via {res.method} ({res.ops} ops)", file=sys.stderr)
    return 0


def _factor_diff_count(m1: FactorGraph, m2: FactorGraph) -> int:
    names1 = [f.name for f in m1.factors]
    names2 = [f.name for f in m2.factors]
    if sorted(names1) != sorted(names2):
        raise LiftcompError(
            "models must share factor names to infer the modified count; pass --m"
        )
    count = 0
    for f in m1.factors:
        g = m2.factor(f.name)
        if f.args != g.args:
            raise LiftcompError(
                f"factor {f.name!r} has different arguments in the two models; pass --m"
            )
        if not np.array_equal(f.table, g.table):
            count += 1
    return count


def cmd_bound(args: argparse.Namespace) -> int:
    if args.m is None and not (args.model and args.compressed):
        raise LiftcompError("bound needs --m, or --model together with --compressed")
    distance = None
    m = args.m
    if args.model and args.compressed:
        m1 = _load_model(args.model)
        m2 = _load_model(args.compressed)
        if m is None:
            m = _factor_diff_count(m1, m2)
        if m1.state_count() <= resolve_cap(None):
            report = distance_exact(m1, m2)
            distance = {
                "d_exact": report.d_exact,
                "max_ratio": report.max_ratio,
                "min_ratio": report.min_ratio,
                "argmax_assignment": report.argmax_assignment,
                "argmin_assignment": report.argmin_assignment,
            }
        else:
            print("state space above enumeration cap; skipping d_exact", file=sys.stderr)
    if m == 0:
        payload = {
            "m": 0,
            "eps": args.eps,
            "d_general": 0.0,
            "d_tight": 0.0,
            "alpha1": 1.0,
            "alpha2": 1.0,
            "odds_envelopes": {"general": [1.0, 1.0], "tight": [1.0, 1.0]},
            "distance": distance,
        }
        _emit(payload)
        return 0
    bounds = bound_set(m, args.eps)
    payload = {
        "m": bounds.m,
        "eps": bounds.eps,
        "d_general": bounds.d_general,
        "d_tight": bounds.d_tight,
        "alpha1": bounds.alpha1,
        "alpha2": bounds.alpha2,
        "odds_envelopes": {
            "general": list(odds_envelope(bounds.d_general)),
            "tight": list(odds_envelope(bounds.d_tight)),
        },
        "distance": distance,
    }
    _emit(payload)
    print(
        f"m={bounds.m} eps={bounds.eps}: d_tight={bounds.d_tight:.6g}"
        f" <= d_general={bounds.d_general:.6g}",
        file=sys.stderr,
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    configs = [
        GenConfig(
            k=k,
            x=x,
            eps=eps,
            seed=args.seed,
            guarantee_pairwise=args.guarantee_pairwise,
            free=args.free,
        )
        for k in args.k
        for x in args.x
        for eps in args.eps
    ]
    records = run_grid(
        configs, n_queries=args.queries, skip_exact=args.skip_exact, jobs=args.jobs
    )
    data = emit_csv(records)
    if args.out:
        Path(args.out).write_bytes(data)
        print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(data.decode("utf-8"))
        print(f"{len(records)} records", file=sys.stderr)
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    fg = _load_model(args.model)
    _emit(
        {
            "n_rvs": len(fg.rvs),
            "n_factors": len(fg.factors),
            "state_count": fg.state_count(),
            "enum_cap": resolve_cap(None),
            "rvs": [{"name": rv.name, "range": list(rv.range)} for rv in fg.rvs],
            "factors": [
                {"name": f.name, "args": list(f.args), "shape": list(f.table.shape)}
                for f in fg.factors
            ],
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftcomp",
        description="Factor-graph compression with certified error bounds.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("compress", help="compress a model and export the parfactor graph")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--eps", required=True, type=float, help="tolerance in [0, 1)")
    p.add_argument("--evidence", help="evidence JSON file")
    p.add_argument("--out", default=".", help="directory for pfg.json and m_prime.json")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("query", help="answer a marginal query")
    p.add_argument("--model", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--evidence", action="append", metavar="RV=VALUE")
    p.add_argument("--value", help="label to report P(target=value) for")
    p.add_argument("--method", choices=("enum", "ve", "lifted"), default="ve")
    p.add_argument("--eps", type=float, default=0.0, help="tolerance for --method lifted")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bound", help="closed-form bounds and exact distance")
    p.add_argument("--m", type=int, help="number of modified factors")
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--model", help="original model JSON file")
    p.add_argument("--compressed", help="compressed model JSON file")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("bench", help="run the experiment grid and emit CSV")
    p.add_argument("--k", type=int, nargs="+", default=[2, 4, 8, 16])
    p.add_argument("--x", type=float, nargs="+", default=list(X_DOMAIN))
    p.add_argument("--eps", type=float, nargs="+", default=list(EPS_DOMAIN))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=int, default=5)
    p.add_argument("--out", help="CSV output path (default: standard output)")
    p.add_argument("--guarantee-pairwise", action="store_true")
    p.add_argument("--skip-exact", action="store_true")
    p.add_argument("--free", action="store_true", help="allow off-grid k/x/eps")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect", help="summarise a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LiftcompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
