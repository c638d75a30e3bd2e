"""Command line interface: fit, sample, genmatrix, bench, mh-demo."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bench_mod
from .benchmark import ExperimentConfig, aggregate_quantiles, write_records_csv
from .conditionals import ConditionalsFamily
from .figures import render_benchmark_svgs
from .fitting import FitConfig, fit, fit_linear
from .gaussian import fit_gc
from .io import load_family, read_matrix_text, save_family, write_matrix_text
from .links import get_link
from .matgen import GenConfig, random_cross_moment_matrix
from .mh import TargetDensity, run_chain
from .quadexp import QuadExpFamily


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _cmd_fit(args) -> int:
    M = read_matrix_text(args.matrix)
    if args.family == "gaussian":
        family = fit_gc(M)
        report = {"family": family.kind_tag, "dim": family.dim,
                  "repaired": family.repaired, "shift": family.shift,
                  "boundary_pairs": [list(p) for p in family.boundary_pairs]}
    else:
        link = get_link(args.link)
        if link.bijective:
            cfg = FitConfig(method=args.mode, mc_samples=args.n)
            family, fit_report = fit(M, link, cfg, _rng(args.seed))
            report = {
                "family": family.kind_tag, "dim": family.dim, "link": link.name,
                "min_lambda": fit_report.min_lambda,
                "wall_time": fit_report.wall_time,
                "rows": [
                    {"index": r.index, "status": r.status, "iterations": r.iterations,
                     "residual": r.residual, "lambda": r.lam}
                    for r in fit_report.rows
                ],
            }
        else:
            family = fit_linear(M)
            report = {"family": family.kind_tag, "dim": family.dim, "link": link.name}
    save_family(args.out, family)
    report["out"] = str(args.out)
    print(json.dumps(report, indent=2))
    return 0


def _cmd_sample(args) -> int:
    family = load_family(args.family)
    rng = _rng(args.seed)
    if hasattr(family, "sample_many"):
        X = family.sample_many(args.n, rng)
        if isinstance(X, tuple):
            X = X[0]
    else:
        X = np.array([family.sample(rng)[0] for _ in range(args.n)])
    if args.out:
        with open(args.out, "w") as fh:
            for row in X:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
    summary = {"n": int(args.n), "dim": int(X.shape[1]),
               "mean": [float(v) for v in X.mean(axis=0)]}
    if args.out:
        summary["out"] = str(args.out)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_genmatrix(args) -> int:
    cfg = GenConfig(dim=args.dim, difficulty=args.rho,
                    permutation_steps=args.permutation_steps,
                    replacement_sweeps=args.sweeps)
    M = random_cross_moment_matrix(cfg, _rng(args.seed))
    write_matrix_text(args.out, M)
    print(json.dumps({"dim": args.dim, "rho": args.rho, "seed": args.seed,
                      "out": str(args.out)}, indent=2))
    return 0


def _cmd_bench(args) -> int:
    cfg = ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.workers is not None:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "workers": args.workers})
    records = bench_mod.run_experiment(cfg)
    write_records_csv(records, args.out_csv)
    if args.out_svg:
        render_benchmark_svgs(aggregate_quantiles(records), args.out_svg)
    failures = [r for r in records if r.error is not None]
    print(json.dumps({
        "records": len(records),
        "failures": len(failures),
        "out_csv": str(args.out_csv),
        "out_svg": str(args.out_svg) if args.out_svg else None,
    }, indent=2))
    return 1 if failures else 0


def _cmd_mh_demo(args) -> int:
    target_family = load_family(args.target)
    if not isinstance(target_family, QuadExpFamily):
        raise SystemExit("mh-demo expects a quadratic-exponential target family")
    proposal = load_family(args.proposal)
    if not isinstance(proposal, (ConditionalsFamily, QuadExpFamily)):
        raise SystemExit("the proposal must support point-wise evaluation")
    if proposal.dim != target_family.dim:
        raise SystemExit(
            f"dimension mismatch: target has {target_family.dim}, proposal {proposal.dim}"
        )
    target = TargetDensity.from_quadexp(target_family)
    _, stats = run_chain(target, proposal, args.steps, _rng(args.seed))
    print(json.dumps(stats.to_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrbin",
        description="Fit, sample and benchmark correlated binary distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a family to a cross-moment matrix")
    p.add_argument("--matrix", required=True, help="matrix text file")
    p.add_argument("--family", default="conditionals", choices=["conditionals", "gaussian"])
    p.add_argument("--link", default="logistic",
                   choices=["logistic", "probit", "cloglog", "truncated-linear"])
    p.add_argument("--mode", default="auto", choices=["auto", "exact", "mc"])
    p.add_argument("--n", type=int, default=10_000, help="Monte Carlo fit sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output family JSON")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sample", help="draw samples from a saved family")
    p.add_argument("--family", required=True, help="family JSON file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write 0/1 rows here")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("genmatrix", help="generate a random feasible cross-moment matrix")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--rho", type=float, default=1.0, help="difficulty in [0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--permutation-steps", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=500)
    p.set_defaults(func=_cmd_genmatrix)

    p = sub.add_parser("bench", help="run the benchmark sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg", default=None, help="directory for SVG panels")
    p.add_argument("--workers", type=int, default=None, help="override the config's workers")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("mh-demo", help="run an independence sampler against a saved target")
    p.add_argument("--target", required=True, help="quadexp family JSON")
    p.add_argument("--proposal", required=True, help="proposal family JSON")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_mh_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
