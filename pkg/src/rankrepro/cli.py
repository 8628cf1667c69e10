"""Command-line surface tying the pipelines together.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every run writes a canonical result document (JSON) plus a marginal-interval
CSV next to it; both are byte-identical across reruns with the same seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .baselines import BootstrapConfig, bootstrap_rank_intervals
from .candidates import BudgetSpec
from .errors import DataFormatError, InvalidInputError, RankReproError
from .gaussian import GaussianInstance, gaussian_pipeline
from .harness import (
    load_experiment_config,
    run_coverage_experiment,
    run_pstar_sweep,
    sweep_to_csv,
)
from .io import load_matches_csv, load_populations_csv, load_trials_csv, result_from_pipeline
from .pl import pl_mle_theta_hat, pl_pipeline
from .quantile import QuantileInstance, quantile_pipeline
from .regression import fit_strengths, regression_pipeline

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_common(p: _Parser, needs_input: bool = True):
    if needs_input:
        p.add_argument("--input", required=True, help="input CSV path")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--draws", type=int, default=500, help="acceptance-region draws")
    p.add_argument("--candidate-draws", type=int, default=500)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pstar", type=float, help="budget c = floor(pstar * K_pairs)")
    group.add_argument("--c", type=int, help="manual discordance budget")
    group.add_argument(
        "--percentile-q", type=float, help="budget from this discordance quantile"
    )
    p.add_argument("--seed", type=int, default=20240801)
    p.add_argument("--out", help="result document path (JSON)")
    p.add_argument(
        "--orientation", choices=["ascending", "descending"], default="descending"
    )


def _budget_from_args(args) -> BudgetSpec:
    if args.c is not None:
        return BudgetSpec.manual(args.c)
    if args.percentile_q is not None:
        return BudgetSpec.percentile(args.percentile_q)
    return BudgetSpec.pstar(args.pstar if args.pstar is not None else 0.20)


def build_parser() -> _Parser:
    parser = _Parser(prog="rankrepro", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gaussian", help="known-sigma Gaussian populations")
    _add_common(p)
    p.add_argument(
        "--proportions",
        action="store_true",
        help="treat values as 0/1 outcomes and rank latent log-odds",
    )

    p = sub.add_parser("quantile", help="rank population quantiles")
    _add_common(p)
    p.add_argument("--zeta", type=float, default=0.5, help="quantile level to rank")
    p.add_argument(
        "--bootstrap-baseline",
        action="store_true",
        help="also print Bonferroni bootstrap intervals",
    )

    p = sub.add_parser("regression", help="team strengths from match results")
    _add_common(p)

    p = sub.add_parser("pl", help="top-choice trials over item triples")
    _add_common(p)

    p = sub.add_parser("simulate", help="coverage experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="report path (JSON); CSV written alongside")

    p = sub.add_parser("sweep", help="candidate-set size across budgets")
    p.add_argument("--config", required=True)
    p.add_argument(
        "--pstar-grid",
        default="0.01,0.02,0.05,0.1,0.2,0.5,1.0",
        help="comma-separated p* values",
    )
    p.add_argument("--out", help="sweep CSV path")
    return parser


def _write_outputs(doc, out_path: str):
    out = Path(out_path)
    out.write_text(doc.to_json(canonical=True), encoding="utf-8")
    csv_path = out.with_name(out.stem + "_marginals.csv")
    csv_path.write_text(doc.marginals_csv(), encoding="utf-8")
    return csv_path


def _print_table(doc, estimates, header="population"):
    from .ranks import rank_of

    est = {str(p): e for p, e in estimates}
    values = np.array([e for _, e in estimates], dtype=float)
    point_rank = {
        str(p): r for (p, _), r in zip(estimates, rank_of(values, doc.orientation))
    }
    print(f"{header:<20} {'estimate':>12} {'rank':>5} {'rank_lo':>8} {'rank_hi':>8}")
    for p, lo, hi in doc.marginal:
        print(
            f"{str(p):<20} {est.get(str(p), float('nan')):>12.4f} "
            f"{point_rank.get(str(p), 0):>5d} {lo:>8d} {hi:>8d}"
        )


def _run_gaussian(args) -> int:
    ids, samples = load_populations_csv(args.input)
    if args.proportions:
        y, sigma, n = [], [], []
        for pid, arr in zip(ids, samples):
            bad = np.setdiff1d(np.unique(arr), [0.0, 1.0])
            if bad.size:
                raise DataFormatError(
                    f"population {pid!r}: --proportions needs 0/1 values, saw {bad[:3]}"
                )
            p_hat = float(arr.mean())
            if p_hat in (0.0, 1.0):
                raise DataFormatError(
                    f"population {pid!r}: proportion {p_hat} has no finite log-odds"
                )
            y.append(np.log(p_hat / (1.0 - p_hat)))
            sigma.append(np.sqrt(1.0 / p_hat + 1.0 / (1.0 - p_hat)))
            n.append(arr.size)
        inst = GaussianInstance(y=y, sigma=sigma, n=n, populations=tuple(ids))
    else:
        y = [float(arr.mean()) for arr in samples]
        sigma = [float(arr.std(ddof=1)) for arr in samples]
        if any(s <= 0 for s in sigma):
            raise DataFormatError("a population has zero sample variance")
        n = [arr.size for arr in samples]
        inst = GaussianInstance(y=y, sigma=sigma, n=n, populations=tuple(ids))

    start = time.perf_counter()
    result = gaussian_pipeline(
        inst,
        alpha=args.alpha,
        budget=_budget_from_args(args),
        acceptance_draws=args.draws,
        candidate_draws=args.candidate_draws,
        seed=args.seed,
        orientation=args.orientation,
    )
    doc = result_from_pipeline("gaussian", result, ids, args.alpha, args.seed)
    doc.runtime_seconds = time.perf_counter() - start
    _finish(doc, args, list(zip(ids, inst.y)))
    return EXIT_OK


def _run_quantile(args) -> int:
    ids, samples = load_populations_csv(args.input)
    inst = QuantileInstance(samples=tuple(samples), zeta=args.zeta, populations=tuple(ids))
    start = time.perf_counter()
    result = quantile_pipeline(
        inst,
        alpha=args.alpha,
        budget=_budget_from_args(args),
        acceptance_draws=args.draws,
        candidate_draws=args.candidate_draws,
        seed=args.seed,
        orientation=args.orientation,
    )
    doc = result_from_pipeline("quantile", result, ids, args.alpha, args.seed)
    doc.runtime_seconds = time.perf_counter() - start
    _finish(doc, args, list(zip(ids, inst.theta_hat())))
    if args.bootstrap_baseline:
        cfg = BootstrapConfig(alpha=args.alpha, statistic="quantile", zeta=args.zeta)
        intervals = bootstrap_rank_intervals(
            samples, cfg, seed=args.seed, orientation=args.orientation, populations=ids
        )
        print("bootstrap baseline:")
        for iv in intervals:
            print(f"{str(iv.population):<20} [{iv.lo}, {iv.hi}]")
    return EXIT_OK


def _run_regression(args) -> int:
    inst = load_matches_csv(args.input)
    start = time.perf_counter()
    result = regression_pipeline(
        inst,
        alpha=args.alpha,
        budget=_budget_from_args(args),
        acceptance_draws=args.draws,
        candidate_draws=args.candidate_draws,
        seed=args.seed,
        orientation=args.orientation,
    )
    doc = result_from_pipeline("regression", result, inst.teams, args.alpha, args.seed)
    doc.runtime_seconds = time.perf_counter() - start
    fit = fit_strengths(inst)
    _finish(doc, args, list(zip(inst.teams, fit.theta_hat)), header="team")
    return EXIT_OK


def _run_pl(args) -> int:
    inst = load_trials_csv(args.input)
    if inst.ragged:
        print("warning: unequal per-subset repetition counts (ragged)", file=sys.stderr)
    start = time.perf_counter()
    result = pl_pipeline(
        inst,
        alpha=args.alpha,
        budget=_budget_from_args(args),
        candidate_draws=args.candidate_draws,
        seed=args.seed,
        acceptance_draws=args.draws,
        orientation=args.orientation,
    )
    items = [f"item{k+1}" for k in range(inst.K)]
    doc = result_from_pipeline("pl", result, items, args.alpha, args.seed)
    doc.runtime_seconds = time.perf_counter() - start
    theta = pl_mle_theta_hat(inst)
    _finish(doc, args, list(zip(items, theta)), header="item")
    return EXIT_OK


def _finish(doc, args, estimates, header="population"):
    _print_table(doc, estimates, header=header)
    if args.out:
        csv_path = _write_outputs(doc, args.out)
        print(f"wrote {args.out} and {csv_path}", file=sys.stderr)
    if doc.runtime_seconds is not None:
        print(f"runtime: {doc.runtime_seconds:.3f}s", file=sys.stderr)


def _run_simulate(args) -> int:
    cfg = load_experiment_config(args.config)
    report = run_coverage_experiment(cfg)
    print(
        f"model={report.model} reps={report.replications} "
        f"mean marginal coverage={report.mean_marginal_coverage:.4f} "
        f"joint coverage={report.joint_coverage:.4f} "
        f"empty={report.empty_sets} errors={report.errors}"
    )
    if args.out:
        out = Path(args.out)
        out.write_text(report.to_json(canonical=True), encoding="utf-8")
        out.with_name(out.stem + "_marginals.csv").write_text(
            report.to_csv(), encoding="utf-8"
        )
        print(f"wrote {out}", file=sys.stderr)
    if report.runtime_seconds is not None:
        print(f"runtime: {report.runtime_seconds:.3f}s", file=sys.stderr)
    return EXIT_OK


def _run_sweep(args) -> int:
    cfg = load_experiment_config(args.config)
    try:
        grid = [float(x) for x in args.pstar_grid.split(",") if x.strip() != ""]
    except ValueError:
        raise _UsageError(f"bad --pstar-grid {args.pstar_grid!r}") from None
    if not grid:
        raise _UsageError("--pstar-grid is empty")
    rows = run_pstar_sweep(cfg, grid)
    text = sweep_to_csv(rows)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}", file=sys.stderr)
    return EXIT_OK


_RUNNERS = {
    "gaussian": _run_gaussian,
    "quantile": _run_quantile,
    "regression": _run_regression,
    "pl": _run_pl,
    "simulate": _run_simulate,
    "sweep": _run_sweep,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _RUNNERS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidInputError, RankReproError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:  # console-script entry point
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
