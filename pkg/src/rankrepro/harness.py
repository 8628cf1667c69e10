"""Coverage studies and the discordance-budget sweep at desk scale.

A replication regenerates data from a fixed truth, runs the model pipeline,
and records whether each true marginal rank and the full true rank vector
land in the refined sets. Replications use spawned seed streams and are
aggregated by index, so worker count never changes the report. Budget-sweep
runs share one pool of score draws so acceptance counts are exactly monotone
in the budget.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .candidates import BudgetSpec, budget_from_pstar
from .errors import InvalidInputError, RankReproError
from .gaussian import GaussianInstance, gaussian_pipeline, gaussian_theta_star
from .pl import PlInstance, pl_pipeline, pl_simulate_trials
from .quantile import QuantileInstance, quantile_pipeline
from .ranks import DESCENDING, check_orientation, discordance_batch, rank_of, rank_of_batch
from .regression import (
    RegressionInstance,
    build_design,
    regression_pipeline,
    round_robin_matches,
)
from .rng import replication_seeds

_MODELS = ("gaussian", "quantile", "regression", "pl")


@dataclass(frozen=True)
class ExperimentConfig:
    """Truth parameters and run sizes for one coverage experiment."""

    model: str
    truth: dict
    replications: int = 200
    alpha: float = 0.05
    acceptance_draws: int = 500
    candidate_draws: int = 500
    budget: BudgetSpec = field(default_factory=BudgetSpec)
    seed: int = 20240801
    orientation: str = DESCENDING

    def __post_init__(self):
        if self.model not in _MODELS:
            raise InvalidInputError(f"model must be one of {_MODELS}, got {self.model!r}")
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        check_orientation(self.orientation)


def load_experiment_config(path) -> ExperimentConfig:
    """Read an experiment config from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    budget = BudgetSpec(**raw.pop("budget", {}))
    return ExperimentConfig(budget=budget, **raw)


def _true_scores(cfg: ExperimentConfig) -> np.ndarray:
    t = cfg.truth
    if cfg.model == "gaussian":
        return np.asarray(t["theta"], dtype=float)
    if cfg.model == "quantile":
        mu = np.asarray(t["mu"], dtype=float)
        sigma = np.asarray(t["sigma"], dtype=float)
        from scipy.stats import norm

        z = norm.ppf(t["zeta"])
        if t.get("family", "lognormal") == "lognormal":
            return np.exp(mu + sigma * z)
        return mu + sigma * z
    if cfg.model == "regression":
        return np.asarray(t["theta"], dtype=float)
    return np.asarray(t["worths"], dtype=float)  # pl


def _run_one_replication(cfg: ExperimentConfig, seed_seq) -> dict:
    """Generate one dataset from the truth and run the model pipeline."""
    children = seed_seq.spawn(2)
    data_rng = np.random.default_rng(children[0])
    pipe_seed = children[1]
    t = cfg.truth

    if cfg.model == "gaussian":
        theta = np.asarray(t["theta"], dtype=float)
        sigma = np.asarray(t["sigma"], dtype=float)
        n = np.asarray(t["n"], dtype=int)
        y = theta + (sigma / np.sqrt(n)) * data_rng.standard_normal(theta.size)
        inst = GaussianInstance(y=y, sigma=sigma, n=n)
        result = gaussian_pipeline(
            inst,
            alpha=cfg.alpha,
            budget=cfg.budget,
            acceptance_draws=cfg.acceptance_draws,
            candidate_draws=cfg.candidate_draws,
            seed=pipe_seed,
            orientation=cfg.orientation,
        )
    elif cfg.model == "quantile":
        mu = np.asarray(t["mu"], dtype=float)
        sigma = np.asarray(t["sigma"], dtype=float)
        n = int(t["n"])
        if t.get("family", "lognormal") == "lognormal":
            samples = [
                np.exp(data_rng.normal(mu[k], sigma[k], size=n)) for k in range(mu.size)
            ]
        else:
            samples = [data_rng.normal(mu[k], sigma[k], size=n) for k in range(mu.size)]
        inst = QuantileInstance(samples=tuple(samples), zeta=float(t["zeta"]))
        result = quantile_pipeline(
            inst,
            alpha=cfg.alpha,
            budget=cfg.budget,
            acceptance_draws=cfg.acceptance_draws,
            candidate_draws=cfg.candidate_draws,
            seed=pipe_seed,
            orientation=cfg.orientation,
        )
    elif cfg.model == "regression":
        theta = np.asarray(t["theta"], dtype=float)
        K = theta.size
        matches = round_robin_matches(K, double=t.get("double_round_robin", True))
        teams = tuple(f"team{k+1}" for k in range(K))
        X = build_design(matches, teams)
        noise = data_rng.laplace(0.0, 1.0, size=len(matches))
        y = X @ theta + float(t.get("intercept", 0.0)) + float(t["sigma"]) * noise
        inst = RegressionInstance(design=X, y=y, teams=teams)
        result = regression_pipeline(
            inst,
            alpha=cfg.alpha,
            budget=cfg.budget,
            acceptance_draws=cfg.acceptance_draws,
            candidate_draws=cfg.candidate_draws,
            seed=pipe_seed,
            orientation=cfg.orientation,
        )
    else:  # pl
        worths = np.asarray(t["worths"], dtype=float)
        K = worths.size
        subsets = [
            (i, j, k)
            for i in range(K)
            for j in range(i + 1, K)
            for k in range(j + 1, K)
        ]
        inst, _ = pl_simulate_trials(worths, subsets, int(t["repetitions"]), data_rng)
        result = pl_pipeline(
            inst,
            alpha=cfg.alpha,
            budget=cfg.budget,
            candidate_draws=cfg.candidate_draws,
            seed=pipe_seed,
            acceptance_draws=cfg.acceptance_draws,
            orientation=cfg.orientation,
        )

    true_ranks = rank_of(_true_scores(cfg), cfg.orientation)
    refined = result.refined
    intervals = refined.marginal_intervals()
    K = true_ranks.size
    if refined.is_empty:
        marg = np.zeros(K, dtype=bool)
        lengths = np.zeros(K, dtype=float)
        joint = False
        empty = True
    else:
        marg = np.array(
            [iv.contains(int(true_ranks[k])) for k, iv in enumerate(intervals)]
        )
        lengths = np.array([iv.length for iv in intervals], dtype=float)
        joint = refined.contains(true_ranks)
        empty = False
    return {
        "marginal": marg,
        "lengths": lengths,
        "joint": bool(joint),
        "empty": empty,
    }


def _worker(args):
    cfg, index, seed_seq = args
    try:
        return index, _run_one_replication(cfg, seed_seq), None
    except RankReproError as exc:  # counted, not fatal to the run
        return index, None, str(exc)


def max_workers() -> int:
    """Worker cap from RANKREPRO_THREADS (0 = auto, unset = serial)."""
    raw = os.environ.get("RANKREPRO_THREADS", "").strip()
    if raw == "":
        return 1
    value = int(raw)
    if value < 0:
        raise InvalidInputError("RANKREPRO_THREADS must be >= 0")
    return os.cpu_count() or 1 if value == 0 else value


@dataclass
class CoverageReport:
    """Aggregated coverage, interval-length, and error statistics."""

    model: str
    replications: int
    K: int
    marginal_coverage: np.ndarray
    marginal_se: np.ndarray
    mean_length: np.ndarray
    sd_length: np.ndarray
    joint_coverage: float
    joint_se: float
    empty_sets: int
    errors: int
    runtime_seconds: float | None
    config: dict

    @property
    def mean_marginal_coverage(self) -> float:
        return float(np.mean(self.marginal_coverage))

    def to_dict(self, canonical: bool = False) -> dict:
        d = {
            "model": self.model,
            "replications": self.replications,
            "K": self.K,
            "marginal_coverage": [round(float(x), 10) for x in self.marginal_coverage],
            "marginal_se": [round(float(x), 10) for x in self.marginal_se],
            "mean_length": [round(float(x), 10) for x in self.mean_length],
            "sd_length": [round(float(x), 10) for x in self.sd_length],
            "mean_marginal_coverage": round(self.mean_marginal_coverage, 10),
            "joint_coverage": round(self.joint_coverage, 10),
            "joint_se": round(self.joint_se, 10),
            "empty_sets": self.empty_sets,
            "errors": self.errors,
            # wall time is excluded from the canonical form so identical
            # config+seed reruns are byte-identical
            "runtime_seconds": None if canonical else self.runtime_seconds,
            "config": self.config,
        }
        return d

    def to_json(self, canonical: bool = True) -> str:
        return json.dumps(self.to_dict(canonical=canonical), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = ["population,coverage,mc_se,mean_length,sd_length"]
        for k in range(self.K):
            lines.append(
                f"pop{k+1},{self.marginal_coverage[k]:.6f},{self.marginal_se[k]:.6f},"
                f"{self.mean_length[k]:.6f},{self.sd_length[k]:.6f}"
            )
        return "\n".join(lines) + "\n"


def run_coverage_experiment(cfg: ExperimentConfig) -> CoverageReport:
    """Run all replications and aggregate marginal/joint coverage.

    Pipeline errors inside a replication are counted (as non-coverage) rather
    than aborting the run.
    """
    start = time.perf_counter()
    seeds = replication_seeds(cfg.seed, cfg.replications)
    jobs = [(cfg, i, seeds[i]) for i in range(cfg.replications)]
    workers = max_workers()
    results: list = [None] * cfg.replications
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, payload, err in pool.map(_worker, jobs, chunksize=4):
                results[index] = (payload, err)
    else:
        for job in jobs:
            index, payload, err = _worker(job)
            results[index] = (payload, err)

    K = _true_scores(cfg).size
    marg_hits = np.zeros(K)
    lengths = []
    joint_hits = 0
    empties = 0
    errors = 0
    for payload, err in results:
        if err is not None:
            errors += 1
            continue
        marg_hits += payload["marginal"].astype(float)
        if not payload["empty"]:
            lengths.append(payload["lengths"])
        joint_hits += int(payload["joint"])
        empties += int(payload["empty"])

    reps = cfg.replications
    marginal = marg_hits / reps
    joint = joint_hits / reps
    length_arr = np.array(lengths) if lengths else np.zeros((0, K))
    return CoverageReport(
        model=cfg.model,
        replications=reps,
        K=K,
        marginal_coverage=marginal,
        marginal_se=np.sqrt(marginal * (1.0 - marginal) / reps),
        mean_length=length_arr.mean(axis=0) if length_arr.size else np.full(K, np.nan),
        sd_length=length_arr.std(axis=0, ddof=1)
        if length_arr.shape[0] > 1
        else np.zeros(K),
        joint_coverage=float(joint),
        joint_se=float(np.sqrt(joint * (1.0 - joint) / reps)),
        empty_sets=empties,
        errors=errors,
        runtime_seconds=time.perf_counter() - start,
        config={**asdict(cfg), "budget": asdict(cfg.budget)},
    )


@dataclass(frozen=True)
class SweepRow:
    p_star: float
    unique_ranks: int
    accepted: int
    c: int


def run_pstar_sweep(cfg: ExperimentConfig, pstar_grid) -> list[SweepRow]:
    """Candidate-set growth across budgets, on one shared pool of draws.

    Gaussian model only. One dataset is drawn from the truth; a single pool of
    ``candidate_draws`` score draws is filtered at every budget in the grid,
    so accepted counts are non-decreasing in p* by construction.
    """
    if cfg.model != "gaussian":
        raise InvalidInputError("the budget sweep is defined for the gaussian model")
    t = cfg.truth
    theta = np.asarray(t["theta"], dtype=float)
    sigma = np.asarray(t["sigma"], dtype=float)
    n = np.asarray(t["n"], dtype=int)
    children = np.random.SeedSequence(cfg.seed).spawn(2)
    data_rng = np.random.default_rng(children[0])
    draw_rng = np.random.default_rng(children[1])

    y = theta + (sigma / np.sqrt(n)) * data_rng.standard_normal(theta.size)
    inst = GaussianInstance(y=y, sigma=sigma, n=n)
    stars = gaussian_theta_star(
        inst, draw_rng.standard_normal((cfg.candidate_draws, inst.K))
    )
    disc = discordance_batch(inst.y, stars)
    ranks = rank_of_batch(stars, cfg.orientation)

    rows = []
    for p_star in sorted(pstar_grid):
        budget = budget_from_pstar(float(p_star), inst.K)
        keep = disc < budget.c
        accepted = int(np.count_nonzero(keep))
        unique = int(np.unique(ranks[keep], axis=0).shape[0]) if accepted else 0
        rows.append(
            SweepRow(p_star=float(p_star), unique_ranks=unique, accepted=accepted, c=budget.c)
        )
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    lines = ["p_star,unique_ranks,accepted,c"]
    for r in rows:
        lines.append(f"{r.p_star:.8f},{r.unique_ranks},{r.accepted},{r.c}")
    return "\n".join(lines) + "\n"
