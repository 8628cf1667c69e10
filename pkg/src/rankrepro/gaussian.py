"""Independent Gaussian populations with known standard deviations.

The reference model: observed sample means ``y_k`` with known ``sigma_k`` and
sample sizes ``n_k``. The location-scale identity ``theta_k = y_k -
(sigma_k / sqrt(n_k)) u_k`` with standard-normal noise makes score draws and
rank constraints explicit. The acceptance region is a single studentized
threshold on all pairwise noise differences, calibrated by Monte Carlo; on
that region an observed gap beyond the threshold pins the pair's order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import BudgetSpec, build_candidate_set
from .confsets import PipelineResult, assemble_confidence_set, refine_with_candidate
from .errors import InvalidInputError
from .ranks import DESCENDING, NeighborhoodSets, as_scores, discordance_batch
from .rng import spawn_rngs


@dataclass(frozen=True)
class GaussianInstance:
    """Sample means with known per-population scale and sample size."""

    y: np.ndarray
    sigma: np.ndarray
    n: np.ndarray
    populations: tuple = None

    def __post_init__(self):
        y = as_scores(self.y, "y")
        sigma = np.asarray(self.sigma, dtype=float)
        n = np.asarray(self.n)
        if sigma.shape != y.shape or n.shape != y.shape:
            raise InvalidInputError("y, sigma, n must have equal length")
        if np.any(sigma <= 0):
            raise InvalidInputError("all sigma must be positive")
        if np.any(n < 1) or not np.all(n == np.floor(n)):
            raise InvalidInputError("all n must be integers >= 1")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "n", n.astype(int))
        pops = self.populations or tuple(f"pop{k+1}" for k in range(y.size))
        if len(pops) != y.size:
            raise InvalidInputError("populations must have length K")
        object.__setattr__(self, "populations", tuple(pops))

    @property
    def K(self) -> int:
        return self.y.size

    @property
    def sem(self) -> np.ndarray:
        """Per-population standard error sigma_k / sqrt(n_k)."""
        return self.sigma / np.sqrt(self.n)

    def pair_scales(self) -> np.ndarray:
        """K x K matrix of sqrt(sem_i^2 + sem_k^2)."""
        s2 = self.sem**2
        return np.sqrt(s2[:, None] + s2[None, :])


@dataclass(frozen=True)
class PairwiseThresholds:
    """Calibrated global multiplier for the studentized pairwise event."""

    q_star: float
    alpha: float
    draws: int

    def __post_init__(self):
        if not np.isfinite(self.q_star) or self.q_star < 0:
            raise InvalidInputError(f"q_star must be finite and >= 0, got {self.q_star}")


def gaussian_theta_star(inst: GaussianInstance, u) -> np.ndarray:
    """Score draw(s) ``theta* = y - sem * u`` for standard-normal noise.

    Accepts a single K-vector or a (V, K) matrix of draws.
    """
    arr = np.asarray(u, dtype=float)
    if arr.shape[-1] != inst.K:
        raise InvalidInputError(f"noise must have K={inst.K} coordinates, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("noise draw contains non-finite values")
    return inst.y - inst.sem * arr


def _studentized_max(inst: GaussianInstance, U: np.ndarray) -> np.ndarray:
    """max over pairs i<k of |sem_i u_i - sem_k u_k| / scale(i,k), per row."""
    noise = inst.sem * U  # (B, K)
    iu, ku = np.triu_indices(inst.K, k=1)
    scale = inst.pair_scales()[iu, ku]
    diffs = noise[:, iu] - noise[:, ku]
    return np.max(np.abs(diffs) / scale, axis=1)


def calibrate_acceptance_threshold(
    inst: GaussianInstance, alpha: float, draws: int, rng: np.random.Generator
) -> PairwiseThresholds:
    """Monte-Carlo calibration of the studentized pairwise threshold.

    Draws ``draws`` standard-normal noise vectors, computes the max studentized
    pairwise difference for each, and takes the empirical (1 - alpha) quantile
    as the order statistic at ``ceil((1-alpha) * draws)`` -- so the simulated
    probability of the symmetric event is at least 1 - alpha by construction.
    """
    if draws < 100:
        raise InvalidInputError(f"calibration needs at least 100 draws, got {draws}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0,1), got {alpha}")
    U = rng.standard_normal((draws, inst.K))
    m = np.sort(_studentized_max(inst, U))
    idx = max(int(np.ceil((1.0 - alpha) * draws)) - 1, 0)
    return PairwiseThresholds(q_star=float(m[idx]), alpha=alpha, draws=draws)


def gaussian_neighborhoods(inst: GaussianInstance, thr: PairwiseThresholds) -> NeighborhoodSets:
    """Pairwise order conclusions from observed gaps beyond the threshold.

    ``i`` is below ``k`` when ``y_i - y_k < -q_star * scale(i,k)``, above when
    the gap exceeds ``+q_star * scale(i,k)``. On the calibrated event these
    conclusions hold for the true scores.
    """
    gaps = inst.y[:, None] - inst.y[None, :]  # gaps[i, k] = y_i - y_k
    lim = thr.q_star * inst.pair_scales()
    below_mask = gaps < -lim  # i certainly below k
    above_mask = gaps > lim
    below = [frozenset(np.flatnonzero(below_mask[:, k])) - {k} for k in range(inst.K)]
    above = [frozenset(np.flatnonzero(above_mask[:, k])) - {k} for k in range(inst.K)]
    return NeighborhoodSets(below=tuple(below), above=tuple(above))


def gaussian_pipeline(
    inst: GaussianInstance,
    alpha: float = 0.05,
    budget: BudgetSpec | None = None,
    acceptance_draws: int = 500,
    candidate_draws: int = 500,
    seed: int = 0,
    index_set=None,
    orientation: str = DESCENDING,
) -> PipelineResult:
    """Full run: calibrate, filter draws, assemble boxes, refine by candidates.

    In this model the neighborhood sets depend on the noise only through the
    calibrated threshold, so the box union collapses to a single box; the
    generic accept-and-collect path is still exercised draw by draw. The
    candidate set uses an independent draw stream with the observed means as
    the discordance reference.
    """
    budget = budget or BudgetSpec.snr()
    rng_cal, rng_accept, rng_cand = spawn_rngs(seed, 3)

    thr = calibrate_acceptance_threshold(inst, alpha, acceptance_draws, rng_cal)
    U = rng_accept.standard_normal((acceptance_draws, inst.K))
    accepted_mask = _studentized_max(inst, U) <= thr.q_star
    nbhd = gaussian_neighborhoods(inst, thr)
    accepted = [(nbhd, int(b)) for b in np.flatnonzero(accepted_mask)]

    metadata = {
        "model": "gaussian",
        "alpha": alpha,
        "seed": seed,
        "q_star": thr.q_star,
        "region_draws": acceptance_draws,
        "region_accepted": len(accepted),
    }
    gamma = assemble_confidence_set(
        accepted,
        K=inst.K,
        index_set=index_set,
        alpha=alpha,
        metadata=metadata,
        orientation=orientation,
        populations=inst.populations,
    )

    if budget.skip_refinement:
        cand, refined = None, gamma
    else:
        stars = gaussian_theta_star(
            inst, rng_cand.standard_normal((candidate_draws, inst.K))
        )
        iu, ku = np.triu_indices(inst.K, k=1)
        resolved = budget.resolve(
            inst.K,
            disc_values=(
                discordance_batch(inst.y, stars)
                if budget.method == "percentile"
                else None
            ),
            gaps=(inst.y[:, None] - inst.y[None, :])[iu, ku],
            scales=inst.pair_scales()[iu, ku],
        )
        cand = build_candidate_set(inst.y, stars, resolved, orientation)
        refined = refine_with_candidate(gamma, cand)
    return PipelineResult(
        refined=refined,
        base=gamma,
        candidates=cand,
        diagnostics={"q_star": thr.q_star, "region_accepted": len(accepted)},
    )
