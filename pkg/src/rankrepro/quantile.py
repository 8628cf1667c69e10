"""Ranking the zeta-quantiles of K unknown distributions.

Latent noise is one Bernoulli(zeta) indicator per observation; its per
population sums are binomial counts whose distribution is known exactly, so
the acceptance region is a product of shortest binomial intervals at level
``(1 - alpha)^(1/K)`` each. A draw's count vector brackets each population's
quantile between two order statistics, and non-overlapping brackets yield
pairwise order conclusions. Sentinels ``y_(0) = -inf`` and ``y_(n+1) = +inf``
cover counts at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import BudgetSpec, build_candidate_set
from .confsets import PipelineResult, assemble_confidence_set, refine_with_candidate
from .errors import InvalidInputError
from .ranks import DESCENDING, NeighborhoodSets, discordance_batch
from .rng import spawn_rngs
from .solvers import shortest_binomial_interval


@dataclass(frozen=True)
class QuantileInstance:
    """Per-population observation lists and the target quantile level."""

    samples: tuple
    zeta: float
    populations: tuple = None

    def __post_init__(self):
        if not 0.0 < self.zeta < 1.0:
            raise InvalidInputError(f"zeta must lie in (0,1), got {self.zeta}")
        arrays = tuple(np.asarray(s, dtype=float) for s in self.samples)
        if len(arrays) < 2:
            raise InvalidInputError("need at least two populations")
        for idx, arr in enumerate(arrays):
            if arr.ndim != 1 or arr.size < 2:
                raise InvalidInputError(f"population {idx}: need at least 2 observations")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"population {idx}: non-finite observations")
        object.__setattr__(self, "samples", arrays)
        object.__setattr__(self, "_sorted", tuple(np.sort(arr) for arr in arrays))
        pops = self.populations or tuple(f"pop{k+1}" for k in range(len(arrays)))
        if len(pops) != len(arrays):
            raise InvalidInputError("populations must match the number of samples")
        object.__setattr__(self, "populations", tuple(pops))

    @property
    def K(self) -> int:
        return len(self.samples)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.samples], dtype=int)

    def sorted_sample(self, k: int) -> np.ndarray:
        return self._sorted[k]

    def theta_hat(self) -> np.ndarray:
        """Sample zeta-quantiles: the ceil(n_k * zeta)-th order statistics."""
        out = np.empty(self.K)
        for k in range(self.K):
            n_k = self.samples[k].size
            r = int(np.ceil(n_k * self.zeta))
            out[k] = self._sorted[k][min(max(r, 1), n_k) - 1]
        return out


def success_counts(u, sizes) -> np.ndarray:
    """Per-population sums of a concatenated Bernoulli noise vector.

    ``u`` holds K blocks of lengths ``sizes``; the k-th entry of the result is
    the sum of block k.
    """
    arr = np.asarray(u)
    sizes = np.asarray(sizes, dtype=int)
    if arr.ndim != 1 or arr.size != int(sizes.sum()):
        raise InvalidInputError(
            f"noise vector of length {arr.size} does not match layout sum {int(sizes.sum())}"
        )
    if np.any((arr != 0) & (arr != 1)):
        raise InvalidInputError("Bernoulli noise must be 0/1 valued")
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    return np.array(
        [int(arr[bounds[k] : bounds[k + 1]].sum()) for k in range(sizes.size)], dtype=int
    )


def quantile_theta_star(inst: QuantileInstance, counts) -> np.ndarray:
    """Score draw from a count vector: the clamped lower-bracket order statistic.

    ``theta*_k = y^(k)_(clamp(T_k, 1, n_k))``. Accepts a single count vector or
    a (V, K) matrix.
    """
    T = np.asarray(counts, dtype=int)
    single = T.ndim == 1
    T = np.atleast_2d(T)
    if T.shape[1] != inst.K:
        raise InvalidInputError(f"counts must have K={inst.K} columns, got {T.shape}")
    out = np.empty(T.shape, dtype=float)
    for k in range(inst.K):
        srt = inst.sorted_sample(k)
        idx = np.clip(T[:, k], 1, srt.size) - 1
        out[:, k] = srt[idx]
    return out[0] if single else out


@dataclass(frozen=True)
class BinomialBand:
    """Per-population integer bounds on the binomial count statistic."""

    lower: np.ndarray
    upper: np.ndarray
    level_each: float

    def accepts(self, counts: np.ndarray) -> np.ndarray:
        """Row mask: every coordinate of the count vector inside its band."""
        T = np.atleast_2d(np.asarray(counts, dtype=int))
        return np.all((T >= self.lower) & (T <= self.upper), axis=1)


def count_acceptance_bands(inst: QuantileInstance, alpha: float) -> BinomialBand:
    """Shortest binomial intervals at marginal level ``(1-alpha)^(1/K)``.

    The bands are independent across populations, so the joint acceptance
    probability is the product of the per-population masses, at least
    ``1 - alpha`` by construction.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0,1), got {alpha}")
    level = (1.0 - alpha) ** (1.0 / inst.K)
    lower = np.empty(inst.K, dtype=int)
    upper = np.empty(inst.K, dtype=int)
    for k in range(inst.K):
        lower[k], upper[k] = shortest_binomial_interval(
            int(inst.sizes[k]), inst.zeta, level
        )
    return BinomialBand(lower=lower, upper=upper, level_each=level)


def _bracket_bounds(inst: QuantileInstance, T: np.ndarray):
    """Lower/upper bracketing order statistics for count rows, with sentinels."""
    low = np.empty(T.shape, dtype=float)
    up = np.empty(T.shape, dtype=float)
    for k in range(inst.K):
        srt = inst.sorted_sample(k)
        n_k = srt.size
        t = T[:, k]
        low[:, k] = np.where(t >= 1, srt[np.clip(t, 1, n_k) - 1], -np.inf)
        low[t > n_k, k] = np.inf  # y_(n+1) and beyond
        up[:, k] = np.where(t + 1 <= n_k, srt[np.clip(t + 1, 1, n_k) - 1], np.inf)
        up[t < 0, k] = -np.inf
    return low, up


def quantile_neighborhoods(inst: QuantileInstance, counts) -> NeighborhoodSets:
    """Pairwise order conclusions from non-overlapping bracket intervals.

    ``i`` is below ``k`` when i's upper bracket lies strictly below k's lower
    bracket, and symmetrically for above.
    """
    T = np.asarray(counts, dtype=int).reshape(1, -1)
    if T.shape[1] != inst.K:
        raise InvalidInputError(f"counts must have K={inst.K} entries")
    low, up = _bracket_bounds(inst, T)
    low, up = low[0], up[0]
    below_mask = up[:, None] < low[None, :]  # [i, k]: i below k
    above_mask = low[:, None] > up[None, :]
    below = [frozenset(np.flatnonzero(below_mask[:, k])) - {k} for k in range(inst.K)]
    above = [frozenset(np.flatnonzero(above_mask[:, k])) - {k} for k in range(inst.K)]
    return NeighborhoodSets(below=tuple(below), above=tuple(above))


def _draw_counts(inst: QuantileInstance, rng: np.random.Generator, draws: int) -> np.ndarray:
    """Binomial count draws, equivalent to summing Bernoulli blocks."""
    cols = [rng.binomial(int(n_k), inst.zeta, size=draws) for n_k in inst.sizes]
    return np.stack(cols, axis=1)


def quantile_pipeline(
    inst: QuantileInstance,
    alpha: float = 0.05,
    budget: BudgetSpec | None = None,
    acceptance_draws: int = 500,
    candidate_draws: int = 500,
    seed: int = 0,
    index_set=None,
    orientation: str = DESCENDING,
) -> PipelineResult:
    """Accept count draws into the band, collect bracket boxes, refine.

    The candidate stream is independent of the acceptance stream; discordance
    is measured against the sample zeta-quantiles.
    """
    budget = budget or BudgetSpec()
    rng_accept, rng_cand = spawn_rngs(seed, 2)

    bands = count_acceptance_bands(inst, alpha)
    T_accept = _draw_counts(inst, rng_accept, acceptance_draws)
    mask = bands.accepts(T_accept)
    accepted = [
        (quantile_neighborhoods(inst, T_accept[b]), int(b)) for b in np.flatnonzero(mask)
    ]

    metadata = {
        "model": "quantile",
        "alpha": alpha,
        "zeta": inst.zeta,
        "seed": seed,
        "region_draws": acceptance_draws,
        "region_accepted": len(accepted),
        "band_level_each": bands.level_each,
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
        theta_hat = inst.theta_hat()
        T_cand = _draw_counts(inst, rng_cand, candidate_draws)
        stars = quantile_theta_star(inst, T_cand)
        resolved = budget.resolve(
            inst.K,
            disc_values=(
                discordance_batch(theta_hat, stars)
                if budget.method == "percentile"
                else None
            ),
        )
        cand = build_candidate_set(theta_hat, stars, resolved, orientation)
        refined = refine_with_candidate(gamma, cand)
    return PipelineResult(
        refined=refined,
        base=gamma,
        candidates=cand,
        diagnostics={"region_accepted": len(accepted), "band_level_each": bands.level_each},
    )
