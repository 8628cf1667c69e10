"""Bonferroni-adjusted simultaneous bootstrap rank intervals (comparator).

Percentile bootstrap on all pairwise contrasts of a per-population statistic,
each at level ``1 - alpha / K_pairs``; contrasts bounded away from zero fix
the pair's order and the counts bracket each rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import k_pairs_of
from .errors import InvalidInputError
from .ranks import ASCENDING, DESCENDING, RankInterval, check_orientation


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 1000
    alpha: float = 0.05
    statistic: str = "mean"  # "mean" or "quantile"
    zeta: float = 0.5

    def __post_init__(self):
        if self.resamples < 100:
            raise InvalidInputError(f"need at least 100 resamples, got {self.resamples}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.statistic not in ("mean", "quantile"):
            raise InvalidInputError(f"unknown statistic {self.statistic!r}")
        if self.statistic == "quantile" and not 0.0 < self.zeta < 1.0:
            raise InvalidInputError(f"zeta must lie in (0,1), got {self.zeta}")


def _stat_rows(values: np.ndarray, cfg: BootstrapConfig) -> np.ndarray:
    """Row-wise statistic of a (B, n) resample matrix."""
    if cfg.statistic == "mean":
        return values.mean(axis=1)
    n = values.shape[1]
    idx = min(max(int(np.ceil(n * cfg.zeta)), 1), n) - 1
    return np.partition(values, idx, axis=1)[:, idx]


def bootstrap_rank_intervals(
    samples,
    cfg: BootstrapConfig,
    seed: int = 0,
    orientation: str = DESCENDING,
    populations=None,
) -> list[RankInterval]:
    """Simultaneous rank intervals from pairwise percentile-bootstrap contrasts.

    Each contrast's interval has level ``1 - alpha / K_pairs``; a pair is
    ordered only when its interval excludes zero, so degenerate (constant)
    resamples simply produce zero-width contrast intervals and order the pair
    by the estimate's sign.
    """
    check_orientation(orientation)
    arrays = [np.asarray(s, dtype=float) for s in samples]
    K = len(arrays)
    if K < 2:
        raise InvalidInputError("need at least two populations")
    for idx, arr in enumerate(arrays):
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidInputError(f"population {idx}: need at least 2 observations")
    if populations is None:
        populations = [f"pop{k+1}" for k in range(K)]

    rng = np.random.default_rng(seed)
    boot = np.empty((cfg.resamples, K))
    for k, arr in enumerate(arrays):
        draws = rng.integers(0, arr.size, size=(cfg.resamples, arr.size))
        boot[:, k] = _stat_rows(arr[draws], cfg)

    pair_level = cfg.alpha / k_pairs_of(K)
    lo_q, hi_q = pair_level / 2.0, 1.0 - pair_level / 2.0
    below = [set() for _ in range(K)]  # populations with value certainly below k
    above = [set() for _ in range(K)]
    for k in range(K):
        for j in range(k + 1, K):
            diffs = boot[:, k] - boot[:, j]
            lo, hi = np.quantile(diffs, [lo_q, hi_q])
            if lo > 0:
                below[k].add(j)
                above[j].add(k)
            elif hi < 0:
                above[k].add(j)
                below[j].add(k)

    intervals = []
    for k in range(K):
        if orientation == ASCENDING:
            lo_r, hi_r = 1 + len(below[k]), K - len(above[k])
        else:
            lo_r, hi_r = 1 + len(above[k]), K - len(below[k])
        intervals.append(RankInterval(populations[k], lo_r, hi_r))
    return intervals
