"""Union-of-boxes rank confidence sets and candidate-set refinement.

Each accepted noise draw contributes one *rank box*: per-population integer
intervals that bracket the true ranks under that draw. The confidence set is
the union of the accepted boxes; a rank vector belongs to the set when a
single box contains all of its coordinates jointly. The refined set
intersects the boxes with a candidate set and is stored as an explicit list
of surviving rankings (degenerate boxes), so membership and marginals keep
working uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateSet
from .errors import InvalidInputError
from .ranks import (
    ASCENDING,
    NeighborhoodSets,
    RankInterval,
    check_orientation,
    rank_interval_from_neighborhoods,
)


@dataclass(frozen=True)
class RankBox:
    """Per-population rank intervals produced by one accepted draw."""

    lo: tuple
    hi: tuple
    source_draw: int

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise InvalidInputError("box lo/hi lengths differ")
        for a, b in zip(self.lo, self.hi):
            if not 1 <= a <= b:
                raise InvalidInputError(f"invalid box interval [{a}, {b}]")


@dataclass
class RankConfidenceSet:
    """Union of rank boxes over an index set, plus derived marginals.

    ``boxes`` hold the per-draw constraints restricted to ``index_set``.
    After refinement ``joint_rankings`` lists the surviving full rankings and
    the boxes are their degenerate restrictions. ``metadata`` carries run
    bookkeeping (alpha, budget, draw counts, seed, ...). An empty set (no
    boxes) is legal and flagged through ``diagnostic``.
    """

    K: int
    index_set: tuple
    alpha: float
    orientation: str
    boxes: list
    populations: tuple
    metadata: dict = field(default_factory=dict)
    joint_rankings: np.ndarray | None = None  # (m, K) full rankings, refined sets only
    joint_counts: np.ndarray | None = None
    diagnostic: str | None = None

    def __post_init__(self):
        check_orientation(self.orientation)
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0,1), got {self.alpha}")
        self.index_set = tuple(sorted(self.index_set))
        for k in self.index_set:
            if not 0 <= k < self.K:
                raise InvalidInputError(f"index {k} out of range for K={self.K}")
        if self.boxes:
            self._lo = np.array([b.lo for b in self.boxes], dtype=int)
            self._hi = np.array([b.hi for b in self.boxes], dtype=int)
        else:
            width = len(self.index_set)
            self._lo = np.empty((0, width), dtype=int)
            self._hi = np.empty((0, width), dtype=int)

    @property
    def is_empty(self) -> bool:
        return len(self.boxes) == 0

    def marginal_intervals(self) -> list[RankInterval]:
        """Coordinatewise unions of the box intervals (min lo, max hi)."""
        if self.is_empty:
            return []
        los = self._lo.min(axis=0)
        his = self._hi.max(axis=0)
        return [
            RankInterval(self.populations[k], int(lo), int(hi))
            for k, lo, hi in zip(self.index_set, los, his)
        ]

    def _restrict(self, ranks: np.ndarray) -> np.ndarray:
        if ranks.shape[-1] == self.K:
            return ranks[..., list(self.index_set)]
        if ranks.shape[-1] == len(self.index_set):
            return ranks
        raise InvalidInputError(
            f"rank vector length {ranks.shape[-1]} matches neither K={self.K} "
            f"nor |index_set|={len(self.index_set)}"
        )

    def contains(self, ranks) -> bool:
        """Joint membership: some single box contains every coordinate."""
        return bool(self.contains_batch(np.asarray(ranks, dtype=int)[None, :])[0])

    def contains_batch(self, ranks: np.ndarray, chunk: int = 256) -> np.ndarray:
        """Vectorized :meth:`contains` over the rows of an (m, K) matrix."""
        r = self._restrict(np.asarray(ranks, dtype=int))
        if self.is_empty:
            return np.zeros(r.shape[0], dtype=bool)
        out = np.empty(r.shape[0], dtype=bool)
        for start in range(0, r.shape[0], chunk):
            block = r[start : start + chunk]  # (b, w)
            inside = (block[:, None, :] >= self._lo[None, :, :]) & (
                block[:, None, :] <= self._hi[None, :, :]
            )
            out[start : start + chunk] = inside.all(axis=2).any(axis=1)
        return out

    @property
    def joint_size(self) -> int | None:
        """Number of surviving rankings; None for box-form (unrefined) sets."""
        if self.joint_rankings is None:
            return None
        return int(self.joint_rankings.shape[0])


def box_from_neighborhoods(
    nbhd: NeighborhoodSets,
    index_set,
    source_draw: int,
    orientation: str = ASCENDING,
) -> RankBox:
    """One draw's rank constraints as a box, restricted to ``index_set``.

    In ascending orientation the interval for k is
    ``[ |below[k]|+1, K - |above[k]| ]``; descending swaps the roles of the
    two sets (rank 1 is the largest score).
    """
    check_orientation(orientation)
    intervals = rank_interval_from_neighborhoods(nbhd)
    K = nbhd.K
    lo, hi = [], []
    for k in index_set:
        iv = intervals[k]
        if orientation == ASCENDING:
            lo.append(iv.lo)
            hi.append(iv.hi)
        else:
            lo.append(K + 1 - iv.hi)
            hi.append(K + 1 - iv.lo)
    return RankBox(lo=tuple(lo), hi=tuple(hi), source_draw=source_draw)


def assemble_confidence_set(
    accepted,
    K: int,
    index_set=None,
    alpha: float = 0.05,
    metadata: dict | None = None,
    orientation: str = ASCENDING,
    populations=None,
) -> RankConfidenceSet:
    """Collect accepted draws' neighborhood constraints into a confidence set.

    Parameters
    ----------
    accepted : iterable of (NeighborhoodSets, draw_index)
        One entry per noise draw whose statistic passed its acceptance region.
    K : int
        Number of populations.
    index_set : sequence of int, optional
        Population indices to constrain (default all of ``0..K-1``).
    alpha : float
        Nominal level of the acceptance region (metadata only here).
    orientation : {"ascending", "descending"}

    Zero accepted draws yield an empty set carrying a diagnostic instead of an
    exception: the level or draw count was too small to accept anything.
    """
    if index_set is None:
        index_set = tuple(range(K))
    index_set = tuple(sorted(index_set))
    if populations is None:
        populations = tuple(range(K))
    boxes = [
        box_from_neighborhoods(nbhd, index_set, draw_idx, orientation)
        for nbhd, draw_idx in accepted
    ]
    diagnostic = None
    if not boxes:
        diagnostic = (
            "no draws accepted: acceptance region level or draw budget too small"
        )
    return RankConfidenceSet(
        K=K,
        index_set=index_set,
        alpha=alpha,
        orientation=orientation,
        boxes=boxes,
        populations=tuple(populations),
        metadata=dict(metadata or {}),
        diagnostic=diagnostic,
    )


def refine_with_candidate(gamma: RankConfidenceSet, cand: CandidateSet) -> RankConfidenceSet:
    """Intersect a box-form confidence set with a candidate set.

    Keeps exactly the candidate rankings whose ``index_set`` restriction lies
    in some box of ``gamma``; marginals are recomputed from the survivors. An
    empty intersection is legal and reported via ``diagnostic`` together with
    both parents' sizes.
    """
    if cand.size and cand.K != gamma.K:
        raise InvalidInputError(f"K mismatch: gamma K={gamma.K}, candidate K={cand.K}")
    if cand.size and cand.orientation != gamma.orientation:
        raise InvalidInputError(
            f"orientation mismatch: {gamma.orientation} vs {cand.orientation}"
        )
    if cand.size:
        mask = gamma.contains_batch(cand.rankings)
        survivors = cand.rankings[mask]
        counts = cand.counts[mask]
    else:
        survivors = np.empty((0, gamma.K), dtype=int)
        counts = np.empty(0, dtype=int)

    idx = list(gamma.index_set)
    boxes = [
        RankBox(lo=tuple(row[idx]), hi=tuple(row[idx]), source_draw=-1)
        for row in survivors
    ]
    metadata = dict(gamma.metadata)
    metadata.update(
        {
            "candidate_distinct": cand.size,
            "candidate_accepted_draws": cand.accepted_draws,
            "candidate_total_draws": cand.total_draws,
            "budget_c": cand.budget.c,
            "budget_method": cand.budget.method,
            "budget_p_star": cand.budget.p_star,
            "base_boxes": len(gamma.boxes),
        }
    )
    diagnostic = None
    if survivors.shape[0] == 0:
        diagnostic = (
            f"empty refined set: {len(gamma.boxes)} boxes vs "
            f"{cand.size} candidate rankings had no joint member"
        )
    return RankConfidenceSet(
        K=gamma.K,
        index_set=gamma.index_set,
        alpha=gamma.alpha,
        orientation=gamma.orientation,
        boxes=boxes,
        populations=gamma.populations,
        metadata=metadata,
        joint_rankings=survivors,
        joint_counts=counts,
        diagnostic=diagnostic,
    )


@dataclass
class PipelineResult:
    """Everything a model pipeline produces.

    ``refined`` is the final confidence set (base intersected with the
    candidate set), ``base`` the union-of-boxes set before refinement.
    """

    refined: RankConfidenceSet
    base: RankConfidenceSet
    candidates: CandidateSet | None
    diagnostics: dict = field(default_factory=dict)
