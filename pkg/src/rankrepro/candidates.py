"""Discordance budgets and the filtered candidate set of rank vectors.

A candidate set keeps the distinct rankings induced by noise draws whose
score vectors disagree with the observed ordering on fewer than ``c`` ordered
pairs. Two bookkeeping conventions coexist and are kept explicit to avoid
factor-2 slips: ``K_pairs = K(K-1)/2`` counts unordered pairs, while the
discordance statistic counts ordered pairs (maximum ``K(K-1) = 2 K_pairs``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .ranks import ASCENDING, as_scores, check_orientation, discordance_batch, rank_of_batch


def k_pairs_of(K: int) -> int:
    return K * (K - 1) // 2


@dataclass(frozen=True)
class DiscordanceBudget:
    """Acceptance threshold for candidate-set membership (strict ``Disc < c``)."""

    c: int
    method: str
    p_star: float | None = None
    k_pairs: int | None = None

    def __post_init__(self):
        if self.c < 0:
            raise InvalidInputError(f"budget c must be >= 0, got {self.c}")
        if self.method in ("snr", "pstar"):
            if self.p_star is None or self.k_pairs is None:
                raise InvalidInputError(f"method {self.method!r} requires p_star and k_pairs")
            if self.c != math.floor(self.p_star * self.k_pairs):
                raise InvalidInputError(
                    f"c={self.c} inconsistent with floor(p_star * k_pairs)"
                    f"={math.floor(self.p_star * self.k_pairs)}"
                )


def budget_from_pstar(p_star: float, K: int) -> DiscordanceBudget:
    """Budget ``c = floor(p_star * K_pairs)`` from a pair-fraction target."""
    if p_star < 0:
        raise InvalidInputError(f"p_star must be >= 0, got {p_star}")
    kp = k_pairs_of(K)
    return DiscordanceBudget(
        c=math.floor(p_star * kp), method="pstar", p_star=float(p_star), k_pairs=kp
    )


def manual_budget(c: int, K: int | None = None) -> DiscordanceBudget:
    kp = k_pairs_of(K) if K is not None else None
    pstar = c / kp if kp else None
    return DiscordanceBudget(c=int(c), method="manual", p_star=pstar, k_pairs=kp)


def choose_c_percentile(disc_values, target_q: float, K: int | None = None) -> DiscordanceBudget:
    """Smallest integer budget exceeding the empirical ``target_q`` quantile.

    Chosen so that the fraction of the supplied discordance values strictly
    below ``c`` is at least ``target_q`` (matching the strict inequality of the
    candidate filter).
    """
    vals = np.asarray(disc_values)
    if vals.size == 0:
        raise InvalidInputError("disc_values must be nonempty")
    if not 0.0 < target_q < 1.0:
        raise InvalidInputError(f"target_q must lie in (0,1), got {target_q}")
    if np.any(vals < 0):
        raise InvalidInputError("discordance values must be nonnegative")
    srt = np.sort(vals)
    # lowest order statistic q_hat with empirical CDF >= target_q
    idx = max(int(math.ceil(target_q * srt.size)) - 1, 0)
    c = int(math.floor(srt[idx])) + 1
    kp = k_pairs_of(K) if K is not None else None
    return DiscordanceBudget(c=c, method="percentile", p_star=None, k_pairs=kp)


def choose_c_snr(gaps, scales, K: int, multiplier: float = 1.3) -> DiscordanceBudget:
    """Data-adaptive budget from the minimum pairwise signal-to-noise ratio.

    ``SNR_min = min |gap_ij| / scale_ij`` over the supplied pairs; the expected
    fraction of flipped pairs is bounded by ``exp(-SNR_min^2 / 2)``, inflated
    by ``multiplier`` (default 1.3) and clamped to [0, 1]:
    ``c = floor(p_star * K_pairs)``.
    """
    g = np.asarray(gaps, dtype=float)
    s = np.asarray(scales, dtype=float)
    if g.size == 0 or g.shape != s.shape:
        raise InvalidInputError("gaps and scales must be nonempty and equally shaped")
    if np.any(s <= 0):
        raise InvalidInputError("all scales must be positive")
    if multiplier <= 0:
        raise InvalidInputError(f"multiplier must be positive, got {multiplier}")
    snr_min = float(np.min(np.abs(g) / s))
    p_bar = math.exp(-0.5 * snr_min**2)
    p_star = min(max(multiplier * p_bar, 0.0), 1.0)
    kp = k_pairs_of(K)
    return DiscordanceBudget(
        c=math.floor(p_star * kp), method="snr", p_star=p_star, k_pairs=kp
    )


@dataclass(frozen=True)
class BudgetSpec:
    """How a pipeline should pick its discordance budget.

    ``pstar`` uses the fixed pair-fraction rule, ``percentile`` calibrates on
    the discordance values of the pipeline's own candidate draws, ``snr`` uses
    model-supplied gap/scale estimates, ``manual`` fixes c directly, and
    ``none`` skips candidate refinement altogether (the confidence set is the
    box union alone).
    """

    method: str = "pstar"
    p_star: float = 0.20
    target_q: float = 0.95
    multiplier: float = 1.3
    c: int | None = None

    @classmethod
    def pstar(cls, p_star: float) -> "BudgetSpec":
        return cls(method="pstar", p_star=p_star)

    @classmethod
    def none(cls) -> "BudgetSpec":
        return cls(method="none")

    @property
    def skip_refinement(self) -> bool:
        return self.method == "none"

    @classmethod
    def percentile(cls, target_q: float = 0.95) -> "BudgetSpec":
        return cls(method="percentile", target_q=target_q)

    @classmethod
    def snr(cls, multiplier: float = 1.3) -> "BudgetSpec":
        return cls(method="snr", multiplier=multiplier)

    @classmethod
    def manual(cls, c: int) -> "BudgetSpec":
        return cls(method="manual", c=c)

    def resolve(
        self,
        K: int,
        disc_values=None,
        gaps=None,
        scales=None,
    ) -> DiscordanceBudget:
        if self.method == "pstar":
            return budget_from_pstar(self.p_star, K)
        if self.method == "manual":
            if self.c is None:
                raise InvalidInputError("manual budget needs c")
            return manual_budget(self.c, K)
        if self.method == "percentile":
            if disc_values is None:
                raise InvalidInputError("percentile budget needs discordance values")
            return choose_c_percentile(disc_values, self.target_q, K)
        if self.method == "snr":
            if gaps is None or scales is None:
                raise InvalidInputError(
                    "snr budget needs pairwise gaps and scales; this model does not "
                    "supply them -- use pstar, percentile, or manual"
                )
            resolved = choose_c_snr(gaps, scales, K, self.multiplier)
            if resolved.c == 0:
                # a zero budget rejects even perfectly concordant draws; keep
                # the smallest budget that admits them
                kp = k_pairs_of(K)
                resolved = DiscordanceBudget(
                    c=1, method="snr", p_star=1.0 / kp, k_pairs=kp
                )
            return resolved
        if self.method == "none":
            raise InvalidInputError("a 'none' budget skips refinement and never resolves")
        raise InvalidInputError(f"unknown budget method {self.method!r}")


@dataclass
class CandidateSet:
    """Distinct rankings surviving the discordance filter, with counts."""

    rankings: np.ndarray  # (m, K) int, one distinct ranking per row
    counts: np.ndarray  # (m,) acceptance count per ranking
    accepted_draws: int
    total_draws: int
    budget: DiscordanceBudget
    orientation: str = ASCENDING

    def __post_init__(self):
        self.rankings = np.asarray(self.rankings, dtype=int)
        self.counts = np.asarray(self.counts, dtype=int)
        if self.rankings.ndim != 2:
            self.rankings = self.rankings.reshape(0, 0)

    @property
    def size(self) -> int:
        """Number of distinct rankings."""
        return int(self.rankings.shape[0])

    @property
    def K(self) -> int:
        return int(self.rankings.shape[1]) if self.size else 0

    def contains(self, ranks) -> bool:
        if self.size == 0:
            return False
        r = np.asarray(ranks, dtype=int)
        return bool(np.any(np.all(self.rankings == r[None, :], axis=1)))


def build_candidate_set(
    theta_hat,
    draws,
    budget: DiscordanceBudget,
    orientation: str = ASCENDING,
) -> CandidateSet:
    """Filter score draws by discordance and collect their distinct rankings.

    Parameters
    ----------
    theta_hat : array-like (K,)
        Observed score estimate the draws are compared against.
    draws : array-like (V, K)
        Repro score vectors, one per row.
    budget : DiscordanceBudget
        Acceptance is strict: a draw survives iff ``Disc(theta_hat, draw) < c``.
    orientation : {"ascending", "descending"}
        Orientation of the stored rankings.

    An empty result is legal (e.g. ``c = 0`` accepts nothing) and reported as a
    zero-row set.
    """
    a = as_scores(theta_hat, "theta_hat")
    check_orientation(orientation)
    stars = np.asarray(draws, dtype=float)
    if stars.ndim != 2 or stars.shape[0] == 0:
        raise InvalidInputError(f"draws must be a nonempty (V, K) matrix, got {stars.shape}")
    disc = discordance_batch(a, stars)
    keep = disc < budget.c
    accepted = int(np.count_nonzero(keep))
    if accepted == 0:
        return CandidateSet(
            rankings=np.empty((0, a.size), dtype=int),
            counts=np.empty(0, dtype=int),
            accepted_draws=0,
            total_draws=int(stars.shape[0]),
            budget=budget,
            orientation=orientation,
        )
    ranks = rank_of_batch(stars[keep], orientation)
    uniq, counts = np.unique(ranks, axis=0, return_counts=True)
    return CandidateSet(
        rankings=uniq,
        counts=counts,
        accepted_draws=accepted,
        total_draws=int(stars.shape[0]),
        budget=budget,
        orientation=orientation,
    )
