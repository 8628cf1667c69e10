"""Model-agnostic rank mathematics.

Everything here operates on plain score vectors (1-D float arrays) and integer
rank vectors. Ranks are 1-based and carry an explicit orientation:

* ``ascending``  -- rank 1 is the smallest score (internal convention),
* ``descending`` -- rank 1 is the largest score (application tables).

Ties are broken deterministically by population index (the lower index gets
the smaller rank), so a rank vector is always a permutation of ``1..K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleNeighborhoodError, InvalidInputError

ASCENDING = "ascending"
DESCENDING = "descending"
_ORIENTATIONS = (ASCENDING, DESCENDING)


def as_scores(values, name="scores") -> np.ndarray:
    """Validate and return a score vector as a 1-D float array (K >= 2)."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise InvalidInputError(f"{name} needs at least two populations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def check_orientation(orientation: str) -> str:
    if orientation not in _ORIENTATIONS:
        raise InvalidInputError(
            f"orientation must be one of {_ORIENTATIONS}, got {orientation!r}"
        )
    return orientation


def rank_of(theta, orientation: str = ASCENDING) -> np.ndarray:
    """Rank the entries of a score vector.

    Ascending: ``r_k = 1 + #{i != k : theta_i < theta_k}``; descending swaps the
    inequality (rank 1 is the largest score). Ties go to the lower index in
    both orientations, via a stable sort.

    Parameters
    ----------
    theta : array-like of shape (K,)
        Finite latent scores.
    orientation : {"ascending", "descending"}

    Returns
    -------
    np.ndarray of int
        A permutation of ``1..K``.
    """
    arr = as_scores(theta, "theta")
    check_orientation(orientation)
    key = arr if orientation == ASCENDING else -arr
    order = np.argsort(key, kind="stable")
    ranks = np.empty(arr.size, dtype=int)
    ranks[order] = np.arange(1, arr.size + 1)
    return ranks


def rank_of_batch(thetas: np.ndarray, orientation: str = ASCENDING) -> np.ndarray:
    """Row-wise :func:`rank_of` for a (V, K) matrix of score vectors."""
    arr = np.asarray(thetas, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise InvalidInputError(f"expected a (V, K) matrix with K >= 2, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("score draws contain non-finite values")
    check_orientation(orientation)
    key = arr if orientation == ASCENDING else -arr
    order = np.argsort(key, axis=1, kind="stable")
    ranks = np.empty(arr.shape, dtype=int)
    rows = np.arange(arr.shape[0])[:, None]
    ranks[rows, order] = np.arange(1, arr.shape[1] + 1)[None, :]
    return ranks


@dataclass(frozen=True)
class RankInterval:
    """Integer bounds ``lo <= true rank <= hi`` for one population."""

    population: object
    lo: int
    hi: int

    def __post_init__(self):
        if not (1 <= self.lo <= self.hi):
            raise InvalidInputError(
                f"rank interval for {self.population!r} must satisfy 1 <= lo <= hi, "
                f"got [{self.lo}, {self.hi}]"
            )

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, rank: int) -> bool:
        return self.lo <= rank <= self.hi


@dataclass(frozen=True)
class NeighborhoodSets:
    """Populations provably below / above each population k.

    ``below[k]`` holds indices i with score certainly smaller than k's,
    ``above[k]`` those certainly larger. Both are index sets over ``0..K-1``.
    """

    below: tuple
    above: tuple

    def __post_init__(self):
        if len(self.below) != len(self.above):
            raise InvalidInputError("below and above must have the same length")
        k_count = len(self.below)
        below = tuple(frozenset(s) for s in self.below)
        above = tuple(frozenset(s) for s in self.above)
        for k in range(k_count):
            if k in below[k] or k in above[k]:
                raise InvalidInputError(f"population {k} may not appear in its own sets")
            if below[k] & above[k]:
                raise InvalidInputError(
                    f"population {k}: below and above sets overlap: "
                    f"{sorted(below[k] & above[k])}"
                )
            for s in (below[k], above[k]):
                for i in s:
                    if not 0 <= i < k_count:
                        raise InvalidInputError(f"index {i} out of range for K={k_count}")
        object.__setattr__(self, "below", below)
        object.__setattr__(self, "above", above)

    @property
    def K(self) -> int:
        return len(self.below)


def rank_interval_from_neighborhoods(
    nbhd,
    K: int | None = None,
    populations=None,
) -> list[RankInterval]:
    """Turn neighborhood sets into per-population rank intervals.

    For each k the ascending-orientation interval is
    ``[ |below[k]| + 1 , K - |above[k]| ]``. Accepts a validated
    :class:`NeighborhoodSets` or a raw ``(below, above)`` pair of
    equal-length set sequences (whose consistency is not assumed).

    Raises
    ------
    InfeasibleNeighborhoodError
        If some k has ``|below[k]| + |above[k]| >= K`` (lo > hi), naming k.
        Unreachable from a validated NeighborhoodSets, whose disjointness
        invariants cap the two sets at K-1 elements total.
    """
    if isinstance(nbhd, NeighborhoodSets):
        below, above = nbhd.below, nbhd.above
    else:
        below, above = nbhd
        if len(below) != len(above):
            raise InvalidInputError("below and above must have the same length")
    if K is None:
        K = len(below)
    elif K != len(below):
        raise InvalidInputError(f"K={K} does not match neighborhood sets of size {len(below)}")
    if populations is None:
        populations = list(range(K))
    intervals = []
    for k in range(K):
        lo = len(below[k]) + 1
        hi = K - len(above[k])
        if lo > hi:
            raise InfeasibleNeighborhoodError(populations[k], lo, hi)
        intervals.append(RankInterval(populations[k], lo, hi))
    return intervals


def discordance(theta_hat, theta_star) -> int:
    """Count ordered pairs whose ordering flips between two score vectors.

    ``sum over i != j of 1{(hat_i - hat_j)(star_i - star_j) < 0}``. The count
    is always even (each unordered flip is seen twice) and lies in
    ``[0, K(K-1)]``. Ties contribute nothing (strict inequality).
    """
    a = as_scores(theta_hat, "theta_hat")
    b = as_scores(theta_star, "theta_star")
    if a.size != b.size:
        raise InvalidInputError(f"length mismatch: {a.size} vs {b.size}")
    da = a[:, None] - a[None, :]
    db = b[:, None] - b[None, :]
    return int(np.count_nonzero(da * db < 0))


def discordance_batch(theta_hat, theta_stars, chunk: int = 512) -> np.ndarray:
    """Discordance of each row of a (V, K) draw matrix against ``theta_hat``."""
    a = as_scores(theta_hat, "theta_hat")
    stars = np.asarray(theta_stars, dtype=float)
    if stars.ndim != 2 or stars.shape[1] != a.size:
        raise InvalidInputError(
            f"draw matrix must have shape (V, {a.size}), got {stars.shape}"
        )
    da = np.sign(a[:, None] - a[None, :])
    out = np.empty(stars.shape[0], dtype=int)
    for start in range(0, stars.shape[0], chunk):
        block = stars[start : start + chunk]
        db = block[:, :, None] - block[:, None, :]
        out[start : start + chunk] = np.count_nonzero(
            da[None, :, :] * db < 0, axis=(1, 2)
        )
    return out


def normalized_discordance(theta_hat, ranks) -> float:
    """Unordered-pair discordance between scores and a rank vector, in [0, 1/2].

    ``g = (1 / (2 K_pairs)) * sum over i<j of 1{(hat_i - hat_j)(r_i - r_j) < 0}``
    with ``r`` read in ascending orientation and ``K_pairs = K(K-1)/2``.
    """
    a = as_scores(theta_hat, "theta_hat")
    r = np.asarray(ranks, dtype=float)
    if r.shape != a.shape:
        raise InvalidInputError(f"length mismatch: {a.size} vs {r.size}")
    iu = np.triu_indices(a.size, k=1)
    da = (a[:, None] - a[None, :])[iu]
    dr = (r[:, None] - r[None, :])[iu]
    k_pairs = a.size * (a.size - 1) // 2
    return float(np.count_nonzero(da * dr < 0)) / (2.0 * k_pairs)
