"""Diagnostic tail and size bounds for the discordance filter.

These calculators turn separation/noise summaries into (a) an upper bound on
the probability that the true score vector is rejected by a budget ``c`` and
(b) an upper bound on the expected number of distinct rankings the filter
lets through. They are diagnostics: cheap to evaluate, conservative by
construction.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import InvalidInputError

_VARIANTS = ("markov", "chebyshev", "subgaussian", "subgaussian_uniform")


def discordance_exceedance_bound(gaps, scales, c, variant: str, K: int | None = None) -> float:
    """Upper bound on ``P{Disc(estimate, truth) >= c}``, clamped to [0, 1].

    ``gaps`` and ``scales`` describe the unordered pairs ``i < j``; sums run
    over ordered pairs (twice the unordered sum). Variants:

    * ``markov``: ``scales`` are the pairwise flip probabilities ``p_ij``;
      bound ``(1/c) * sum_(i!=j) p_ij``.
    * ``chebyshev``: ``scales`` are variance bounds ``m_ij^2`` on the pairwise
      estimation error; bound ``(1/c) * sum m_ij^2 / gap_ij^2``.
    * ``subgaussian``: ``scales`` are sub-Gaussian proxies ``tau_ij``;
      bound ``(1/c) * sum 2 exp(-gap_ij^2 / (2 tau_ij^2))``.
    * ``subgaussian_uniform``: scalar ``gaps = min gap``, ``scales = tau``,
      ``K`` required; bound ``(2 K (K-1) / c) * exp(-gap^2 / (2 tau^2))``.
    """
    if variant not in _VARIANTS:
        raise InvalidInputError(f"variant must be one of {_VARIANTS}, got {variant!r}")
    if c <= 0:
        raise InvalidInputError(f"c must be positive, got {c}")

    if variant == "subgaussian_uniform":
        if K is None or K < 2:
            raise InvalidInputError("subgaussian_uniform needs K >= 2")
        gap = float(gaps)
        tau = float(scales)
        if gap <= 0 or tau <= 0:
            raise InvalidInputError("gap and tau must be positive")
        raw = (2.0 * K * (K - 1) / c) * math.exp(-(gap**2) / (2.0 * tau**2))
        return min(raw, 1.0)

    s = np.asarray(scales, dtype=float)
    if s.size == 0:
        raise InvalidInputError("scales must be nonempty")
    if variant == "markov":
        if np.any(s < 0) or np.any(s > 1):
            raise InvalidInputError("markov flip probabilities must lie in [0,1]")
        raw = 2.0 * float(np.sum(s)) / c
        return min(raw, 1.0)

    g = np.asarray(gaps, dtype=float)
    if g.shape != s.shape:
        raise InvalidInputError("gaps and scales must have the same shape")
    if np.any(g <= 0):
        raise InvalidInputError("gaps must be positive where divided by")
    if variant == "chebyshev":
        if np.any(s < 0):
            raise InvalidInputError("variance bounds must be nonnegative")
        raw = 2.0 * float(np.sum(s / g**2)) / c
    else:  # subgaussian
        if np.any(s <= 0):
            raise InvalidInputError("sub-Gaussian proxies must be positive")
        raw = 2.0 * float(np.sum(2.0 * np.exp(-(g**2) / (2.0 * s**2)))) / c
    return min(raw, 1.0)


def _inversion_distribution(K: int) -> np.ndarray:
    """counts[d] = number of K-permutations at Kendall distance d from a fixed one."""
    perms = np.array(list(itertools.permutations(range(K))), dtype=int)
    iu, ju = np.triu_indices(K, k=1)
    inv = np.count_nonzero(perms[:, iu] > perms[:, ju], axis=1)
    return np.bincount(inv, minlength=K * (K - 1) // 2 + 1)


def candidate_size_bound(
    delta_min: float,
    tau_bar: float,
    v_bar: float,
    c: float,
    draws: int,
    K: int,
    w0: int,
) -> tuple[float, float | None]:
    """Cutoff and expected-size bound for the filtered candidate set.

    Returns ``(g_tilde, size_bound)`` where rankings with normalized
    discordance at most ``g_tilde`` count fully toward the expected size and
    the rest contribute an exponentially suppressed tail:

    ``rate = delta_min^2 * K_pairs / (w0 * tau_bar^2)``
    ``A = (c/2 + 1) * (c/2)^(c/2) * (1 + c + c^2 exp(-delta_min^2/(8 v_bar^2)))``
    ``g_tilde = (c/2 + log A + log draws) / rate``
    ``size_bound = #{R : g(R) <= g_tilde}
                   + sum over g(R) > g_tilde of exp(-rate * (g(R) - g_tilde))``

    The deterministic term enumerates the permutation space, so the bound is
    evaluated only for K <= 8; beyond that ``size_bound`` is None and only the
    cutoff is reported.
    """
    if delta_min <= 0 or tau_bar <= 0 or v_bar <= 0:
        raise InvalidInputError("delta_min, tau_bar, v_bar must be positive")
    if draws < 1:
        raise InvalidInputError(f"draws must be >= 1, got {draws}")
    if K < 2:
        raise InvalidInputError(f"K must be >= 2, got {K}")
    if not 1 <= w0 <= K:
        raise InvalidInputError(f"w0 must lie in [1, K], got {w0}")
    if c < 0:
        raise InvalidInputError(f"c must be >= 0, got {c}")

    k_pairs = K * (K - 1) // 2
    rate = delta_min**2 * k_pairs / (w0 * tau_bar**2)
    half = c / 2.0
    # (c/2)^(c/2) with the 0^0 = 1 convention at c = 0
    power = 1.0 if half == 0 else half**half
    amp = (half + 1.0) * power * (
        1.0 + c + c**2 * math.exp(-(delta_min**2) / (8.0 * v_bar**2))
    )
    g_tilde = (half + math.log(amp) + math.log(draws)) / rate

    if K > 8:
        return g_tilde, None

    counts = _inversion_distribution(K)
    g_values = np.arange(counts.size) / (2.0 * k_pairs)
    inside = g_values <= g_tilde
    deterministic = float(counts[inside].sum())
    tail = float(
        np.sum(counts[~inside] * np.exp(-rate * (g_values[~inside] - g_tilde)))
    )
    return g_tilde, deterministic + tail
