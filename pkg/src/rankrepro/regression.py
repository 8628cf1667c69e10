"""Team-strength ranking from game-level score differences.

Linear model ``y = X theta + delta 1 + sigma u`` with home/away ``+1/-1``
design rows, Laplace(0,1) game noise, and sum-to-zero identifiability on the
strengths (the all-ones direction is the design's null space, so the
pseudo-inverse solution is exactly the sum-zero least-squares fit). Score
draws recover strengths and scale jointly: given a noise draw the strength
vector is linear in the scale and the scale minimizes the residual sum of
squares by a bracketed scalar search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .candidates import BudgetSpec, build_candidate_set
from .confsets import PipelineResult, assemble_confidence_set, refine_with_candidate
from .errors import DegenerateDesignError, InvalidInputError
from .ranks import DESCENDING, NeighborhoodSets, discordance_batch
from .rng import spawn_rngs
from .solvers import brent_minimize

SUM_ZERO = "sum_zero"
REFERENCE_ZERO = "reference_zero"


@dataclass(frozen=True)
class RegressionInstance:
    """Match-level design (+1 home / -1 away) and observed score differences."""

    design: np.ndarray
    y: np.ndarray
    teams: tuple
    intercept: bool = True
    identifiability: str = SUM_ZERO

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise InvalidInputError(f"design {X.shape} does not match y of length {y.size}")
        if X.shape[0] < 1 or X.shape[1] < 2:
            raise InvalidInputError("need at least one match and two teams")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise InvalidInputError("design and y must be finite")
        if self.identifiability not in (SUM_ZERO, REFERENCE_ZERO):
            raise InvalidInputError(f"unknown identifiability {self.identifiability!r}")
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "y", y)
        teams = self.teams or tuple(f"team{k+1}" for k in range(X.shape[1]))
        if len(teams) != X.shape[1]:
            raise InvalidInputError("teams must match the design's column count")
        object.__setattr__(self, "teams", tuple(teams))

    @property
    def K(self) -> int:
        return self.design.shape[1]

    @property
    def n_matches(self) -> int:
        return self.design.shape[0]


def build_design(matches, teams, intercept: bool = True) -> np.ndarray:
    """+1/-1 design from (home_index, away_index) pairs."""
    K = len(teams)
    X = np.zeros((len(matches), K))
    for row, (h, a) in enumerate(matches):
        if h == a:
            raise InvalidInputError(f"match {row}: a team cannot play itself")
        X[row, h] = 1.0
        X[row, a] = -1.0
    return X


def round_robin_matches(K: int, double: bool = True) -> list[tuple[int, int]]:
    """Round-robin schedule as (home, away) index pairs.

    ``double=True`` is home-and-away: every ordered pair once, K(K-1)
    matches. Single round robin puts the lower index at home.
    """
    if double:
        return [(h, a) for h in range(K) for a in range(K) if h != a]
    return [(h, a) for h in range(K) for a in range(h + 1, K)]


@dataclass(frozen=True)
class RegressionFit:
    """Constrained least-squares fit plus the noise inversion map."""

    theta_hat: np.ndarray
    intercept: float
    A: np.ndarray  # K x n: strength rows of the generalized inverse
    M: np.ndarray  # full coefficient map (including intercept row if any)
    W: np.ndarray  # augmented design the map inverts

    def residual(self, v: np.ndarray) -> np.ndarray:
        """Component of v orthogonal to the fitted column space, (I - P) v."""
        return v - self.W @ (self.M @ v)


def fit_strengths(inst: RegressionInstance) -> RegressionFit:
    """Least-squares strengths under the instance's identifiability constraint.

    For sum-zero the augmented design ``[X, 1]`` has the constant-strength
    direction as its only null direction, so the pseudo-inverse solution is
    the constrained fit. Rank deficiency beyond that direction (for example a
    disconnected schedule) raises :class:`DegenerateDesignError`.
    """
    X = inst.design
    one = np.ones((inst.n_matches, 1))
    if inst.identifiability == SUM_ZERO:
        W = np.hstack([X, one]) if inst.intercept else X
        expected_rank = inst.K - 1 + (1 if inst.intercept else 0)
        if np.linalg.matrix_rank(W) < expected_rank:
            raise DegenerateDesignError(
                "design is rank-deficient beyond the sum-zero null direction "
                "(is the schedule connected?)"
            )
        M = np.linalg.pinv(W)
        coef = M @ inst.y
        theta = coef[: inst.K]
        delta = float(coef[inst.K]) if inst.intercept else 0.0
        A = M[: inst.K]
    else:  # reference_zero: last team's strength pinned at 0
        Xr = X[:, : inst.K - 1]
        W = np.hstack([Xr, one]) if inst.intercept else Xr
        expected_rank = inst.K - 1 + (1 if inst.intercept else 0)
        if np.linalg.matrix_rank(W) < expected_rank:
            raise DegenerateDesignError(
                "design is rank-deficient beyond the reference-zero constraint"
            )
        M_r = np.linalg.pinv(W)
        coef = M_r @ inst.y
        theta = np.concatenate([coef[: inst.K - 1], [0.0]])
        delta = float(coef[inst.K - 1]) if inst.intercept else 0.0
        A = np.vstack([M_r[: inst.K - 1], np.zeros((1, inst.n_matches))])
        M = M_r
    return RegressionFit(theta_hat=theta, intercept=delta, A=A, M=M, W=W)


def ols_theta_hat(inst: RegressionInstance) -> tuple[np.ndarray, float]:
    """Constrained least-squares strengths and home intercept."""
    fit = fit_strengths(inst)
    return fit.theta_hat, fit.intercept


def regression_theta_star(
    inst: RegressionInstance,
    u_star,
    fit: RegressionFit | None = None,
    tol: float = 1e-8,
    max_cycles: int = 5,
) -> tuple[np.ndarray, float]:
    """Joint strength/scale draw for one Laplace noise vector.

    Alternates the closed strength update ``theta(sigma) = M (y - sigma u*)``
    with a bracketed scalar minimization of the residual sum of squares in
    sigma; since the strength update is exact for each sigma the fixed point
    is reached after one pass, and the loop only confirms it.
    """
    fit = fit or fit_strengths(inst)
    u = np.asarray(u_star, dtype=float)
    if u.shape != (inst.n_matches,):
        raise InvalidInputError(f"noise must have length n={inst.n_matches}")
    r_y = fit.residual(inst.y)
    r_u = fit.residual(u)
    nrm_u = float(np.linalg.norm(r_u))
    if nrm_u < 1e-12 * max(1.0, float(np.linalg.norm(u))):
        raise InvalidInputError(
            "noise draw lies in the fitted column space; scale is unidentifiable"
        )

    def rss(sigma: float) -> float:
        d = r_y - sigma * r_u
        return float(d @ d)

    med = np.median(r_y)
    mad = float(np.median(np.abs(r_y - med)))
    hi = max(10.0 * mad, 2.0 * float(np.linalg.norm(r_y)) / nrm_u, 1e-4)
    lo = 1e-6

    sigma = None
    for _ in range(max_cycles):
        sigma_new, _ = brent_minimize(rss, (lo, hi), tol=tol)
        if sigma is not None and abs(sigma_new - sigma) <= tol:
            sigma = sigma_new
            break
        sigma = sigma_new
    theta = (fit.M @ (inst.y - sigma * u))[: inst.K]
    if inst.identifiability == REFERENCE_ZERO:
        theta = np.concatenate([theta[: inst.K - 1], [0.0]])
    return theta, float(sigma)


def regression_neighborhoods(
    inst: RegressionInstance, fit: RegressionFit, u
) -> NeighborhoodSets:
    """Pairwise conclusions where estimate gap and noise gap agree in sign.

    ``i`` is below ``k`` when ``A_k u < A_i u`` and ``theta_hat_k >
    theta_hat_i`` (then the true gap is positive for every positive scale);
    above is symmetric. Equalities conclude nothing.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.n_matches,):
        raise InvalidInputError(f"noise must have length n={inst.n_matches}")
    a = fit.A @ u
    return _neighborhoods_from_projections(fit.theta_hat, a)


def _neighborhoods_from_projections(theta_hat: np.ndarray, a: np.ndarray) -> NeighborhoodSets:
    K = theta_hat.size
    th_gt = theta_hat[:, None] > theta_hat[None, :]  # [k, i]: th_k > th_i
    a_lt = a[:, None] < a[None, :]  # [k, i]: a_k < a_i
    below_ki = th_gt & a_lt
    above_ki = theta_hat[:, None] < theta_hat[None, :]
    above_ki &= a[:, None] > a[None, :]
    below = [frozenset(np.flatnonzero(below_ki[k])) - {k} for k in range(K)]
    above = [frozenset(np.flatnonzero(above_ki[k])) - {k} for k in range(K)]
    return NeighborhoodSets(below=tuple(below), above=tuple(above))


def laplace_band_halfwidth(alpha: float, n: int) -> float:
    """Symmetric per-coordinate Laplace(0,1) band at marginal level (1-alpha)^(1/n).

    Closed form: mass m inside [-c, c] is 1 - exp(-c), so c = -log(1 - m);
    the joint probability of the n-coordinate box is exactly 1 - alpha.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0,1), got {alpha}")
    m = (1.0 - alpha) ** (1.0 / n)
    return -math.log(1.0 - m)


def _snr_scales(inst: RegressionInstance, fit: RegressionFit):
    """Heuristic pairwise gaps/scales for the SNR budget rule."""
    iu, ju = np.triu_indices(inst.K, k=1)
    gaps = (fit.theta_hat[:, None] - fit.theta_hat[None, :])[iu, ju]
    resid = fit.residual(inst.y)
    med = np.median(resid)
    b_hat = max(float(np.median(np.abs(resid - med))) / math.log(2.0), 1e-12)
    diff_norms = np.linalg.norm(fit.A[iu] - fit.A[ju], axis=1)
    scales = b_hat * math.sqrt(2.0) * np.maximum(diff_norms, 1e-12)
    return gaps, scales


def regression_pipeline(
    inst: RegressionInstance,
    alpha: float = 0.05,
    budget: BudgetSpec | None = None,
    acceptance_draws: int = 500,
    candidate_draws: int = 500,
    seed: int = 0,
    index_set=None,
    orientation: str = DESCENDING,
) -> PipelineResult:
    """Coordinatewise Laplace acceptance, box collection, candidate refinement."""
    budget = budget or BudgetSpec.snr()
    rng_accept, rng_cand = spawn_rngs(seed, 2)
    fit = fit_strengths(inst)

    half = laplace_band_halfwidth(alpha, inst.n_matches)
    U = rng_accept.laplace(0.0, 1.0, size=(acceptance_draws, inst.n_matches))
    mask = np.max(np.abs(U), axis=1) <= half
    projections = U @ fit.A.T  # (B, K)
    accepted = [
        (_neighborhoods_from_projections(fit.theta_hat, projections[b]), int(b))
        for b in np.flatnonzero(mask)
    ]

    metadata = {
        "model": "regression",
        "alpha": alpha,
        "seed": seed,
        "region_draws": acceptance_draws,
        "region_accepted": len(accepted),
        "band_halfwidth": half,
    }
    gamma = assemble_confidence_set(
        accepted,
        K=inst.K,
        index_set=index_set,
        alpha=alpha,
        metadata=metadata,
        orientation=orientation,
        populations=inst.teams,
    )

    degenerate = 0
    sigma_mean = None
    if budget.skip_refinement:
        cand, refined = None, gamma
    else:
        stars = np.empty((candidate_draws, inst.K))
        sigmas = np.empty(candidate_draws)
        keep_rows = []
        for v in range(candidate_draws):
            u = rng_cand.laplace(0.0, 1.0, size=inst.n_matches)
            try:
                stars[v], sigmas[v] = regression_theta_star(inst, u, fit=fit)
                keep_rows.append(v)
            except InvalidInputError:
                degenerate += 1
        stars = stars[keep_rows]
        sigma_mean = float(np.mean(sigmas[keep_rows])) if keep_rows else None

        gaps, scales = _snr_scales(inst, fit)
        resolved = budget.resolve(
            inst.K,
            disc_values=(
                discordance_batch(fit.theta_hat, stars)
                if budget.method == "percentile" and stars.shape[0]
                else None
            ),
            gaps=gaps,
            scales=scales,
        )
        cand = build_candidate_set(fit.theta_hat, stars, resolved, orientation)
        refined = refine_with_candidate(gamma, cand)
    return PipelineResult(
        refined=refined,
        base=gamma,
        candidates=cand,
        diagnostics={
            "region_accepted": len(accepted),
            "band_halfwidth": half,
            "degenerate_draws": degenerate,
            "sigma_star_mean": sigma_mean,
        },
    )
