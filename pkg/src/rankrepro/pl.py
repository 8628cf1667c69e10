"""Top-choice inference on 3-item subsets under the Plackett-Luce model.

Each trial presents a sorted item triple and observes a single top choice.
One uniform noise value per trial pins the choice through a cumulative-sum
sandwich; writing the sandwich as linear inequalities in the worth vector
gives two constraint rows per trial, and the minimum-norm simplex point
satisfying all rows is the score draw. Within a subset's repeated trials the
noise order statistics bound worth ratios, yielding pairwise order
indicators, and the acceptance region is a product of order-statistic bands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import BudgetSpec, build_candidate_set
from .confsets import PipelineResult, assemble_confidence_set, refine_with_candidate
from .errors import (
    ConvergenceError,
    EstimationError,
    InfeasibleProblemError,
    InvalidInputError,
)
from .ranks import DESCENDING, NeighborhoodSets, discordance_batch
from .rng import spawn_rngs
from .solvers import beta_order_statistic_quantile, solve_min_norm_qp

SUBSET_SIZE = 3  # all ratio-bound case tables are written for item triples


@dataclass(frozen=True)
class TopChoiceTrial:
    """One presentation of a sorted item triple with its observed top choice."""

    subset: tuple
    chosen: int

    def __post_init__(self):
        s = tuple(int(j) for j in self.subset)
        if len(s) != SUBSET_SIZE or len(set(s)) != SUBSET_SIZE:
            raise InvalidInputError(f"subset must be {SUBSET_SIZE} distinct items, got {s}")
        if list(s) != sorted(s):
            raise InvalidInputError(f"subset must be sorted ascending, got {s}")
        if self.chosen not in s:
            raise InvalidInputError(f"chosen item {self.chosen} not in subset {s}")
        object.__setattr__(self, "subset", s)

    @property
    def chosen_position(self) -> int:
        """0-based position of the chosen item within the sorted subset."""
        return self.subset.index(self.chosen)


@dataclass(frozen=True)
class PlInstance:
    """A collection of top-choice trials over K items."""

    K: int
    trials: tuple
    ragged: bool = False

    def __post_init__(self):
        trials = tuple(self.trials)
        if self.K < SUBSET_SIZE:
            raise InvalidInputError(f"K must be >= {SUBSET_SIZE}, got {self.K}")
        for t in trials:
            if max(t.subset) >= self.K or min(t.subset) < 0:
                raise InvalidInputError(f"trial subset {t.subset} out of range for K={self.K}")
        object.__setattr__(self, "trials", trials)
        groups: dict = {}
        for idx, t in enumerate(trials):
            groups.setdefault(t.subset, []).append(idx)
        object.__setattr__(self, "_groups", groups)
        reps = {len(v) for v in groups.values()}
        if not self.ragged and len(reps) > 1:
            raise InvalidInputError(
                f"subsets have unequal repetition counts {sorted(reps)}; "
                "set ragged=True to accept"
            )

    @property
    def T(self) -> int:
        return len(self.trials)

    @property
    def repetitions(self) -> int | None:
        """Common per-subset repetition count, or None when ragged."""
        reps = {len(v) for v in self._groups.values()}
        return reps.pop() if len(reps) == 1 else None

    def subset_groups(self) -> dict:
        """subset -> list of trial indices, in input order."""
        return {s: list(v) for s, v in self._groups.items()}


def pl_simulate_trials(theta, subsets, repetitions: int, rng: np.random.Generator):
    """Generate top-choice trials and return them with the generating noise.

    For each trial the chosen item is the unique position m with
    ``sum of worths before m < u * subset total <= sum through m``.
    Worths are normalized to the simplex on entry.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0):
        raise InvalidInputError("worths must be positive")
    th = th / th.sum()
    trials = []
    u_all = []
    for subset in subsets:
        s = tuple(sorted(int(j) for j in subset))
        w = th[list(s)]
        cum = np.cumsum(w)
        total = cum[-1]
        u = rng.uniform(size=repetitions)
        pos = np.searchsorted(cum, u * total, side="left")
        pos = np.minimum(pos, SUBSET_SIZE - 1)
        for r in range(repetitions):
            trials.append(TopChoiceTrial(subset=s, chosen=s[int(pos[r])]))
        u_all.append(u)
    inst = PlInstance(K=th.size, trials=tuple(trials))
    return inst, np.concatenate(u_all)


def pl_constraint_matrix(inst: PlInstance, u) -> np.ndarray:
    """2T x K constraint rows encoding the choice sandwich for a noise vector.

    For trial t with chosen position m (0-based) and noise u_t, row 2t has
    ``1 - u_t`` on the items before the choice and ``-u_t`` on the rest of the
    subset; row 2t+1 has ``u_t - 1`` through the choice and ``u_t`` after.
    ``G theta <= 0`` then reproduces the sandwich.
    """
    uu = np.asarray(u, dtype=float)
    if uu.shape != (inst.T,):
        raise InvalidInputError(f"noise must have length T={inst.T}, got {uu.shape}")
    G = np.zeros((2 * inst.T, inst.K))
    for t, trial in enumerate(inst.trials):
        s = list(trial.subset)
        m = trial.chosen_position
        ut = uu[t]
        G[2 * t, s] = -ut
        G[2 * t, s[:m]] = 1.0 - ut
        G[2 * t + 1, s] = ut
        G[2 * t + 1, s[: m + 1]] = ut - 1.0
    return G


def pl_theta_star(inst: PlInstance, u, tol: float = 1e-6) -> np.ndarray:
    """Minimum-norm simplex worth vector consistent with a noise draw.

    Raises :class:`InfeasibleProblemError` when the draw contradicts the
    observed choices; pipelines discard and count such draws.
    """
    G = pl_constraint_matrix(inst, u)
    return solve_min_norm_qp(G, K=inst.K, tol=tol).theta


def pl_pairwise_indicators(counts, repetitions: int, u_sorted) -> dict:
    """Order conclusions for the three item pairs of one subset.

    ``counts = (y1, y2, y3)`` are the within-subset win totals of the sorted
    items, ``u_sorted`` the subset's ascending noise values. Subscripts that
    over/underflow use the sentinels ``u_(0) = 0`` and ``u_(L+1) = 1``. The
    result maps position pairs to ``(first_below, first_above)`` booleans; a
    nonpositive denominator concludes nothing.
    """
    y1, y2, y3 = (int(c) for c in counts)
    L = int(repetitions)
    if y1 + y2 + y3 != L:
        raise InvalidInputError(f"counts {counts} do not sum to repetitions {L}")
    us = np.asarray(u_sorted, dtype=float)
    if us.shape != (L,):
        raise InvalidInputError(f"u_sorted must have length {L}")

    def u_at(idx: int) -> float:
        if idx <= 0:
            return 0.0
        if idx >= L + 1:
            return 1.0
        return float(us[idx - 1])

    def ratio_lt_one(num: float, den: float) -> bool:
        return den > 0.0 and num < den

    def ratio_gt_one(num: float, den: float) -> bool:
        return den > 0.0 and num > den

    a, b, c = u_at(y1), u_at(y1 + 1), u_at(y1 + y2)
    d, e = u_at(y1 + y2 + 1), u_at(L)
    u1 = u_at(1)

    return {
        (0, 1): (
            ratio_lt_one(b, c - b),  # worth(j1) < worth(j2)
            ratio_gt_one(a - u1, d - a),
        ),
        (0, 2): (
            ratio_lt_one(b, e - d),
            ratio_gt_one(a - u1, 1.0 - c),
        ),
        (1, 2): (
            ratio_lt_one(d - a, e - d),
            ratio_gt_one(c - b, 1.0 - c),
        ),
    }


def _subset_counts(inst: PlInstance, subset, trial_idx) -> tuple:
    wins = {j: 0 for j in subset}
    for t in trial_idx:
        wins[inst.trials[t].chosen] += 1
    return tuple(wins[j] for j in subset)


def pl_neighborhoods(inst: PlInstance, u) -> NeighborhoodSets:
    """Aggregate per-subset indicators into below/above sets.

    A pair with contradictory evidence (forced in both directions, whether by
    one subset or different ones) is dropped from both sets.
    """
    uu = np.asarray(u, dtype=float)
    if uu.shape != (inst.T,):
        raise InvalidInputError(f"noise must have length T={inst.T}")
    greater: set = set()  # (a, b) with worth(a) > worth(b) concluded
    for subset, idx in inst.subset_groups().items():
        counts = _subset_counts(inst, subset, idx)
        u_sorted = np.sort(uu[idx])
        table = pl_pairwise_indicators(counts, len(idx), u_sorted)
        for (p, q), (first_below, first_above) in table.items():
            if first_below:
                greater.add((subset[q], subset[p]))
            if first_above:
                greater.add((subset[p], subset[q]))
    conflicted = {(a, b) for (a, b) in greater if (b, a) in greater}
    greater -= conflicted
    below = [frozenset(i for (kk, i) in greater if kk == k) for k in range(inst.K)]
    above = [frozenset(kk for (kk, i) in greater if i == k) for k in range(inst.K)]
    return NeighborhoodSets(below=tuple(below), above=tuple(above))


def _band_table(L: int, alpha_each: float) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array(
        [beta_order_statistic_quantile(t, L, alpha_each / 2.0) for t in range(1, L + 1)]
    )
    hi = np.array(
        [
            beta_order_statistic_quantile(t, L, 1.0 - alpha_each / 2.0)
            for t in range(1, L + 1)
        ]
    )
    return lo, hi


def pl_band_membership(
    inst: PlInstance, u, alpha: float, bonferroni: bool = True, _cache: dict | None = None
) -> bool:
    """Accept a noise draw when every within-subset order statistic is central.

    Each subset contributes one band per order statistic (a Beta quantile
    pair). With ``bonferroni=True`` (default) the per-band level is alpha
    divided by the total number of bands, giving joint level at least
    1 - alpha; ``bonferroni=False`` is the literal per-band-alpha reading.
    """
    uu = np.asarray(u, dtype=float)
    if uu.shape != (inst.T,):
        raise InvalidInputError(f"noise must have length T={inst.T}")
    groups = inst.subset_groups()
    n_bands = sum(len(idx) for idx in groups.values())
    alpha_each = alpha / n_bands if bonferroni else alpha
    cache = _cache if _cache is not None else {}
    for subset, idx in groups.items():
        L = len(idx)
        if (L, alpha_each) not in cache:
            cache[(L, alpha_each)] = _band_table(L, alpha_each)
        lo, hi = cache[(L, alpha_each)]
        u_sorted = np.sort(uu[idx])
        if np.any(u_sorted <= lo) or np.any(u_sorted >= hi):
            return False
    return True


def _strongly_connected_components(n_nodes: int, edges: set) -> list[list[int]]:
    """Kosaraju's two-pass SCC on an adjacency-set digraph."""
    fwd = {v: set() for v in range(n_nodes)}
    rev = {v: set() for v in range(n_nodes)}
    for a, b in edges:
        fwd[a].add(b)
        rev[b].add(a)

    order, seen = [], [False] * n_nodes
    for start in range(n_nodes):
        if seen[start]:
            continue
        stack = [(start, iter(fwd[start]))]
        seen[start] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if not seen[nxt]:
                    seen[nxt] = True
                    stack.append((nxt, iter(fwd[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()

    comp = [-1] * n_nodes
    components = []
    for start in reversed(order):
        if comp[start] != -1:
            continue
        members = [start]
        comp[start] = len(components)
        queue = [start]
        while queue:
            node = queue.pop()
            for nxt in rev[node]:
                if comp[nxt] == -1:
                    comp[nxt] = len(components)
                    members.append(nxt)
                    queue.append(nxt)
        components.append(sorted(members))
    return components


def pl_mle_theta_hat(
    inst: PlInstance,
    tol: float = 1e-9,
    max_iter: int = 20000,
    parameterization: str = "worth",
) -> np.ndarray:
    """Top-choice maximum-likelihood worths by minorize-maximize iteration.

    The update ``worth_j <- wins_j / sum over trials containing j of
    (1 / subset worth total)`` never decreases the likelihood; iteration stops
    at relative tolerance. Requires the win digraph (chosen item beats its
    subset partners) to be strongly connected, otherwise the MLE diverges and
    an error naming the components is raised.

    ``parameterization="log_worth"`` returns the log of the normalized worths
    (the convention where choice odds are exponential in the score).
    """
    if parameterization not in ("worth", "log_worth"):
        raise InvalidInputError(f"unknown parameterization {parameterization!r}")
    if inst.T == 0:
        raise EstimationError("no trials to estimate from")
    edges = set()
    for t in inst.trials:
        for j in t.subset:
            if j != t.chosen:
                edges.add((t.chosen, j))
    comps = _strongly_connected_components(inst.K, edges)
    if len(comps) > 1:
        raise EstimationError(
            f"comparison graph is not strongly connected; components: {comps}"
        )

    subsets = np.array([t.subset for t in inst.trials], dtype=int)
    wins = np.bincount([t.chosen for t in inst.trials], minlength=inst.K).astype(float)
    theta = np.full(inst.K, 1.0 / inst.K)
    for _ in range(max_iter):
        totals = theta[subsets].sum(axis=1)
        denom = np.zeros(inst.K)
        np.add.at(denom, subsets.ravel(), np.repeat(1.0 / totals, SUBSET_SIZE))
        new = wins / denom
        new /= new.sum()
        if np.max(np.abs(new - theta)) <= tol:
            theta = new
            break
        theta = new
    else:
        raise EstimationError(f"MM did not converge within {max_iter} iterations")
    return np.log(theta) if parameterization == "log_worth" else theta


def pl_log_likelihood(inst: PlInstance, theta) -> float:
    """Top-choice log-likelihood, used by the MM monotonicity certificate."""
    th = np.asarray(theta, dtype=float)
    subsets = np.array([t.subset for t in inst.trials], dtype=int)
    chosen = np.array([t.chosen for t in inst.trials], dtype=int)
    return float(np.sum(np.log(th[chosen]) - np.log(th[subsets].sum(axis=1))))


def pl_pipeline(
    inst: PlInstance,
    alpha: float = 0.05,
    budget: BudgetSpec | None = None,
    candidate_draws: int = 500,
    seed: int = 0,
    acceptance_draws: int | None = None,
    bonferroni: bool = True,
    index_set=None,
    orientation: str = DESCENDING,
) -> PipelineResult:
    """Order-statistic acceptance, indicator boxes, QP candidates, refinement.

    Draws that make the constraint system infeasible (incompatible with the
    observed choices) are discarded and counted.
    """
    budget = budget or BudgetSpec.none()
    acceptance_draws = acceptance_draws or candidate_draws
    rng_accept, rng_cand = spawn_rngs(seed, 2)

    band_cache: dict = {}
    accepted = []
    for b in range(acceptance_draws):
        u = rng_accept.uniform(size=inst.T)
        if pl_band_membership(inst, u, alpha, bonferroni=bonferroni, _cache=band_cache):
            accepted.append((pl_neighborhoods(inst, u), b))

    metadata = {
        "model": "pl",
        "alpha": alpha,
        "seed": seed,
        "region_draws": acceptance_draws,
        "region_accepted": len(accepted),
        "bonferroni": bonferroni,
    }
    populations = tuple(f"item{k+1}" for k in range(inst.K))
    gamma = assemble_confidence_set(
        accepted,
        K=inst.K,
        index_set=index_set,
        alpha=alpha,
        metadata=metadata,
        orientation=orientation,
        populations=populations,
    )

    infeasible = 0
    solver_failures = 0
    feasible = 0
    if budget.skip_refinement:
        cand, refined = None, gamma
    else:
        theta_hat = pl_mle_theta_hat(inst)
        stars = []
        for _ in range(candidate_draws):
            u = rng_cand.uniform(size=inst.T)
            try:
                stars.append(pl_theta_star(inst, u))
            except InfeasibleProblemError:
                infeasible += 1
            except ConvergenceError:
                # feasibility undetermined for this draw; excluded and counted
                solver_failures += 1
        stars = np.array(stars) if stars else np.empty((0, inst.K))
        feasible = int(stars.shape[0])

        if feasible:
            resolved = budget.resolve(
                inst.K,
                disc_values=(
                    discordance_batch(theta_hat, stars)
                    if budget.method == "percentile"
                    else None
                ),
            )
            cand = build_candidate_set(theta_hat, stars, resolved, orientation)
        else:
            from .candidates import CandidateSet

            resolved = budget.resolve(inst.K)
            cand = CandidateSet(
                rankings=np.empty((0, inst.K), dtype=int),
                counts=np.empty(0, dtype=int),
                accepted_draws=0,
                total_draws=candidate_draws,
                budget=resolved,
                orientation=orientation,
            )
        refined = refine_with_candidate(gamma, cand)
    return PipelineResult(
        refined=refined,
        base=gamma,
        candidates=cand,
        diagnostics={
            "region_accepted": len(accepted),
            "infeasible_draws": infeasible,
            "solver_failures": solver_failures,
            "feasible_draws": feasible,
        },
    )
