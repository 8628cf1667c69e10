import itertools

import numpy as np
import pytest

from rankrepro import (
    CandidateSet,
    NeighborhoodSets,
    RankBox,
    assemble_confidence_set,
    box_from_neighborhoods,
    build_candidate_set,
    manual_budget,
    rank_of_batch,
    refine_with_candidate,
)

from oracles import permutations_in_boxes


def _empty_nbhd(K):
    return NeighborhoodSets(below=(frozenset(),) * K, above=(frozenset(),) * K)


def _set_from_boxes(lo_rows, hi_rows, K, alpha=0.05, orientation="ascending"):
    boxes = [
        RankBox(lo=tuple(lo), hi=tuple(hi), source_draw=i)
        for i, (lo, hi) in enumerate(zip(lo_rows, hi_rows))
    ]
    from rankrepro.confsets import RankConfidenceSet

    return RankConfidenceSet(
        K=K,
        index_set=tuple(range(K)),
        alpha=alpha,
        orientation=orientation,
        boxes=boxes,
        populations=tuple(range(K)),
    )


def test_single_empty_draw_gives_trivial_marginals():
    K = 6
    gamma = assemble_confidence_set([(_empty_nbhd(K), 0)], K=K)
    for iv in gamma.marginal_intervals():
        assert (iv.lo, iv.hi) == (1, K)


def test_union_of_boxes_semantics():
    # two boxes [1,2] and [2,3] on one coordinate: marginal is [1,3] but a
    # vector must sit inside a single box jointly
    gamma = _set_from_boxes(
        lo_rows=[[1, 1, 1], [2, 1, 1]], hi_rows=[[2, 3, 3], [3, 3, 3]], K=3
    )
    iv = gamma.marginal_intervals()[0]
    assert (iv.lo, iv.hi) == (1, 3)
    assert gamma.contains([1, 2, 3])
    assert gamma.contains([3, 2, 1])


def test_joint_membership_implies_marginal_not_conversely():
    # crafted two-box case: coordinates (1, 1) are marginally fine but no
    # single box holds them jointly
    gamma = _set_from_boxes(
        lo_rows=[[1, 2], [2, 1]], hi_rows=[[1, 2], [2, 1]], K=2
    )
    ivs = gamma.marginal_intervals()
    assert ivs[0].contains(1) and ivs[1].contains(1)
    assert not gamma.contains([1, 1])
    assert gamma.contains([1, 2]) and gamma.contains([2, 1])


def test_membership_matches_constraint_oracle_k4():
    # analytic acceptance: a handful of draws with explicit neighborhoods;
    # every permutation's membership must match the direct existential check
    rng = np.random.default_rng(3)
    K = 4
    accepted = []
    for d in range(6):
        theta = rng.normal(size=K)
        below = [set() for _ in range(K)]
        above = [set() for _ in range(K)]
        for k in range(K):
            for i in range(K):
                if i != k and rng.random() < 0.4:
                    (below if theta[i] < theta[k] else above)[k].add(i)
        accepted.append(
            (NeighborhoodSets(below=tuple(below), above=tuple(above)), d)
        )
    gamma = assemble_confidence_set(accepted, K=K)
    lo_rows = [b.lo for b in gamma.boxes]
    hi_rows = [b.hi for b in gamma.boxes]
    oracle = permutations_in_boxes(lo_rows, hi_rows, K)
    for perm in itertools.permutations(range(1, K + 1)):
        assert gamma.contains(list(perm)) == (perm in oracle)


def test_zero_accepted_draws_flagged():
    gamma = assemble_confidence_set([], K=4)
    assert gamma.is_empty
    assert gamma.diagnostic is not None
    assert gamma.marginal_intervals() == []
    assert not gamma.contains([1, 2, 3, 4])


def test_descending_box_orientation():
    # population 0 certainly above both others: ascending [3,3], descending [1,1]
    nbhd = NeighborhoodSets(below=({1, 2}, set(), set()), above=(set(), set(), set()))
    asc = box_from_neighborhoods(nbhd, (0, 1, 2), 0, "ascending")
    desc = box_from_neighborhoods(nbhd, (0, 1, 2), 0, "descending")
    assert (asc.lo[0], asc.hi[0]) == (3, 3)
    assert (desc.lo[0], desc.hi[0]) == (1, 1)


def test_refine_keeps_exactly_box_members():
    K = 4
    all_perms = np.array(list(itertools.permutations(range(1, K + 1))))
    cand = CandidateSet(
        rankings=all_perms,
        counts=np.ones(len(all_perms), dtype=int),
        accepted_draws=len(all_perms),
        total_draws=len(all_perms),
        budget=manual_budget(99, K),
        orientation="ascending",
    )
    gamma = _set_from_boxes(lo_rows=[[1, 1, 3, 1]], hi_rows=[[2, 2, 4, 4]], K=K)
    refined = refine_with_candidate(gamma, cand)
    oracle = permutations_in_boxes([[1, 1, 3, 1]], [[2, 2, 4, 4]], K)
    assert {tuple(r) for r in refined.joint_rankings} == oracle
    # marginals recomputed from survivors
    ivs = refined.marginal_intervals()
    survivors = np.array(sorted(oracle))
    for k in range(K):
        assert ivs[k].lo == survivors[:, k].min()
        assert ivs[k].hi == survivors[:, k].max()


def test_refine_empty_candidate_is_empty():
    gamma = _set_from_boxes(lo_rows=[[1, 1]], hi_rows=[[2, 2]], K=2)
    cand = CandidateSet(
        rankings=np.empty((0, 2), dtype=int),
        counts=np.empty(0, dtype=int),
        accepted_draws=0,
        total_draws=10,
        budget=manual_budget(0, 2),
        orientation="ascending",
    )
    refined = refine_with_candidate(gamma, cand)
    assert refined.joint_size == 0
    assert refined.diagnostic is not None
    assert refined.metadata["base_boxes"] == 1


def test_refine_matches_exhaustive_intersection_seeded():
    # seeded end-to-end style check on K=4: survivors equal the brute-force
    # intersection over all 24 permutations
    rng = np.random.default_rng(9)
    K = 4
    theta_hat = rng.normal(size=K)
    stars = theta_hat[None, :] + 0.8 * rng.normal(size=(120, K))
    cand = build_candidate_set(theta_hat, stars, manual_budget(7, K))
    accepted = []
    for d in range(5):
        theta = rng.normal(size=K)
        below = [set() for _ in range(K)]
        above = [set() for _ in range(K)]
        for k in range(K):
            for i in range(K):
                if i != k and rng.random() < 0.35:
                    (below if theta[i] < theta[k] else above)[k].add(i)
        accepted.append((NeighborhoodSets(below=tuple(below), above=tuple(above)), d))
    gamma = assemble_confidence_set(accepted, K=K)
    refined = refine_with_candidate(gamma, cand)
    cand_set = {tuple(r) for r in cand.rankings}
    box_set = permutations_in_boxes(
        [b.lo for b in gamma.boxes], [b.hi for b in gamma.boxes], K
    )
    assert {tuple(r) for r in refined.joint_rankings} == cand_set & box_set
    # double containment
    assert {tuple(r) for r in refined.joint_rankings} <= cand_set
    assert {tuple(r) for r in refined.joint_rankings} <= box_set


def test_refine_orientation_mismatch_rejected():
    from rankrepro import InvalidInputError

    gamma = _set_from_boxes(lo_rows=[[1, 1]], hi_rows=[[2, 2]], K=2)
    cand = CandidateSet(
        rankings=np.array([[1, 2]]),
        counts=np.array([1]),
        accepted_draws=1,
        total_draws=1,
        budget=manual_budget(9, 2),
        orientation="descending",
    )
    with pytest.raises(InvalidInputError):
        refine_with_candidate(gamma, cand)


def test_index_set_restriction():
    K = 4
    nbhd = NeighborhoodSets(
        below=({1}, set(), set(), set()), above=(set(), {0}, set(), set())
    )
    gamma = assemble_confidence_set([(nbhd, 0)], K=K, index_set=(0, 2))
    ivs = gamma.marginal_intervals()
    assert [iv.population for iv in ivs] == [0, 2]
    # full-length vectors are restricted automatically
    assert gamma.contains([2, 1, 3, 4])
    # restricted vectors accepted directly
    assert gamma.contains([2, 3])
