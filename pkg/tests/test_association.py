import numpy as np
import pytest

from cfmimo.association import (
    AssociationPlan,
    InfeasibleConfig,
    SearchSpaceTooLarge,
    algorithm1,
    algorithm2,
    brute_force_best,
    enumerate_plans,
    random_association,
    search_space_size,
    small_cell_association,
    validate_plan,
)


def spec_instance():
    """L=1, N=4, N_RF=2, K=3, eps=0, beta=[1,2,3] with a hand-traceable
    magnitude table."""
    beta = np.array([[1.0], [2.0], [3.0]])
    mags = np.array([[[9, 1, 1, 1]], [[8, 7, 1, 1]], [[1, 6, 5, 1]]], dtype=float)
    eps = np.zeros((3, 1), dtype=int)
    return beta, mags, eps


class TestAlgorithm1:
    def test_hand_trace(self):
        beta, mags, eps = spec_instance()
        plan = algorithm1(beta, mags, eps, rf_chains=2, num_subcarriers=32)
        # stage 1: UE1 -> beam 1, UE2 -> beam 2 (1 taken), UE3 -> beam 3
        np.testing.assert_array_equal(plan.b[:, 0], [1, 2, 0])
        # stage 2: magnitudes 9, 7 beat 5 -> UEs 1 and 2 associated
        np.testing.assert_array_equal(plan.u[:, 0], [1, 1, 0])
        np.testing.assert_array_equal(plan.chain_ue[0], [0, 1])

    def test_single_ue_gets_global_max(self):
        beta = np.array([[5.0]])
        mags = np.array([[[1.0, 4.0, 2.0]]])
        plan = algorithm1(beta, mags, np.zeros((1, 1), int), 1, 16)
        assert plan.b[0, 0] == 2 and plan.u[0, 0] == 1

    def test_ties_still_feasible(self):
        beta = np.ones((3, 2))
        mags = np.ones((3, 2, 4))
        plan = algorithm1(beta, mags, np.zeros((3, 2), int), 2, 16)
        assert validate_plan(plan, 2) == []
        # lowest-index tie-breaks: the first-processed UE gets beam 1
        assert plan.b[0, 0] == 1

    def test_infeasible_when_beams_short(self):
        with pytest.raises(InfeasibleConfig):
            algorithm1(np.ones((3, 1)), np.ones((3, 1, 2)), np.zeros((3, 1), int), 1, 16)

    def test_offset_weight_reorders_ues(self):
        # Same beta, but UE0's link is heavily delayed: UE1 picks first.
        beta = np.ones((2, 1))
        mags = np.array([[[5.0, 4.0]], [[5.0, 4.0]]])
        eps = np.array([[10], [0]])
        plan = algorithm1(beta, mags, eps, 2, 16)
        assert plan.b[1, 0] == 1  # UE1 went first and took the best beam
        assert plan.b[0, 0] == 2

    def test_label_equivariance(self):
        rng = np.random.default_rng(3)
        beta = rng.uniform(0.5, 3.0, (4, 2))
        mags = rng.uniform(0.1, 9.0, (4, 2, 6))
        eps = rng.integers(0, 5, (4, 2))
        plan = algorithm1(beta, mags, eps, 2, 16)
        perm = np.array([2, 0, 3, 1])
        plan_p = algorithm1(beta[perm], mags[perm], eps[perm], 2, 16)
        np.testing.assert_array_equal(plan_p.u, plan.u[perm])
        np.testing.assert_array_equal(plan_p.b, plan.b[perm])

    def test_scale_invariance(self):
        rng = np.random.default_rng(4)
        beta = rng.uniform(0.5, 3.0, (4, 2))
        mags = rng.uniform(0.1, 9.0, (4, 2, 6))
        eps = np.zeros((4, 2), int)
        a = algorithm1(beta, mags, eps, 2, 16)
        b = algorithm1(beta, 7.3 * mags, eps, 2, 16)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.b, b.b)


class TestAlgorithm2:
    def test_hand_trace(self):
        beta, mags, eps = spec_instance()
        plan = algorithm2(beta, mags, eps, rf_chains=2, num_subcarriers=32)
        np.testing.assert_array_equal(plan.u[:, 0], [1, 1, 0])
        np.testing.assert_array_equal(plan.b[:, 0], [1, 2, 0])

    def test_tie_break_by_lowest_index(self):
        beta = np.ones((4, 1))
        mags = np.ones((4, 1, 5))
        plan = algorithm2(beta, mags, np.zeros((4, 1), int), 2, 16)
        np.testing.assert_array_equal(plan.u[:, 0], [1, 1, 0, 0])

    def test_all_ues_associated_when_chains_suffice(self):
        rng = np.random.default_rng(5)
        beta = rng.uniform(0.5, 2.0, (3, 2))
        mags = rng.uniform(0.1, 4.0, (3, 2, 4))
        plan = algorithm2(beta, mags, np.zeros((3, 2), int), 3, 16)
        assert np.all(plan.u == 1)

    def test_feasible_on_random_instances(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            k, l, n = rng.integers(2, 5), rng.integers(1, 4), rng.integers(5, 8)
            nrf = int(rng.integers(1, 4))
            beta = rng.uniform(0.5, 3.0, (k, l))
            mags = rng.uniform(0.0, 9.0, (k, l, n))
            eps = rng.integers(0, 20, (k, l))
            for algo in (algorithm1, algorithm2):
                plan = algo(beta, mags, eps, nrf, 16)
                assert validate_plan(plan, nrf) == []


class TestRandomAssociation:
    def test_always_feasible(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            plan = random_association(rng, 5, 3, 8, 2)
            assert validate_plan(plan, 2) == []

    def test_reproducible(self):
        a = random_association(42, 5, 3, 8, 2)
        b = random_association(42, 5, 3, 8, 2)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.b, b.b)

    def test_roughly_uniform_beams(self):
        counts = np.zeros(3)
        rng = np.random.default_rng(8)
        draws = 3000
        for _ in range(draws):
            plan = random_association(rng, 3, 1, 3, 3)
            for k in range(3):
                counts[plan.b[k, 0] - 1] += 1
        np.testing.assert_allclose(counts / draws, 1.0, atol=0.1)


class TestSmallCell:
    def test_single_aau_matches_inner(self):
        beta, mags, eps = spec_instance()
        inner = algorithm1(beta, mags, eps, 2, 32)
        sc = small_cell_association(beta, mags, eps, 2, 32, inner=algorithm1)
        np.testing.assert_array_equal(sc.u, inner.u)
        np.testing.assert_array_equal(sc.b, inner.b)


class TestBruteForce:
    def test_enumeration_count(self):
        assert search_space_size(2, 1, 2, 1) == 4
        assert len(list(enumerate_plans(2, 1, 2, 1))) == 4

    def test_returns_argmax(self):
        def evaluator(plan):
            # prefer UE 1 on beam 2
            return 10.0 if (plan.u[1, 0] and plan.b[1, 0] == 2) else float(plan.b[0, 0])
        best = brute_force_best(2, 1, 2, 1, evaluator)
        assert best.u[1, 0] == 1 and best.b[1, 0] == 2

    def test_constant_evaluator_keeps_first_plan(self):
        best = brute_force_best(2, 1, 2, 1, lambda p: 1.0)
        first = next(enumerate_plans(2, 1, 2, 1))
        np.testing.assert_array_equal(best.u, first.u)
        np.testing.assert_array_equal(best.b, first.b)

    def test_too_large_guard(self):
        with pytest.raises(SearchSpaceTooLarge):
            brute_force_best(8, 4, 16, 4, lambda p: 0.0, limit=10 ** 4)

    def test_greedy_between_random_and_optimal(self):
        rng = np.random.default_rng(9)
        k, l, n, nrf = 3, 1, 4, 2
        beta = rng.uniform(0.5, 3.0, (k, l))
        mags = rng.uniform(0.1, 9.0, (k, l, n))
        eps = np.zeros((k, l), int)

        def toy_score(plan):
            # additive surrogate objective: discounted magnitude of each
            # served beam
            total = 0.0
            for ll in range(l):
                for kk in plan.served_ues(ll):
                    total += mags[kk, ll, plan.b[kk, ll] - 1]
            return total

        best = brute_force_best(k, l, n, nrf, toy_score)
        g1 = toy_score(algorithm1(beta, mags, eps, nrf, 16))
        g2 = toy_score(algorithm2(beta, mags, eps, nrf, 16))
        assert g1 <= toy_score(best) + 1e-12
        assert g2 <= toy_score(best) + 1e-12
        rand_scores = [toy_score(random_association(rng, k, l, n, nrf))
                       for _ in range(200)]
        assert g1 >= np.mean(rand_scores) - 1e-9


class TestValidatePlan:
    def test_clean_plan_empty(self):
        beta, mags, eps = spec_instance()
        assert validate_plan(algorithm1(beta, mags, eps, 2, 32), 2) == []

    def test_bcc_violation_named(self):
        u = np.array([[1], [1]], dtype=np.int8)
        b = np.array([[5], [5]], dtype=np.int64)
        plan = AssociationPlan(u=u, b=b, chain_ue=np.array([[0, 1]]), num_beams=8)
        msgs = validate_plan(plan, 2)
        assert any("BCC" in m and "beam 5" in m for m in msgs)

    def test_rf_count_violation(self):
        u = np.ones((3, 1), dtype=np.int8)
        b = np.array([[1], [2], [3]], dtype=np.int64)
        plan = AssociationPlan(u=u, b=b, chain_ue=np.array([[0, 1, 2]]), num_beams=8)
        msgs = validate_plan(plan, 2)
        assert any("RF chains" in m for m in msgs)

    def test_consistency_violation(self):
        u = np.array([[1], [0]], dtype=np.int8)
        b = np.array([[0], [2]], dtype=np.int64)
        plan = AssociationPlan(u=u, b=b, chain_ue=np.array([[0, -1]]), num_beams=8)
        msgs = validate_plan(plan, 2)
        assert any("disagree" in m for m in msgs)

    def test_json_round_trip(self):
        beta, mags, eps = spec_instance()
        plan = algorithm1(beta, mags, eps, 2, 32)
        again = AssociationPlan.from_json_dict(plan.to_json_dict())
        np.testing.assert_array_equal(plan.u, again.u)
        np.testing.assert_array_equal(plan.b, again.b)
        np.testing.assert_array_equal(plan.chain_ue, again.chain_ue)
