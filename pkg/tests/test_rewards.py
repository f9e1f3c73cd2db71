import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphsteer.errors import (
    ConfigurationError,
    DegenerateConstraintWarning,
    UndefinedMetricError,
    UnsupportedOperationError,
)
from graphsteer.oracles import finite_diff_grad
from graphsteer.rewards import (
    ConstraintSpec,
    ObservationMask,
    SensitiveAttributes,
    constraint_reward,
    edge_count,
    fairness_metrics,
    fairness_reward,
    is_star,
    is_valid_egonet,
    link_observation_reward,
    max_degree,
    quantize,
    sbm_valid,
    soft_max_degree,
    star_reward,
    triangle_count,
    validity_checks,
)
from graphsteer.state import GraphState

from conftest import random_state


def graph_from_edges(n, edges):
    a = np.zeros((n, n))
    for i, j in edges:
        a[i, j] = a[j, i] = 1.0
    return a


K3 = graph_from_edges(3, [(0, 1), (1, 2), (0, 2)])
K4 = graph_from_edges(4, list(itertools.combinations(range(4), 2)))
STAR5 = graph_from_edges(5, [(0, i) for i in range(1, 5)])
CYCLE4 = graph_from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
EMPTY4 = np.zeros((4, 4))


def as_state(a):
    return GraphState(np.zeros((a.shape[0], 0)), a)


def brute_force_triangles(a):
    n = a.shape[0]
    count = 0
    for i, j, k in itertools.combinations(range(n), 3):
        if a[i, j] and a[j, k] and a[i, k]:
            count += 1
    return count


class TestCountStatistics:
    def test_edge_count_doubles_edges(self):
        assert edge_count(K3) == 6
        assert edge_count(EMPTY4) == 0
        assert edge_count(STAR5) == 8

    def test_triangle_count(self):
        assert triangle_count(K3) == 6
        assert triangle_count(CYCLE4) == 0
        # enumeration oracle: tr(A^3) = 6 * (#triangles)
        assert triangle_count(K4) == 6 * brute_force_triangles(K4) == 24

    @given(seed=st.integers(0, 5000), n=st.integers(2, 12))
    @settings(max_examples=60, deadline=None)
    def test_triangle_trace_equals_enumeration(self, seed, n):
        r = np.random.default_rng(seed)
        upper = np.triu(r.random((n, n)), 1)
        a = quantize(upper + upper.T, 0.5)
        assert triangle_count(a) == pytest.approx(6 * brute_force_triangles(a))

    def test_max_degree(self):
        assert max_degree(STAR5) == 4
        assert max_degree(EMPTY4) == 0
        assert max_degree(K4) == 3

    def test_soft_max_degree_upper_bounds_hard_max(self, rng):
        a = quantize(np.abs(random_state(rng, 8, 0).adjacency), 0.3)
        assert soft_max_degree(a) >= max_degree(a)
        assert soft_max_degree(a) <= max_degree(a) + np.log(8) / 10.0


class TestQuantize:
    def test_threshold_cases(self):
        all_06 = np.full((3, 3), 0.6)
        np.fill_diagonal(all_06, 0)
        assert quantize(all_06).sum() == 6
        all_04 = np.full((3, 3), 0.4)
        np.fill_diagonal(all_04, 0)
        assert quantize(all_04).sum() == 0

    def test_strict_at_threshold(self):
        half = np.full((3, 3), 0.5)
        np.fill_diagonal(half, 0)
        assert quantize(half).sum() == 0

    @given(seed=st.integers(0, 5000), lo=st.floats(0.1, 0.45), hi=st.floats(0.55, 0.9))
    @settings(max_examples=50, deadline=None)
    def test_idempotent_and_monotone(self, seed, lo, hi):
        r = np.random.default_rng(seed)
        raw = np.triu(r.random((6, 6)), 1)
        a = raw + raw.T
        q_lo, q_hi = quantize(a, lo), quantize(a, hi)
        assert np.array_equal(quantize(q_lo, 0.5), q_lo)
        # higher threshold keeps a subset of edges
        assert np.all(q_hi <= q_lo)


class TestConstraintRewards:
    def test_edge_l2_met_exactly(self):
        reward = constraint_reward(ConstraintSpec(kind="edge_count", bound=6.0))
        assert reward.eval(as_state(K3)) == 0.0

    def test_edge_hinge(self):
        reward = constraint_reward(
            ConstraintSpec(kind="edge_count", bound=6.0, loss_variant="hinge")
        )
        assert reward.eval(as_state(K4)) == -6.0  # 1'A1 = 12
        assert reward.eval(as_state(EMPTY4)) == 0.0

    def test_triangle_l2_gradient_matches_fd(self, rng):
        # bound != stat at the test point, else both gradients vanish and the
        # relative comparison degenerates
        reward = constraint_reward(ConstraintSpec(kind="triangle_count", bound=3.0))
        g = GraphState(np.zeros((3, 0)), K3 * 1.0)
        fd = finite_diff_grad(reward.eval, g)
        an = reward.grad(g)
        num = np.linalg.norm(an.to_free_vector() - fd.to_free_vector())
        assert num / np.linalg.norm(fd.to_free_vector()) < 1e-5

    def test_quantized_variants_have_no_grad(self):
        for variant in ("quantized_l2", "quantized_hinge"):
            reward = constraint_reward(
                ConstraintSpec(kind="edge_count", bound=4.0, loss_variant=variant)
            )
            assert reward.grad is None

    def test_quantized_hinge_uses_hard_statistic(self):
        reward = constraint_reward(
            ConstraintSpec(kind="edge_count", bound=6.0, loss_variant="quantized_hinge")
        )
        soft = 0.7 * K4  # quantizes to K4
        assert reward.eval(as_state(soft)) == -6.0

    def test_max_degree_differentiable_uses_soft_statistic(self, rng):
        reward = constraint_reward(ConstraintSpec(kind="max_degree", bound=2.0))
        g = random_state(rng, 5, 0)
        expected = -((soft_max_degree(g.adjacency) - 2.0) ** 2)
        assert reward.eval(g) == pytest.approx(expected)

    def test_bound_validation(self):
        with pytest.raises(ConfigurationError):
            ConstraintSpec(kind="edge_count", bound=-1.0)
        with pytest.raises(ConfigurationError):
            ConstraintSpec(kind="nonsense")


class TestStarReward:
    def test_perfect_star(self):
        assert star_reward().eval(as_state(STAR5)) == 0.0

    def test_triangle_penalty_one(self):
        # enumeration oracle: minimum penalty over hub choices
        def brute_penalty(a):
            n = a.shape[0]
            best = np.inf
            for hub in range(n):
                off_hub = a.sum() / 2.0 - a[hub].sum()
                missing = (n - 1) - a[hub].sum()
                best = min(best, off_hub + missing)
            return best

        assert star_reward().eval(as_state(K3)) == -1.0
        assert brute_penalty(K3) == 1.0

    def test_single_node(self):
        assert star_reward().eval(as_state(np.zeros((1, 1)))) == 0.0

    @given(seed=st.integers(0, 4000), n=st.integers(1, 7))
    @settings(max_examples=80, deadline=None)
    def test_zero_reward_iff_star(self, seed, n):
        r = np.random.default_rng(seed)
        raw = np.triu((r.random((n, n)) < 0.4).astype(float), 1)
        a = raw + raw.T
        assert (star_reward().eval(as_state(a)) == 0.0) == is_star(a)


class TestFairness:
    Z = SensitiveAttributes(np.array([0, 0, 0, 1, 1, 1]))

    def test_complete_bipartite_extreme(self):
        a = np.zeros((6, 6))
        a[:3, 3:] = 1.0
        a[3:, :3] = 1.0
        delta_dp, _ = fairness_metrics(a, self.Z)
        assert delta_dp == 1.0

    def test_empty_graph(self):
        delta_dp, delta_node = fairness_metrics(np.zeros((6, 6)), self.Z)
        assert delta_dp == 0.0 and delta_node == 0.0

    def test_two_cliques_extreme(self):
        a = np.zeros((6, 6))
        a[:3, :3] = 1.0
        a[3:, 3:] = 1.0
        np.fill_diagonal(a, 0.0)
        delta_dp, _ = fairness_metrics(a, self.Z)
        assert delta_dp == 1.0

    def test_group_relabel_invariance(self, rng):
        a = quantize(np.abs(random_state(rng, 6, 0).adjacency), 0.4)
        flipped = SensitiveAttributes(1 - self.Z.z)
        assert fairness_metrics(a, self.Z) == fairness_metrics(a, flipped)

    def test_surrogate_gradient_matches_fd(self, rng):
        reward = fairness_reward(self.Z)
        g = random_state(rng, 6, 1)
        fd = finite_diff_grad(reward.eval, g)
        an = reward.grad(g)
        err = np.linalg.norm(an.to_free_vector() - fd.to_free_vector())
        assert err / np.linalg.norm(fd.to_free_vector()) < 1e-5

    def test_cross_entry_raises_reward_on_dense_same_graph(self):
        # same-group-dense continuous graph: raising a cross edge moves the
        # densities together, so the surrogate reward goes up
        a = np.zeros((6, 6))
        a[:3, :3] = 0.8
        a[3:, 3:] = 0.8
        np.fill_diagonal(a, 0.0)
        reward = fairness_reward(self.Z)
        before = reward.eval(as_state(a))
        a2 = a.copy()
        a2[0, 3] = a2[3, 0] = 0.5
        assert reward.eval(as_state(a2)) > before

    def test_balanced_graph_near_zero(self, rng):
        a = np.full((6, 6), 0.5)
        np.fill_diagonal(a, 0.0)
        assert fairness_reward(self.Z).eval(as_state(a)) == pytest.approx(0.0)

    def test_quantized_variant_has_no_grad(self):
        assert fairness_reward(self.Z, quantized=True).grad is None

    def test_single_group_rejected(self):
        with pytest.raises(UndefinedMetricError):
            SensitiveAttributes(np.zeros(4, dtype=int))


class TestLinkObservation:
    def _obs(self):
        mask = np.zeros((4, 4), dtype=bool)
        values = np.zeros((4, 4))
        mask[0, 1] = mask[1, 0] = True
        values[0, 1] = values[1, 0] = 1.0
        mask[2, 3] = mask[3, 2] = True
        return ObservationMask(mask=mask, values=values)

    def test_perfect_match(self):
        obs = self._obs()
        a = graph_from_edges(4, [(0, 1)])
        assert link_observation_reward(obs).eval(as_state(a)) == 0.0

    def test_missing_edge_counts_twice(self):
        obs = self._obs()
        assert link_observation_reward(obs).eval(as_state(EMPTY4)) == -2.0

    def test_gradient_matches_fd(self, rng):
        obs = self._obs()
        reward = link_observation_reward(obs)
        g = random_state(rng, 4, 1)
        fd = finite_diff_grad(reward.eval, g)
        an = reward.grad(g)
        err = np.linalg.norm(an.to_free_vector() - fd.to_free_vector())
        assert err / max(np.linalg.norm(fd.to_free_vector()), 1e-12) < 1e-6

    def test_edges_only_restricts_mask(self):
        obs = self._obs()
        reward = link_observation_reward(obs, mode="edges_only")
        # only the (0,1) observation has value 1; (2,3) is ignored
        a = graph_from_edges(4, [(0, 1), (2, 3)])
        assert reward.eval(as_state(a)) == 0.0

    def test_exact_variant(self):
        obs = self._obs()
        reward = link_observation_reward(obs, exact=True)
        a = graph_from_edges(4, [(0, 1)])
        assert reward.eval(as_state(a)) == 1.0
        assert reward.grad is None

    def test_empty_mask_warns(self):
        obs = ObservationMask(mask=np.zeros((3, 3), dtype=bool), values=np.zeros((3, 3)))
        with pytest.warns(DegenerateConstraintWarning):
            reward = link_observation_reward(obs)
        assert reward.eval(as_state(np.zeros((3, 3)))) == 0.0


class TestValidity:
    def test_star_and_egonet(self):
        assert is_star(STAR5) and is_valid_egonet(STAR5)
        assert not is_star(CYCLE4) and not is_valid_egonet(CYCLE4)
        assert is_star(np.zeros((1, 1))) and is_valid_egonet(np.zeros((1, 1)))

    def test_k3_is_egonet_not_star(self):
        assert is_valid_egonet(K3) and not is_star(K3)

    def test_sbm_valid_requires_labels(self):
        with pytest.raises(ValueError):
            sbm_valid(K4, None)

    def test_validity_checks_record(self):
        z = SensitiveAttributes(np.array([0, 0, 1, 1]))
        report = validity_checks(CYCLE4, z)
        assert report.is_star is False
        assert report.sbm_valid is not None
        assert validity_checks(CYCLE4).sbm_valid is None

    def test_planted_sbm_mostly_valid(self):
        # Monte-Carlo over generator draws: 2 blocks of 10, p_in=0.8,
        # p_out=0.05 should nearly always satisfy the 8x density rule.
        from graphsteer.datasets import generate_dataset, sbm2_labels

        rng = np.random.default_rng(0)
        graphs = generate_dataset(
            "sbm2", {"block_size": 10, "p_in": 0.8, "p_out": 0.05}, 400, rng
        )
        z = SensitiveAttributes(sbm2_labels(10))
        valid = np.mean([sbm_valid(g.adjacency, z) for g in graphs])
        assert valid >= 0.95


class TestGradRequest:
    def test_unsupported_operation_via_controller(self):
        from graphsteer.rewards import require_grad

        with pytest.raises(UnsupportedOperationError):
            require_grad(star_reward())
