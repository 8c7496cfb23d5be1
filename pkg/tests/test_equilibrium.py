from fractions import Fraction

import numpy as np
import pytest

from expgsp import (AuctionInstance, Bidder, CtrMatrix, ExploreConfig, PositionCurve,
                    analyze_gsp, analyze_laddered, cost_of_uncertainty, cou_bound,
                    cou_bound_truthful, efficiency, efficiency_loss_bound, expected_revenue,
                    max_sne_bids, min_sne_bids, user_experience, verify_sne)
from expgsp.equilibrium import (coarse_bound, explore_ratio_constant, laddered_revenue,
                                revenue_at_bids, truthful_ratio_constant, y_decomposition)

from conftest import running_example
from oracles import gsp_revenue_at, min_sne_exact

THETA = np.array([1.2, 1.0, 0.8])
V = np.array([10.0, 6.0, 4.0])
ONES = np.ones(3)


class TestSneBids:
    def test_gsp_two_slots(self):
        lo = min_sne_bids([1.0, 0.5], V, ONES)
        assert np.allclose(lo.bids, [10, 5, 4])
        hi = max_sne_bids([1.0, 0.5], V, ONES)
        assert hi.bids[1] == pytest.approx(8.0)
        assert lo.flavor == "min-sne" and hi.flavor == "max-sne"

    def test_running_example_min(self):
        b = min_sne_bids(THETA, V, ONES).bids
        exact = min_sne_exact([Fraction(6, 5), 1, Fraction(4, 5)], [10, 6, 4], [1, 1, 1])
        assert exact == [10, Fraction(5, 3), Fraction(4, 5)]
        assert np.allclose(b, [float(x) for x in exact], rtol=1e-12)

    def test_single_slot(self):
        assert min_sne_bids([0.7], [9.0, 5.0], [1, 1]).bids[1] == pytest.approx(5.0)
        assert max_sne_bids([0.7], [9.0, 5.0], [1, 1]).bids[1] == pytest.approx(9.0)

    def test_constructions_verify(self):
        for f in (min_sne_bids, max_sne_bids):
            assert verify_sne(f(THETA, V, ONES), THETA, V, ONES)
            assert verify_sne(f([1.0, 0.5], V, ONES), [1.0, 0.5], V, ONES)

    def test_downward_perturbation_breaks_min_sne(self):
        b = min_sne_bids([1.0, 0.5], V, ONES).bids.copy()
        b[1] *= 0.9
        assert not verify_sne(b, [1.0, 0.5], V, ONES)

    def test_upward_perturbation_breaks_max_sne(self):
        b = max_sne_bids(THETA, V, ONES).bids.copy()
        b[2] *= 1.1
        assert not verify_sne(b, THETA, V, ONES)

    def test_min_below_max_when_ordered(self, rng):
        from expgsp.sampling import random_instance
        for _ in range(200):
            inst = random_instance(rng, 4, 3, 1)
            th = analyze_gsp(inst)
            v, q = inst.values(), inst.qualities()
            if np.all(np.diff(q * v) <= 0):
                assert np.all(th.min_bids.bids <= th.max_bids.bids + 1e-9)

    def test_zero_theta_rejected(self):
        with pytest.raises(ValueError):
            min_sne_bids([1.0, 0.0, 0.0], V, ONES, k_tilde=3)


class TestRevenue:
    def test_gsp_example(self):
        assert expected_revenue([1.0, 0.5], ONES, ONES, V) == pytest.approx(7.0)

    def test_running_example(self):
        assert expected_revenue(THETA, ONES, ONES, V) == pytest.approx(2.8)
        assert expected_revenue([0.6, 0.3, 0.1], ONES, ONES, V) == pytest.approx(3.4)

    def test_double_sum_equals_price_sum(self, rng):
        from expgsp.sampling import random_instance
        for _ in range(100):
            inst = random_instance(rng, 4, 3, 1)
            a = analyze_gsp(inst)
            e, q = inst.relevances(), inst.qualities()
            assert revenue_at_bids(a.effective, e, q, a.min_bids) == pytest.approx(a.metrics.R, rel=1e-9)

    def test_exact_revenue_running_example(self):
        th = [Fraction(6, 5), Fraction(1), Fraction(4, 5)]
        b = min_sne_exact(th, [10, 6, 4], [1, 1, 1])
        assert gsp_revenue_at(th, [1, 1, 1], [1, 1, 1], b) == Fraction(14, 5)

    def test_top_restriction(self):
        full = expected_revenue([0.6, 0.3, 0.1], ONES, ONES, V)
        assert expected_revenue([0.6, 0.3, 0.1], ONES, ONES, V, top=3) == full
        assert expected_revenue([0.6, 0.3, 0.1], ONES, ONES, V, top=1) == pytest.approx(0.3 * 6 + 0.2 * 4)


class TestCostOfUncertainty:
    def test_running_example(self):
        assert cost_of_uncertainty(3.4, 2.8, 3) == pytest.approx((3.4 - 2.8 / 3) / 3.4)
        assert cost_of_uncertainty(3.4, 2.8, 3) == pytest.approx(0.72549, abs=1e-5)

    def test_no_loss(self):
        assert cost_of_uncertainty(2.0, 2.0, 1) == 0.0
        assert cost_of_uncertainty(2.0, 6.0, 3) == 0.0

    def test_gain_is_negative(self):
        assert cost_of_uncertainty(2.0, 9.0, 3) < 0

    def test_zero_baseline_raises(self):
        with pytest.raises(ValueError):
            cost_of_uncertainty(0.0, 1.0, 2)


class TestBounds:
    def test_ratio_constant_running_example(self):
        assert explore_ratio_constant([0.6, 0.3, 0.1], 3, 1) == pytest.approx(2 / 3)
        c, coarse, refined = cou_bound([0.6, 0.3, 0.1], 3, 1, 3.4, 3.4)
        assert coarse == pytest.approx(7 / 9) and refined == pytest.approx(7 / 9)
        assert cost_of_uncertainty(3.4, 2.8, 3) <= refined

    def test_empty_range_gives_infinite_c(self):
        assert explore_ratio_constant([0.6, 0.3], 1, 0) == float("inf")
        assert coarse_bound(float("inf"), 1, 0) == 0.0

    def test_zero_explore_slots_bound_is_zero(self):
        # with L = 0 every ratio is 1, so the bound collapses for any curve
        for g in ([0.8, 0.4, 0.2, 0.1], [0.5, 0.45, 0.1]):
            for n in range(1, 5):
                assert explore_ratio_constant(g, n, 0) in (1.0, float("inf"))
                assert cou_bound(g, n, 0, 1.0, 1.0)[1] == pytest.approx(0.0, abs=1e-15)

    def test_refined_scales_coarse(self):
        _, coarse, refined = cou_bound([0.6, 0.3, 0.1], 3, 1, 1.7, 3.4)
        assert refined == pytest.approx(coarse / 2)

    def test_truthful_matrix_example(self):
        m = CtrMatrix([[0.6, 0.3, 0.1], [0.5, 0.3, 0.15], [0.4, 0.25, 0.1]])
        c, bound = cou_bound_truthful(m, 3, 1)
        assert c == pytest.approx(2 / 3)
        assert bound == pytest.approx(7 / 9)

    def test_truthful_separable_reduces_to_gsp_constant(self, rng):
        from expgsp.sampling import random_decreasing
        g = random_decreasing(rng, 5)
        e = rng.uniform(0.1, 1, 6)
        for n, L in [(3, 1), (5, 2), (6, 2), (4, 0)]:
            got = truthful_ratio_constant(CtrMatrix.separable(g, e), n, L)
            assert got == pytest.approx(explore_ratio_constant(g, n, L), rel=1e-12)

    def test_truthful_zero_explore_bound_is_zero(self):
        m = CtrMatrix([[0.6, 0.3, 0.1], [0.5, 0.3, 0.15], [0.4, 0.25, 0.1]])
        assert cou_bound_truthful(m, 3, 0)[1] == pytest.approx(0.0)


class TestEfficiency:
    def test_running_example_values(self):
        assert efficiency([0.6, 0.3, 0.1], ONES, V) == pytest.approx(8.2)
        assert efficiency(THETA, ONES, V) == pytest.approx(21.2)
        assert user_experience(THETA, ONES) == pytest.approx(3.0)

    def test_y_decomposition(self):
        y = y_decomposition([0.6, 0.3, 0.1], ONES, V, 3, 1)
        assert np.allclose(y, [20, 26, 14])
        assert np.dot([0.6, 0.3, 0.1], y) == pytest.approx(21.2)

    def test_loss_bounds_running_example(self):
        b = efficiency_loss_bound([0.6, 0.3, 0.1], ONES, V, 3, 1)
        assert b.beta == pytest.approx(2 / 3)
        assert b.eta == 0.0
        assert b.bound == pytest.approx((1 / 3) * 6 / 8.2)
        assert b.bound == pytest.approx(0.24390, abs=1e-5)
        assert b.alpha == pytest.approx(2 / 3)
        assert b.omega == pytest.approx(0.5)
        assert b.ordered_bound == pytest.approx(b.bound - (1 / 3) * 0.5 * 2.2 / 8.2)
        assert b.ordered_bound == pytest.approx(0.19919, abs=1e-5)
        loss = (8.2 - 21.2 / 3) / 8.2
        assert loss <= b.ordered_bound <= b.bound

    def test_zero_explore_slots(self):
        b = efficiency_loss_bound([0.6, 0.3, 0.1], ONES, V, 3, 0)
        assert b.E0_explore == 0.0 and b.beta == 1.0 and b.eta == 0.0
        assert b.bound == 0.0

    def test_unordered_values_have_no_ordered_bound(self):
        b = efficiency_loss_bound([0.6, 0.3, 0.1], ONES, [4.0, 6.0, 10.0], 3, 1)
        assert b.ordered_bound is None
        assert b.eta > 0

    def test_zero_value_rejected(self):
        with pytest.raises(ValueError):
            efficiency_loss_bound([0.6, 0.3, 0.1], ONES, [4.0, 0.0, 1.0], 3, 1)


class TestAnalysis:
    def test_running_example(self, example):
        a = analyze_gsp(example)
        m = a.metrics
        assert (m.R0, m.R, m.E0, m.E) == pytest.approx((3.4, 2.8, 8.2, 21.2))
        assert m.rho == pytest.approx(0.72549, abs=1e-5)
        assert m.eff_loss == pytest.approx(0.13821, abs=1e-5)
        assert m.R_per_impression == pytest.approx(2.8 / 3)
        assert a.bounds.cou_bound_coarse == pytest.approx(7 / 9)
        assert a.bounds.cou_bound_refined == pytest.approx(7 / 9)
        assert np.allclose(a.prices, [5 / 3, 0.8, 0.0])
        assert a.mechanism == "exp-gsp"
        assert a.rho_max_sne is not None

    def test_gsp_degeneracy(self):
        a = analyze_gsp(running_example(1, 0))
        m = a.metrics
        assert m.rho == 0.0 and m.E == m.E0 and m.U == m.U0
        assert a.mechanism == "gsp"
        assert a.bounds.cou_bound_coarse == 0.0

    def test_value_estimates_replace_values(self):
        bidders = [Bidder(i + 1, v, value_estimate=2 * v) for i, v in enumerate(V)]
        inst = AuctionInstance.build(bidders, PositionCurve([0.6, 0.3, 0.1]), ExploreConfig(3, 1))
        a = analyze_gsp(inst, use_estimates=True)
        assert a.metrics.R == pytest.approx(5.6)
        assert np.allclose(a.min_bids.bids, [20, 10 / 3, 1.6])

    def test_non_separable_gsp_rejected(self):
        inst = AuctionInstance.build([Bidder(1, 2.0), Bidder(2, 1.0)], PositionCurve([]),
                                     ctr=[[0.5, 0.2], [0.4, 0.1]])
        with pytest.raises(ValueError):
            analyze_gsp(inst)

    def test_laddered_matches_gsp_revenue_when_separable(self, rng):
        from expgsp.sampling import random_instance, sne_safe_configs
        for K, n, L in sne_safe_configs(6):
            inst = random_instance(rng, K, n, L)
            g, lad = analyze_gsp(inst), analyze_laddered(inst)
            assert lad.metrics.R == pytest.approx(g.metrics.R, rel=1e-9, abs=1e-12)
            assert lad.metrics.R0 == pytest.approx(g.metrics.R0, rel=1e-9, abs=1e-12)

    def test_laddered_running_example(self, example):
        a = analyze_laddered(example)
        assert a.metrics.R == pytest.approx(2.8)
        assert a.prices[0] == pytest.approx(2.0 / 1.2)
        assert a.bounds.cou_bound_coarse == pytest.approx(7 / 9)
        assert a.bounds.eff is not None

    def test_laddered_revenue_one_step(self):
        c = np.outer(ONES, [1.0, 0.5])
        assert laddered_revenue(c, ONES, V) == pytest.approx(7.0)
