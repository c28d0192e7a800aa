"""
Unit tests for the Method A and Method B optimizers
"""

import itertools
import math

import numpy as np
import pytest
from fair_pprl.analytics import (
    AnalyticsParams,
    BaseRates,
    GroupBaseRates,
    PairCounts,
    expected_dummy_pairs,
    model_fairness_loss,
)
from fair_pprl.blocking import Scenario
from fair_pprl.exceptions import ConvergenceError, DomainError
from fair_pprl.optimize import flip_grid, golden_section_search, method_a_search, method_b_allocate
from fair_pprl.privacy import compose_budget


@pytest.fixture
def counts():
    """Shared pair counts for every group"""
    return PairCounts(n_a=100, n_b=100, n_bins=10, base_pairs=2000)


@pytest.fixture
def base(counts):
    """Group 2 has a four times higher base FPR"""
    return BaseRates({
        1: GroupBaseRates(tp=10, fp=5, tn=95, fn=2, pair_counts=counts),
        2: GroupBaseRates(tp=10, fp=20, tn=80, fn=2, pair_counts=counts),
    })


@pytest.fixture
def params():
    """Default model parameters"""
    return AnalyticsParams()


class TestSearchPrimitives:
    """Test suite for the flip grid and golden-section search"""

    def test_flip_grid(self):
        """Test grid endpoints and validation"""
        grid = flip_grid(0.1)
        assert len(grid) == 11
        assert grid[0] == 0.0 and grid[-1] == 1.0
        assert len(flip_grid(0.01)) == 101
        with pytest.raises(DomainError):
            flip_grid(0.25)
        with pytest.raises(DomainError):
            flip_grid(0.03)

    def test_golden_section_minimum(self):
        """Test the minimum of a parabola is found within tol"""
        x, fx, iterations = golden_section_search(lambda v: (v - 2.0) ** 2, 0.0, 5.0, tol=1e-8)
        assert x == pytest.approx(2.0, abs=1e-7)
        assert fx == pytest.approx(0.0, abs=1e-12)
        assert iterations > 10

    def test_golden_section_swapped_bracket(self):
        """Test a reversed bracket is accepted"""
        x, _, _ = golden_section_search(lambda v: abs(v + 1.0), 3.0, -4.0, tol=1e-6)
        assert x == pytest.approx(-1.0, abs=1e-5)

    def test_golden_section_errors(self):
        """Test invalid tolerance and iteration exhaustion"""
        with pytest.raises(DomainError):
            golden_section_search(lambda v: v, 0.0, 1.0, tol=0.0)
        with pytest.raises(ConvergenceError):
            golden_section_search(lambda v: v * v, -1.0, 1.0, tol=1e-12, max_iter=5)


class TestMethodA:
    """Test suite for method_a_search"""

    def test_beats_uniform_flip(self, base, params):
        """Test the search never loses to the Baseline-2 flip"""
        result = method_a_search(2.0, base, params)
        assert result.method is Scenario.METHOD_A
        assert result.fixed_values == (2.0, 2.0)
        assert result.achieved_loss <= result.diagnostics["baseline2_loss"]
        assert result.achieved_loss < 0.5 * result.diagnostics["baseline2_loss"]
        assert result.per_group_values[0] < result.per_group_values[1]

    def test_matches_brute_force(self, base, params):
        """Test the broadcast grid equals an explicit loop on a coarse grid"""
        result = method_a_search(1.0, base, params, grid_step=0.05)
        grid = flip_grid(0.05)
        losses = [model_fairness_loss(list(f), [1.0, 1.0], base, params) for f in itertools.product(grid, grid)]
        assert result.achieved_loss == pytest.approx(min(losses), abs=1e-12)
        assert result.achieved_loss == pytest.approx(
            model_fairness_loss(list(result.per_group_values), [1.0, 1.0], base, params), abs=1e-12
        )
        assert result.diagnostics["grid_points"] == 21 * 21

    def test_exact_argmin_on_fine_grid(self, base, params):
        """Test the 0.01 grid result equals an explicit loop with the same tie rule"""
        result = method_a_search(1.0, base, params, grid_step=0.01)
        grid = flip_grid(0.01)
        losses = {
            (i, j): model_fairness_loss([grid[i], grid[j]], [1.0, 1.0], base, params)
            for i in range(grid.size) for j in range(grid.size)
        }
        best = min(losses.values())
        tied = [key for key, value in losses.items() if value <= best + 1e-12]
        top = max(sum(key) for key in tied)
        i, j = max(key for key in tied if sum(key) == top)
        assert result.per_group_values == (float(grid[i]), float(grid[j]))
        assert result.achieved_loss == pytest.approx(best, abs=1e-12)

    def test_ties_prefer_larger_flips(self, base, params):
        """Test an infinite budget makes flips irrelevant and picks the largest"""
        result = method_a_search(math.inf, base, params, grid_step=0.1)
        assert result.per_group_values == (1.0, 1.0)
        assert result.achieved_loss == pytest.approx(0.15)

    def test_to_scenario(self, base, params):
        """Test the result becomes a Method A scenario"""
        result = method_a_search(2.0, base, params, grid_step=0.1)
        sc = result.to_scenario(threshold=0.8, seed=3)
        assert sc.scenario is Scenario.METHOD_A
        assert sc.per_group_flip == result.per_group_values
        assert sc.overall_eps == pytest.approx(1.0)
        assert result.overall_eps == pytest.approx(1.0)

    def test_group_limits(self, base, params, counts):
        """Test one group and oversized grids are rejected"""
        single = BaseRates({1: base.group(1)})
        with pytest.raises(DomainError):
            method_a_search(1.0, single, params)
        four = BaseRates({g: base.group(1) for g in range(1, 5)})
        with pytest.raises(DomainError):
            method_a_search(1.0, four, params, grid_step=0.01)


class TestMethodB:
    """Test suite for method_b_allocate"""

    def test_allocation_composes(self, base, params):
        """Test budgets compose to the overall budget and beat uniform"""
        result = method_b_allocate(1.0, 0.5, base, params)
        assert result.method is Scenario.METHOD_B
        assert compose_budget(result.per_group_values) == pytest.approx(1.0, rel=1e-9)
        assert result.diagnostics["composed_eps"] == pytest.approx(1.0, rel=1e-9)
        assert result.achieved_loss < result.diagnostics["uniform_loss"]
        assert result.per_group_values[1] < result.per_group_values[0]
        assert result.fixed_values == (0.5, 0.5)

    def test_group_with_high_fpr_gets_the_noise(self, base, params):
        """Test the high-FPR group receives nearly all of the dilution"""
        result = method_b_allocate(1.0, 0.5, base, params)
        assert result.per_group_values[1] == pytest.approx(1.0, rel=0.01)

    def test_identical_groups_keep_uniform(self, base, params):
        """Test ties return the uniform split exactly"""
        same = BaseRates({1: base.group(1), 2: base.group(1)})
        result = method_b_allocate(1.0, 0.3, same, params)
        assert result.per_group_values == (2.0, 2.0)
        assert result.achieved_loss == pytest.approx(0.0)

    def test_three_groups(self, base, params, counts):
        """Test coordinate descent over two free budgets"""
        three = BaseRates({
            1: base.group(1),
            2: base.group(2),
            3: GroupBaseRates(tp=10, fp=10, tn=90, fn=2, pair_counts=counts),
        })
        result = method_b_allocate(0.5, 0.5, three, params)
        assert len(result.per_group_values) == 3
        assert compose_budget(result.per_group_values) == pytest.approx(0.5, rel=1e-9)
        assert result.achieved_loss <= result.diagnostics["uniform_loss"]
        assert result.diagnostics["sweeps"] >= 1
        assert result.achieved_loss == pytest.approx(
            model_fairness_loss([0.5] * 3, list(result.per_group_values), three, params), abs=1e-9
        )

    def test_invalid_arguments(self, base, params):
        """Test budgets, tolerances and group counts"""
        with pytest.raises(DomainError):
            method_b_allocate(0.0, 0.5, base, params)
        with pytest.raises(DomainError):
            method_b_allocate(math.inf, 0.5, base, params)
        with pytest.raises(DomainError):
            method_b_allocate(1.0, 0.5, base, params, tol=0.0)
        with pytest.raises(DomainError):
            method_b_allocate(1.0, 0.5, BaseRates({1: base.group(1)}), params)

    def test_deterministic(self, base, params):
        """Test repeated calls agree"""
        first = method_b_allocate(1.0, 0.5, base, params)
        second = method_b_allocate(1.0, 0.5, base, params)
        assert np.allclose(first.per_group_values, second.per_group_values)

    @pytest.mark.parametrize("eps", [0.1, 1.0, 10.0])
    def test_matches_log_grid_oracle(self, base, params, eps):
        """Test the allocation is within 1e-6 of a 10^4-point scan of the free budget"""
        result = method_b_allocate(eps, 0.5, base, params)
        free = eps * np.exp(np.linspace(math.log(1.001), math.log(1000.0), 10 ** 4))
        oracle = min(
            model_fairness_loss([0.5, 0.5], [e, 1.0 / (1.0 / eps - 1.0 / e)], base, params) for e in free
        )
        assert result.achieved_loss <= oracle + 1e-6
        assert compose_budget(result.per_group_values) == pytest.approx(eps, rel=1e-9)
        assert result.achieved_loss == pytest.approx(
            model_fairness_loss([0.5, 0.5], list(result.per_group_values), base, params), abs=1e-12
        )

    def test_plateau_prefers_point_nearest_uniform(self, params, counts):
        """Test a loss plateau away from uniform is entered at its edge nearest uniform"""
        unequal_fnr = BaseRates({
            1: GroupBaseRates(tp=10, fp=5, tn=95, fn=2, pair_counts=counts),
            2: GroupBaseRates(tp=10, fp=20, tn=80, fn=3, pair_counts=counts),
        })
        fnr_gap = 3 / 13 - 2 / 12
        result = method_b_allocate(1.0, 0.5, unequal_fnr, params)
        assert result.diagnostics["uniform_loss"] > fnr_gap
        assert result.achieved_loss == pytest.approx(fnr_gap, abs=1e-12)
        eps_1 = result.per_group_values[0]
        assert 5.0 < eps_1 < 10.0
        closer = eps_1 / 1.05
        assert model_fairness_loss(
            [0.5, 0.5], [closer, 1.0 / (1.0 - 1.0 / closer)], unequal_fnr, params
        ) > fnr_gap + 1e-9

    def test_cost_moves_between_groups(self, base, params, counts):
        """Test the expected dummy pairs drop for one group and rise for the other"""
        result = method_b_allocate(1.0, 0.5, base, params)
        uniform = expected_dummy_pairs(counts, 2.0, params)
        shifted = [expected_dummy_pairs(counts, e, params) for e in result.per_group_values]
        assert shifted[0] < uniform < shifted[1]
        assert result.overall_eps == pytest.approx(1.0, rel=1e-9)
