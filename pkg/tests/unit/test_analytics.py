"""
Unit tests for the closed-form models, base-rate estimation and simulation
"""

import math

import numpy as np
import pytest
from fair_pprl.analytics import (
    AnalyticsParams,
    BaseRates,
    GroupBaseRates,
    PairCounts,
    budget_for_cost,
    clamped_dummy_pairs,
    dummy_dice_expected,
    estimate_base_rates,
    expected_bin_pair_cost,
    expected_dummy_pairs,
    expected_pair_cost,
    fp_probability,
    model_fairness_loss,
    pair_counts_from_bins,
    predicted_fpr,
    simulate_fp_probability,
)
from fair_pprl.analytics import sampling as sampling_module
from fair_pprl.blocking import Scenario, ScenarioConfig, apply_feature_level_dp
from fair_pprl.encoding import dice
from fair_pprl.exceptions import DomainError, InsufficientSampleError, UndefinedRateError
from fair_pprl.linkage import Attribution, candidate_pairs, classify_threshold, evaluate, same_group_cost


class TestDummyModels:
    """Test suite for dummy similarity and FP probability"""

    @pytest.fixture
    def params(self):
        """Default model parameters"""
        return AnalyticsParams()

    def test_params(self, params):
        """Test derived Bernoulli moments and validation"""
        assert params.mu == 0.5
        assert params.sigma_bit == 0.5
        with pytest.raises(DomainError):
            AnalyticsParams(threshold=1.0)
        with pytest.raises(DomainError):
            AnalyticsParams(p=0.0)
        with pytest.raises(DomainError):
            AnalyticsParams(n_bins=-1)

    def test_dummy_dice_expected(self):
        """Test the expected dummy similarity and its limits"""
        assert dummy_dice_expected(0.5, 300, 150) == pytest.approx(0.5)
        assert dummy_dice_expected(0.0, 300, 150) == 1.0
        assert dummy_dice_expected(1.0, 300, 150) == 0.0
        assert dummy_dice_expected(0.2, 300, 150) == pytest.approx(0.8)
        with pytest.raises(DomainError):
            dummy_dice_expected(0.2, 300, 0)

    def test_dummy_dice_matches_simulation(self):
        """Test the formula against flipped random filters"""
        rng = np.random.default_rng(0)
        bits = np.zeros(300, dtype=bool)
        bits[rng.choice(300, size=150, replace=False)] = True
        scores = [dice(bits, bits ^ (rng.random(300) < 0.2)) for _ in range(2000)]
        assert np.mean(scores) == pytest.approx(dummy_dice_expected(0.2, 300, 150), abs=0.01)

    def test_fp_probability_edges(self, params):
        """Test exact values at flip 0 and 1 and the transition at 0.2"""
        assert fp_probability(0.0, params) == 1.0
        assert fp_probability(1.0, params) == 0.0
        assert fp_probability(0.2, params) == pytest.approx(0.5)
        assert fp_probability(0.2, params, include_flip_variance=True) == pytest.approx(0.5, abs=0.03)
        assert fp_probability(0.3, params) < 1e-20
        assert fp_probability(0.1, params) > 1 - 1e-9
        with pytest.raises(DomainError):
            fp_probability(1.5, params)

    def test_fp_probability_vectorized(self, params):
        """Test array input and monotone decrease"""
        flips = np.linspace(0.0, 1.0, 51)
        for flip_aware in (False, True):
            values = fp_probability(flips, params, include_flip_variance=flip_aware)
            assert isinstance(values, np.ndarray)
            assert values.shape == flips.shape
            assert np.all(np.diff(values) <= 1e-12)
            assert np.all((values >= 0) & (values <= 1))
        assert isinstance(fp_probability(0.4, params), float)
        assert fp_probability(0.25, AnalyticsParams(flip_variance=True)) == fp_probability(
            0.25, params, include_flip_variance=True
        )

    def test_flip_aware_model_matches_simulation(self, params):
        """Test the flip-aware model on the 0.02 flip grid against 10^4 trials each"""
        for i, flip in enumerate(np.round(np.arange(0.0, 0.5 + 1e-9, 0.02), 2)):
            simulated = simulate_fp_probability(float(flip), params, trials=10 ** 4, rng=100 + i)
            assert fp_probability(float(flip), params, include_flip_variance=True) == pytest.approx(simulated, abs=0.02)

    def test_flip_aware_counts_flipped_bits(self):
        """Test the exact sum on a filter small enough to enumerate"""
        params = AnalyticsParams(n_l=2, p=0.5, threshold=0.5)
        # Dice > 0.5 iff a > b: no flips with a >= 1, or one flip with a = 1
        f = 0.3
        expected = (1 - f) ** 2 * 0.75 + 2 * f * (1 - f) * 0.5
        assert fp_probability(f, params, include_flip_variance=True) == pytest.approx(expected)

    def test_closed_form_matches_simulation_away_from_transition(self, params):
        """Test the closed form where the flips are far from the transition"""
        for flip in [0.0, 0.05, 0.1, 0.14, 0.26, 0.3, 0.4, 0.5]:
            simulated = simulate_fp_probability(flip, params, trials=4000, rng=7)
            assert fp_probability(flip, params) == pytest.approx(simulated, abs=0.05)

    def test_simulation_arguments(self, params):
        """Test simulation validation and seeding"""
        assert simulate_fp_probability(0.3, params, 500, rng=1) == simulate_fp_probability(0.3, params, 500, rng=1)
        assert simulate_fp_probability(0.0, params, 100, rng=np.random.default_rng(2)) == 1.0
        with pytest.raises(DomainError):
            simulate_fp_probability(0.3, params, 0)
        with pytest.raises(DomainError):
            simulate_fp_probability(-0.1, params, 10)


class TestCostModel:
    """Test suite for the pair-cost model"""

    def test_expected_pair_cost(self):
        """Test the closed form and its pieces"""
        assert expected_pair_cost(100, 100, 1.0, 1.0, 10, 0) == pytest.approx(102.5)
        assert expected_pair_cost(100, 100, math.inf, 1.0, 10, 40) == 40
        counts = PairCounts(n_a=100, n_b=100, n_bins=10, base_pairs=0)
        assert expected_dummy_pairs(counts, 1.0, AnalyticsParams()) == pytest.approx(102.5)
        assert expected_dummy_pairs(counts, 1.0, AnalyticsParams(n_bins=0)) == pytest.approx(100.0)
        with pytest.raises(DomainError):
            expected_pair_cost(-1, 100, 1.0, 1.0, 10, 0)

    def test_cost_decreases_with_budget(self):
        """Test more budget means fewer dummy pairs"""
        costs = [expected_pair_cost(50, 60, eps, 1.0, 8, 500) for eps in (0.1, 1.0, 10.0)]
        assert costs[0] > costs[1] > costs[2] > 500

    @pytest.mark.parametrize("eps", [0.05, 0.7, 12.0])
    def test_budget_for_cost_inverts(self, eps):
        """Test budget_for_cost recovers the budget of a cost"""
        cost = expected_pair_cost(120, 80, eps, 1.0, 9, 300)
        assert budget_for_cost(cost, 200, 9, 300) == pytest.approx(eps, rel=1e-9)

    def test_budget_for_cost_edges(self):
        """Test the noiseless cost, unreachable costs and the linear case"""
        assert math.isinf(budget_for_cost(300, 200, 9, 300))
        with pytest.raises(DomainError):
            budget_for_cost(299, 200, 9, 300)
        assert budget_for_cost(50, 100, 0, 0) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            budget_for_cost(10, 0, 0, 0)

    def test_bin_pair_cost_without_noise(self, binned_pair):
        """Test infinite budgets give the original same-group pair count"""
        binned_a, binned_b = binned_pair
        cost = expected_bin_pair_cost(
            binned_a.original_group_counts(), binned_b.original_group_counts(), (math.inf, math.inf)
        )
        actual = same_group_cost(candidate_pairs(binned_a, binned_b))
        assert cost == {1: actual[1], 2: actual[2]}
        counts = pair_counts_from_bins(binned_a, binned_b)
        assert counts[1].base_pairs == actual[1]
        assert 0 < counts[2].n_bins <= 16

    def test_bin_pair_cost_matches_simulation(self, binned_pair):
        """Test the clamp-aware expectation against injected dummies"""
        binned_a, binned_b = binned_pair
        sc = ScenarioConfig.uniform(Scenario.BASELINE2, 0.5, 2, 0.5)
        expected = expected_bin_pair_cost(
            binned_a.original_group_counts(), binned_b.original_group_counts(), sc.per_group_eps
        )
        totals = {1: [], 2: []}
        for seed in range(30):
            counts_a = apply_feature_level_dp(binned_a, sc, seed=2 * seed).group_counts()
            counts_b = apply_feature_level_dp(binned_b, sc, seed=2 * seed + 1).group_counts()
            for g in totals:
                totals[g].append(sum(
                    counts_a[label].get(g, 0) * counts_b[label].get(g, 0)
                    for label in counts_a if label in counts_b
                ))
        for g in totals:
            assert np.mean(totals[g]) == pytest.approx(expected[g], rel=0.03)

    def test_bin_sizes_match_sums(self, binned_pair):
        """Test the bin-size histogram adds up to the shared-bin sums"""
        for counts in pair_counts_from_bins(*binned_pair).values():
            assert sum(n_a * bins for n_a, _, bins in counts.bin_sizes) == counts.n_a
            assert sum(n_b * bins for _, n_b, bins in counts.bin_sizes) == counts.n_b
            assert sum(bins for _, _, bins in counts.bin_sizes) == counts.n_bins
            assert sum(n_a * n_b * bins for n_a, n_b, bins in counts.bin_sizes) == counts.base_pairs

    @pytest.mark.parametrize("eps", [0.1, 0.5, 2.0])
    def test_clamped_pairs_equal_bin_cost(self, binned_pair, eps):
        """Test clamped dummy pairs are the bin-level cost minus the original pairs"""
        binned_a, binned_b = binned_pair
        cost = expected_bin_pair_cost(
            binned_a.original_group_counts(), binned_b.original_group_counts(), (eps, eps)
        )
        for g, counts in pair_counts_from_bins(binned_a, binned_b).items():
            assert clamped_dummy_pairs(counts, eps) == pytest.approx(cost[g] - counts.base_pairs, rel=1e-9)

    def test_clamped_pairs_below_closed_form(self, binned_pair):
        """Test the cap removes pairs and the model switch falls back without bin sizes"""
        counts = pair_counts_from_bins(*binned_pair)[1]
        closed = AnalyticsParams()
        clamped = AnalyticsParams(clamp_dummies=True)
        for eps in (0.05, 0.5, 5.0):
            assert clamped_dummy_pairs(counts, eps) <= expected_dummy_pairs(counts, eps, closed)
            assert expected_dummy_pairs(counts, eps, clamped) == clamped_dummy_pairs(counts, eps)
        bare = PairCounts(counts.n_a, counts.n_b, counts.n_bins, counts.base_pairs)
        assert expected_dummy_pairs(bare, 0.5, clamped) == expected_dummy_pairs(bare, 0.5, closed)
        assert clamped_dummy_pairs(counts, math.inf) == 0.0


class TestPredictedFpr:
    """Test suite for the FPR and fairness models"""

    @pytest.fixture
    def base(self):
        """Two groups with different base FPRs"""
        counts = PairCounts(n_a=100, n_b=100, n_bins=10, base_pairs=2000)
        return BaseRates({
            1: GroupBaseRates(tp=10, fp=5, tn=95, fn=2, pair_counts=counts),
            2: GroupBaseRates(tp=10, fp=20, tn=80, fn=2, pair_counts=counts),
        })

    @pytest.fixture
    def params(self):
        """Default model parameters"""
        return AnalyticsParams()

    def test_base_rates(self, base):
        """Test derived rates and lookups"""
        assert base.n_groups == 2
        assert base.group(1).fpr == 0.05
        assert base.group(2).fnr == pytest.approx(2 / 12)
        with pytest.raises(DomainError):
            base.group(3)
        with pytest.raises(UndefinedRateError):
            GroupBaseRates(tp=0, fp=0, tn=0, fn=0).fpr
        with pytest.raises(DomainError):
            GroupBaseRates(tp=-1, fp=0, tn=0, fn=0)

    def test_predicted_fpr_values(self, base, params):
        """Test the FPR formula at the flip extremes"""
        assert predicted_fpr(1, math.inf, 0.5, base, params) == pytest.approx(0.05)
        assert predicted_fpr(1, 1.0, 0.0, base, params) == pytest.approx(107.5 / 202.5)
        assert predicted_fpr(1, 1.0, 1.0, base, params) == pytest.approx(5 / 202.5)
        assert predicted_fpr(1, 1.0, 1.0, base, params, dummy_pairs=0.0) == pytest.approx(0.05)
        with pytest.raises(DomainError):
            predicted_fpr(1, 1.0, 1.0, base, params, dummy_pairs=-1.0)

    def test_zero_denominator(self, params):
        """Test a group without non-matches or dummies has no FPR"""
        base = BaseRates({1: GroupBaseRates(tp=3, fp=0, tn=0, fn=0)})
        with pytest.raises(UndefinedRateError):
            predicted_fpr(1, math.inf, 0.5, base, params)

    def test_fpr_rises_with_budget_when_dummies_rarely_match(self, base, params):
        """Test fewer dummies dilute the FPR less when P < FP/(FP+TN)"""
        fprs = [predicted_fpr(1, eps, 0.5, base, params) for eps in (0.1, 1.0, 10.0, math.inf)]
        assert fprs == sorted(fprs)
        assert fprs[0] < fprs[-1]

    def test_model_fairness_loss(self, base, params):
        """Test the loss combines predicted FPR and base FNR gaps"""
        loss = model_fairness_loss([0.5, 0.5], [math.inf, math.inf], base, params)
        assert loss == pytest.approx(0.15)
        same = BaseRates({1: base.group(1), 2: base.group(1)})
        assert model_fairness_loss([0.3, 0.3], [2.0, 2.0], same, params) == pytest.approx(0.0)
        with pytest.raises(DomainError):
            model_fairness_loss([0.5], [1.0], base, params)
        with pytest.raises(DomainError):
            model_fairness_loss([0.5, 0.5], [1.0], base, params)


class TestBaseRateEstimation:
    """Test suite for estimate_base_rates"""

    @pytest.fixture
    def exact_report(self, binned_pair, synthetic_pair):
        """Noiseless same-group evaluation"""
        _, _, truth = synthetic_pair
        pairs = list(candidate_pairs(*binned_pair))
        return evaluate(classify_threshold(pairs, 0.8), truth, pairs, attribution=Attribution.SAME)

    def test_exact_when_sample_covers_strata(self, binned_pair, synthetic_pair, exact_report):
        """Test counts equal the full evaluation when nothing is sampled"""
        _, _, truth = synthetic_pair
        rates = estimate_base_rates(*binned_pair, truth, sample_size=10 ** 6)
        for g in (1, 2):
            metrics = exact_report.groups[g]
            estimated = rates.group(g)
            assert (estimated.tp, estimated.fp, estimated.tn, estimated.fn) == (
                metrics.tp, metrics.fp, metrics.tn, metrics.fn
            )

    def test_sampling_scales_to_population(self, binned_pair, synthetic_pair, exact_report):
        """Test sampled strata are scaled back to the stratum sizes"""
        _, _, truth = synthetic_pair
        rates = estimate_base_rates(*binned_pair, truth, sample_size=100, seed=4)
        for g in (1, 2):
            metrics = exact_report.groups[g]
            estimated = rates.group(g)
            assert estimated.fp + estimated.tn == pytest.approx(metrics.fp + metrics.tn)
            assert estimated.tp + estimated.fn == pytest.approx(metrics.tp + metrics.fn)
        assert rates.group(1).pair_counts == pair_counts_from_bins(*binned_pair)[1]

    def test_dummies_ignored(self, binned_pair, synthetic_pair):
        """Test perturbed bins give the same estimate as the originals"""
        _, _, truth = synthetic_pair
        binned_a, binned_b = binned_pair
        perturbed = apply_feature_level_dp(binned_a, ScenarioConfig.uniform("Baseline2", 0.2, 2, 0.3, seed=6))
        assert estimate_base_rates(perturbed, binned_b, truth, sample_size=10 ** 6) == estimate_base_rates(
            binned_a, binned_b, truth, sample_size=10 ** 6
        )

    def test_errors(self, binned_pair, synthetic_pair):
        """Test small samples, bad thresholds and empty groups"""
        _, _, truth = synthetic_pair
        with pytest.raises(DomainError):
            estimate_base_rates(*binned_pair, truth, sample_size=50)
        with pytest.raises(DomainError):
            estimate_base_rates(*binned_pair, truth, threshold=0.0)
        with pytest.raises(InsufficientSampleError):
            estimate_base_rates(*binned_pair, truth, n_groups=3)

    def test_only_sampled_pairs_scored(self, binned_pair, synthetic_pair, monkeypatch):
        """Test the similarity is computed for the sampled pairs and no others"""
        _, _, truth = synthetic_pair
        calls = []

        def counting_dice(left, right):
            calls.append(1)
            return dice(left, right)

        monkeypatch.setattr(sampling_module, "dice", counting_dice)
        estimate_base_rates(*binned_pair, truth, sample_size=100, seed=2)
        total = sum(1 for p in candidate_pairs(*binned_pair) if p.group_left == p.group_right)
        assert 0 < len(calls) <= 2 * 100 * 2
        assert len(calls) < total
