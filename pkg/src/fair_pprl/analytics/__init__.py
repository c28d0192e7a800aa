"""Analytics Module for closed-form FPR, pair-cost and fairness models"""

from .models import (
    AnalyticsParams,
    BaseRates,
    GroupBaseRates,
    PairCounts,
    budget_for_cost,
    clamped_dummy_pairs,
    dummy_dice_expected,
    expected_bin_pair_cost,
    expected_dummy_pairs,
    expected_pair_cost,
    fp_probability,
    model_fairness_loss,
    predicted_fpr,
)
from .sampling import estimate_base_rates, pair_counts_from_bins
from .simulation import simulate_fp_probability

__all__ = [
    'AnalyticsParams', 'BaseRates', 'GroupBaseRates', 'PairCounts', 'dummy_dice_expected',
    'fp_probability', 'expected_dummy_pairs', 'clamped_dummy_pairs', 'expected_pair_cost', 'expected_bin_pair_cost',
    'budget_for_cost', 'predicted_fpr', 'model_fairness_loss', 'estimate_base_rates',
    'pair_counts_from_bins', 'simulate_fp_probability',
]
