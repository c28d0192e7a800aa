"""
Closed-Form Linkage Models

Analytical predictions used to choose noise parameters without running the
linkage: the Dice similarity of a dummy to its progenitor, the probability
that such a pair is classified as a match, the expected number of candidate
pairs that involve dummies, and the resulting per-group false positive rate
and Equalized-Odds fairness loss.

Use Cases:
- Objective functions for the Method A and Method B optimizers
- Predicted FPR and pair-cost curves for theory-vs-simulation checks
- Inverting the cost model to find the budget for a target cost
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erfc
from scipy.stats import binom

from ..exceptions import DomainError, UndefinedRateError
from ..privacy.mechanisms import expected_clamped_dummies, expected_dummies

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class AnalyticsParams:
    """
    Model parameters.

    mu and sigma_bit follow from the Bernoulli(p) fill model of a single bit.

    Args:
        n_l: Filter length
        threshold: Classification threshold T
        p: Probability that a bit is set (0.5, or a measured fill rate)
        delta_b: Sensitivity of the bin-count query
        n_bins: Override of the shared-bin count N_bins (None: per-group counts)
        flip_variance: Use the flip-aware variant of fp_probability
        clamp_dummies: Count dummy pairs with rounding and the bin-size cap
            when the pair counts carry bin sizes
    """
    n_l: int = 300
    threshold: float = 0.8
    p: float = 0.5
    delta_b: float = 1.0
    n_bins: Optional[int] = None
    flip_variance: bool = False
    clamp_dummies: bool = False

    def __post_init__(self):
        if self.n_l <= 0:
            raise DomainError(f"n_l must be positive, got {self.n_l}")
        if not 0.0 < self.threshold < 1.0:
            raise DomainError(f"Threshold must be in (0, 1), got {self.threshold}")
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"Fill probability must be in (0, 1), got {self.p}")
        if not self.delta_b > 0:
            raise DomainError(f"delta_b must be > 0, got {self.delta_b}")
        if self.n_bins is not None and self.n_bins < 0:
            raise DomainError(f"n_bins must be >= 0, got {self.n_bins}")

    @property
    def mu(self) -> float:
        return self.p

    @property
    def sigma_bit(self) -> float:
        return math.sqrt(self.p * (1.0 - self.p))


@dataclass(frozen=True)
class PairCounts:
    """
    Bin-indexed sums of the cost model for one group, over shared bins.

    Args:
        n_a: Party-A group-g originals in shared bins where B also holds group g
        n_b: Party-B group-g originals in shared bins where A also holds group g
        n_bins: Shared bins where both parties hold group g
        base_pairs: Sum over shared bins of N_{A,b,g} * N_{B,b,g}
        bin_sizes: (N_{A,b,g}, N_{B,b,g}, number of such bins) over those bins
    """
    n_a: int = 0
    n_b: int = 0
    n_bins: int = 0
    base_pairs: int = 0
    bin_sizes: Tuple[Tuple[int, int, int], ...] = ()


@dataclass(frozen=True)
class GroupBaseRates:
    """Population-scaled confusion counts of original-record pairs"""
    tp: float
    fp: float
    tn: float
    fn: float
    pair_counts: PairCounts = field(default_factory=PairCounts)

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DomainError("Base-rate counts must be non-negative")

    @property
    def fpr(self) -> float:
        if self.fp + self.tn <= 0:
            raise UndefinedRateError("FPR undefined: no true non-matches")
        return self.fp / (self.fp + self.tn)

    @property
    def fnr(self) -> float:
        if self.fn + self.tp <= 0:
            raise UndefinedRateError("FNR undefined: no true matches")
        return self.fn / (self.fn + self.tp)


@dataclass(frozen=True)
class BaseRates:
    """Per-group base rates, groups keyed 1..G"""
    groups: Mapping[int, GroupBaseRates]

    def __post_init__(self):
        object.__setattr__(self, "groups", dict(sorted(self.groups.items())))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def group(self, g: int) -> GroupBaseRates:
        try:
            return self.groups[g]
        except KeyError:
            raise DomainError(f"No base rates for group {g}") from None

    def n_pair_dum(self, g: int, eps_g: float, params: AnalyticsParams) -> float:
        """Expected dummy-involving same-group candidate pairs of group g"""
        return expected_dummy_pairs(self.group(g).pair_counts, eps_g, params)


def dummy_dice_expected(flip: float, n_l: int, n_1: float) -> float:
    """
    Expected Dice between a dummy and its progenitor.

    (flip * n_l / (2 (1 - flip) n_1) + 1)^-1, with the limit 0 at flip = 1.

    Example:
        >>> dummy_dice_expected(0.5, 300, 150)
        0.5
    """
    if not 0.0 <= flip <= 1.0:
        raise DomainError(f"Flip probability must be in [0, 1], got {flip}")
    if not 0 < n_1 <= n_l:
        raise DomainError(f"Popcount n_1 must be in (0, n_l], got {n_1}")
    if flip == 1.0:
        return 0.0
    return 1.0 / (flip * n_l / (2.0 * (1.0 - flip) * n_1) + 1.0)


def _fp_closed_form(f: np.ndarray, params: AnalyticsParams) -> np.ndarray:
    t, n_l = params.threshold, params.n_l
    sigma = params.sigma_bit
    arg = (
        math.sqrt(n_l) * t * f / (2.0 * math.sqrt(2.0) * sigma * (1.0 - t) * (1.0 - f))
        - math.sqrt(n_l) * params.mu / (sigma * math.sqrt(2.0))
    )
    return 0.5 * erfc(arg)


def _fp_flip_aware(f: np.ndarray, params: AnalyticsParams) -> np.ndarray:
    # Dice > T iff 2(1-T) a > T b, with b ~ Bin(n_l, f) flipped bits and
    # a ~ Bin(n_l - b, p) kept ones among the rest.
    t, n_l, p = params.threshold, params.n_l, params.p
    flipped = np.arange(n_l + 1)
    needed = np.floor(t * flipped / (2.0 * (1.0 - t)) + 1e-9)
    clears = binom.sf(needed, n_l - flipped, p)
    values = [float(binom.pmf(flipped, n_l, x) @ clears) for x in np.atleast_1d(f).ravel()]
    return np.asarray(values).reshape(np.shape(f))


def fp_probability(
    flip: ArrayLike,
    params: AnalyticsParams,
    include_flip_variance: Optional[bool] = None,
) -> Union[float, np.ndarray]:
    """
    Probability that a dummy and its progenitor are classified as a match.

    The default closed form treats the progenitor popcount as normal and the
    flips at their mean:

        P = 1/2 erfc( sqrt(n_l) T f / (2 sqrt(2) sigma (1-T)(1-f))
                      - sqrt(n_l) mu / (sigma sqrt(2)) )

    With include_flip_variance the probability is computed exactly for a
    progenitor with Bernoulli(p) bits and independent flips, summing over the
    binomial number of flipped bits. The closed form is sharper than that
    around the transition flip (up to 0.2 off at n_l = 300, T = 0.8).

    Args:
        flip: Flip probability (scalar or array) in [0, 1]
        params: Model parameters
        include_flip_variance: Override params.flip_variance

    Returns:
        Probability in [0, 1]; exactly 1.0 at flip 0 and 0.0 at flip 1
    """
    f = np.asarray(flip, dtype=float)
    if np.any((f < 0) | (f > 1)) or np.any(np.isnan(f)):
        raise DomainError(f"Flip probability must be in [0, 1], got {flip}")
    flip_aware = params.flip_variance if include_flip_variance is None else include_flip_variance

    inner = (f > 0) & (f < 1)
    out = np.where(f == 0, 1.0, 0.0)
    if np.any(inner):
        model = _fp_flip_aware if flip_aware else _fp_closed_form
        out = np.where(inner, model(np.where(inner, f, 0.5), params), out)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def clamped_dummy_pairs(counts: PairCounts, eps_g: float, delta_b: float = 1.0) -> float:
    """
    Expected dummy-involving group-g pairs with rounded, size-capped counts.

    Per shared bin E[(N_A + R_A)(N_B + R_B)] - N_A N_B with R the injected
    dummies of each party, which are independent with mean
    expected_clamped_dummies(eps_g, delta_b, cap=N).

    Args:
        counts: Pair counts with bin_sizes
        eps_g: Group budget (math.inf: no dummies)
        delta_b: Sensitivity

    Returns:
        Expected number of pairs involving at least one dummy
    """
    means: Dict[int, float] = {}

    def mean(cap: int) -> float:
        if cap not in means:
            means[cap] = expected_clamped_dummies(eps_g, delta_b, cap=cap)
        return means[cap]

    return math.fsum(
        bins * (n_a * mean(n_b) + n_b * mean(n_a) + mean(n_a) * mean(n_b))
        for n_a, n_b, bins in counts.bin_sizes
    )


def expected_dummy_pairs(counts: PairCounts, eps_g: float, params: AnalyticsParams) -> float:
    """
    E(C_{g,dum}) = (n_a + n_b) dB / (2 eps_g) + N_bins dB^2 / (4 eps_g^2)

    With params.clamp_dummies and known bin sizes, clamped_dummy_pairs instead.
    """
    if params.clamp_dummies and counts.bin_sizes:
        return clamped_dummy_pairs(counts, eps_g, params.delta_b)
    m = expected_dummies(eps_g, params.delta_b)
    n_bins = counts.n_bins if params.n_bins is None else params.n_bins
    return (counts.n_a + counts.n_b) * m + n_bins * m * m


def expected_pair_cost(
    N_A_g: float,
    N_B_g: float,
    eps_g: float,
    delta_b: float,
    n_bins: float,
    base_pairs_g: float,
) -> float:
    """
    Expected group-g candidate pairs after dummy injection.

    base_pairs_g + (N_A_g + N_B_g) dB / (2 eps_g) + n_bins dB^2 / (4 eps_g^2)

    Example:
        >>> expected_pair_cost(100, 100, 1.0, 1.0, 10, 0)
        102.5
    """
    if min(N_A_g, N_B_g, n_bins, base_pairs_g) < 0:
        raise DomainError("Counts must be non-negative")
    m = expected_dummies(eps_g, delta_b)
    return base_pairs_g + (N_A_g + N_B_g) * m + n_bins * m * m


def budget_for_cost(
    cost: float,
    N_g: float,
    n_bins: float,
    base_pairs: float,
    delta_b: float = 1.0,
) -> float:
    """
    Invert expected_pair_cost: the eps_g whose expected cost equals cost.

    Solves n_bins u^2 + N_g u = cost - base_pairs for u = dB / (2 eps_g) and
    takes the positive root.

    Args:
        cost: Target expected pair count for the group
        N_g: N_{A,g} + N_{B,g}
        n_bins: Shared-bin count
        base_pairs: Pairs among originals
        delta_b: Sensitivity

    Returns:
        The budget (math.inf when cost equals base_pairs)
    """
    extra = cost - base_pairs
    if extra < 0:
        raise DomainError(f"Cost {cost} is below the noiseless cost {base_pairs}")
    if extra == 0:
        return math.inf
    if n_bins > 0:
        u = (-N_g + math.sqrt(N_g * N_g + 4.0 * n_bins * extra)) / (2.0 * n_bins)
    elif N_g > 0:
        u = extra / N_g
    else:
        raise DomainError("Cost cannot change without records or shared bins")
    return delta_b / (2.0 * u)


def expected_bin_pair_cost(
    original_counts_a: Mapping[object, Mapping[int, int]],
    original_counts_b: Mapping[object, Mapping[int, int]],
    per_group_eps: Sequence[float],
    delta_b: float = 1.0,
) -> Dict[int, float]:
    """
    Expected same-group candidate pairs per group, honouring the bin-size cap.

    For every shared bin the two parties' dummy counts are independent, so
    E[(N_A + r_A)(N_B + r_B)] = (N_A + E r_A)(N_B + E r_B) with E r from
    expected_clamped_dummies.

    Args:
        original_counts_a: bin label -> {group: originals} for party A
        original_counts_b: Same for party B
        per_group_eps: eps_g per group (math.inf for no noise)
        delta_b: Sensitivity

    Returns:
        group -> expected pair count
    """
    cost: Dict[int, float] = {g: 0.0 for g in range(1, len(per_group_eps) + 1)}
    for label, counts_a in original_counts_a.items():
        counts_b = original_counts_b.get(label)
        if counts_b is None:
            continue
        for g in cost:
            n_a, n_b = counts_a.get(g, 0), counts_b.get(g, 0)
            eps = per_group_eps[g - 1]
            r_a = expected_clamped_dummies(eps, delta_b, cap=n_a)
            r_b = expected_clamped_dummies(eps, delta_b, cap=n_b)
            cost[g] += (n_a + r_a) * (n_b + r_b)
    return cost


def predicted_fpr(
    group: int,
    eps_g: float,
    flip_g: float,
    base: BaseRates,
    params: AnalyticsParams,
    dummy_pairs: Optional[float] = None,
) -> float:
    """
    Predicted false positive rate of group g after dummy injection.

    Every expected dummy-involving pair is a true non-match that turns into
    a false positive with probability fp_probability(flip_g):

        FPR_g = (FP_ori + P * E(C_dum)) / (FP_ori + TN_ori + E(C_dum))

    Args:
        group: Group index
        eps_g: Group budget (math.inf: no dummies)
        flip_g: Group flip probability
        base: Base rates with pair counts
        params: Model parameters
        dummy_pairs: Replace E(C_dum), e.g. by a clamp-aware expectation

    Returns:
        Rate in [0, 1]
    """
    rates = base.group(group)
    d = expected_dummy_pairs(rates.pair_counts, eps_g, params) if dummy_pairs is None else dummy_pairs
    if d < 0:
        raise DomainError(f"dummy_pairs must be >= 0, got {d}")
    denominator = rates.fp + rates.tn + d
    if denominator <= 0:
        raise UndefinedRateError(f"Predicted FPR of group {group} has a zero denominator")
    return (rates.fp + fp_probability(flip_g, params) * d) / denominator


def model_fairness_loss(
    flips: Sequence[float],
    eps: Sequence[float],
    base: BaseRates,
    params: AnalyticsParams,
) -> float:
    """
    Equalized-Odds loss predicted by the model.

    Max over group pairs of |FPR_i - FPR_j| (predicted_fpr) and
    |FNR_i - FNR_j| (base rates; dummies never create false negatives).
    """
    if len(flips) != len(eps):
        raise DomainError(f"{len(flips)} flips for {len(eps)} budgets")
    if len(flips) < 2:
        raise DomainError("Fairness loss needs at least two groups")
    groups = range(1, len(flips) + 1)
    fprs = [predicted_fpr(g, eps[g - 1], flips[g - 1], base, params) for g in groups]
    fnrs = [base.group(g).fnr for g in groups]
    loss = 0.0
    for i, j in itertools.combinations(range(len(fprs)), 2):
        loss = max(loss, abs(fprs[i] - fprs[j]), abs(fnrs[i] - fnrs[j]))
    return loss
