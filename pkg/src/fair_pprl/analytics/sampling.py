"""
Base-Rate Estimation

Per-group confusion counts of the noiseless linkage (original records only),
estimated from a labelled sample of candidate pairs and scaled to the
population. These feed the closed-form FPR model.

Use Cases:
- Inputs to predicted_fpr and the noise-parameter optimizers
- Shared-bin pair counts for the pair-cost model
"""

from collections import Counter
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..blocking.dp_blocking import BinnedDataset
from ..encoding.bloom_filter import BloomFilter, dice
from ..exceptions import DomainError, InsufficientSampleError
from ..linkage.evaluation import Attribution, group_attribution
from ..privacy.mechanisms import substream
from ..records.dataset import GroundTruth
from ..utils.log import get_logger
from .models import BaseRates, GroupBaseRates, PairCounts

logger = get_logger(__name__)

MIN_SAMPLE_SIZE = 100


def pair_counts_from_bins(binned_a: BinnedDataset, binned_b: BinnedDataset) -> Dict[int, PairCounts]:
    """
    Shared-bin sums of the pair-cost model, from original records only.

    A group-g dummy only forms same-group pairs in a bin where the other
    party also holds group g, so N_A and N_B are summed over those bins.
    The (N_A, N_B) histogram of those bins feeds clamped_dummy_pairs.
    """
    counts_a = binned_a.original_group_counts()
    counts_b = binned_b.original_group_counts()
    groups = sorted(
        {g for c in counts_a.values() for g in c} | {g for c in counts_b.values() for g in c}
    )
    sums = {g: [0, 0, 0, 0] for g in groups}
    sizes: Dict[int, Counter] = {g: Counter() for g in groups}
    for label, per_group_a in counts_a.items():
        per_group_b = counts_b.get(label)
        if per_group_b is None:
            continue
        for g in groups:
            n_a, n_b = per_group_a.get(g, 0), per_group_b.get(g, 0)
            if n_a > 0 and n_b > 0:
                s = sums[g]
                s[0] += n_a
                s[1] += n_b
                s[2] += 1
                s[3] += n_a * n_b
                sizes[g][n_a, n_b] += 1
    return {
        g: PairCounts(*s, bin_sizes=tuple((n_a, n_b, bins) for (n_a, n_b), bins in sorted(sizes[g].items())))
        for g, s in sums.items()
    }


def _stratum_counts(
    pairs: List[Tuple[BloomFilter, BloomFilter]], threshold: float, sample_size: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """Scaled (predicted-positive, predicted-negative) counts of one stratum"""
    n = len(pairs)
    if n == 0:
        return 0.0, 0.0
    if n <= sample_size:
        picked = pairs
        scale = 1.0
    else:
        picked = [pairs[int(i)] for i in np.sort(rng.choice(n, size=sample_size, replace=False))]
        scale = n / sample_size
    positives = sum(1 for left, right in picked if dice(left, right) > threshold)
    return positives * scale, (len(picked) - positives) * scale


def estimate_base_rates(
    binned_a: BinnedDataset,
    binned_b: BinnedDataset,
    ground_truth: GroundTruth,
    threshold: float = 0.8,
    sample_size: int = 1000,
    seed: int = 0,
    n_groups: Optional[int] = None,
    attribution: Union[str, Attribution] = Attribution.SAME,
) -> BaseRates:
    """
    Estimate TP/FP/TN/FN of the noiseless threshold linkage per group.

    By default a pair counts for group g when both records belong to g,
    which is how the cost model counts group-g pairs. Within each group the true
    matches and the true non-matches are sampled separately, up to
    sample_size pairs each, and counts are scaled to the stratum sizes;
    a stratum no larger than sample_size is enumerated exactly. Only the
    sampled pairs are scored.

    Args:
        binned_a: Party A bins (dummies are ignored)
        binned_b: Party B bins (dummies are ignored)
        ground_truth: True links
        threshold: Classification threshold
        sample_size: Pairs sampled per (group, class) stratum
        seed: Sampling seed
        n_groups: Expected number of groups (default: groups seen in the bins)
        attribution: Group attribution of pairs (same, left or both)

    Returns:
        BaseRates with pair counts attached
    """
    if sample_size < MIN_SAMPLE_SIZE:
        raise DomainError(f"sample_size must be >= {MIN_SAMPLE_SIZE}, got {sample_size}")
    if not 0.0 < threshold < 1.0:
        raise DomainError(f"Threshold must be in (0, 1), got {threshold}")

    attribution = Attribution.parse(attribution)
    pair_counts = pair_counts_from_bins(binned_a, binned_b)
    groups = list(range(1, n_groups + 1)) if n_groups else sorted(pair_counts)

    strata: Dict[int, Dict[bool, List[Tuple[BloomFilter, BloomFilter]]]] = {
        g: {True: [], False: []} for g in groups
    }
    for label in binned_a.labels():
        if label not in binned_b.bins:
            continue
        left = [bf for bf in binned_a.bins[label].all_members() if not bf.is_dummy]
        right = [bf for bf in binned_b.bins[label].all_members() if not bf.is_dummy]
        for bf_a in left:
            for bf_b in right:
                actual = ground_truth.is_match(bf_a.source_entity_id, bf_b.source_entity_id)
                for g in group_attribution(bf_a.group, bf_b.group, attribution):
                    if g in strata:
                        strata[g][actual].append((bf_a, bf_b))

    rates: Dict[int, GroupBaseRates] = {}
    for g in groups:
        if not strata[g][True] and not strata[g][False]:
            raise InsufficientSampleError(f"Group {g} has no candidate pairs to estimate base rates from")
        tp, fn = _stratum_counts(strata[g][True], threshold, sample_size, substream(seed, "base-rates", g, "match"))
        fp, tn = _stratum_counts(
            strata[g][False], threshold, sample_size, substream(seed, "base-rates", g, "non-match")
        )
        rates[g] = GroupBaseRates(tp=tp, fp=fp, tn=tn, fn=fn, pair_counts=pair_counts.get(g, PairCounts()))
        logger.debug("[BaseRates] group %d: tp=%.1f fp=%.1f tn=%.1f fn=%.1f", g, tp, fp, tn, fn)
    return BaseRates(rates)
