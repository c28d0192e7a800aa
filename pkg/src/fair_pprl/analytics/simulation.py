"""
Monte-Carlo Checks of the Closed-Form Models

Draws random progenitor filters with Bernoulli(p) bits, flips them into
dummies and measures how often the pair clears the classification
threshold.

Use Cases:
- Empirical counterpart of fp_probability
"""

from typing import Optional, Union

import numpy as np

from ..exceptions import DomainError
from .models import AnalyticsParams

BATCH = 2000


def simulate_fp_probability(
    flip: float,
    params: AnalyticsParams,
    trials: int,
    rng: Optional[Union[int, np.random.Generator]] = None,
) -> float:
    """
    Fraction of trials where Dice(progenitor, dummy) > threshold.

    Args:
        flip: Flip probability in [0, 1]
        params: n_l, p and threshold
        trials: Number of progenitor/dummy pairs
        rng: Generator or integer seed

    Returns:
        Empirical probability
    """
    if not 0.0 <= flip <= 1.0:
        raise DomainError(f"Flip probability must be in [0, 1], got {flip}")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    hits = 0
    remaining = trials
    while remaining > 0:
        size = min(BATCH, remaining)
        bits = rng.random((size, params.n_l)) < params.p
        dummies = bits ^ (rng.random((size, params.n_l)) < flip)
        common = np.count_nonzero(bits & dummies, axis=1)
        total = np.count_nonzero(bits, axis=1) + np.count_nonzero(dummies, axis=1)
        dice = np.divide(2.0 * common, total, out=np.zeros(size), where=total > 0)
        hits += int(np.count_nonzero(dice > params.threshold))
        remaining -= size
    return hits / trials
