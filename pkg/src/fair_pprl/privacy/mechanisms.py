"""
Laplace Mechanism and Feature-Level Privacy Budgets

Each protected group g gets its own budget eps_g; the Laplace noise with
scale delta_b / eps_g decides how many dummy records a bin receives for that
group. Because the groups partition the data, the overall budget composes
harmonically: eps_overall = (sum_g 1/eps_g)^-1.

Use Cases:
- Draw per-(bin, group) dummy counts for DP blocking
- Convert between per-group and overall budgets
- Predict the mean number of injected dummies
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from ..exceptions import DomainError
from ..utils.helpers import derive_seed, round_half_away


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if math.isnan(eps) or eps <= 0:
        raise DomainError(f"Privacy budget must be > 0, got {eps}")
    return eps


def _check_sensitivity(delta_b: float) -> float:
    delta_b = float(delta_b)
    if not math.isfinite(delta_b) or delta_b <= 0:
        raise DomainError(f"Sensitivity must be a finite value > 0, got {delta_b}")
    return delta_b


def compose_budget(eps_list: Iterable[float]) -> float:
    """
    Overall budget of disjoint per-group mechanisms.

    Example:
        >>> compose_budget([2.0, 2.0])
        1.0
    """
    values = [_check_eps(e) for e in eps_list]
    if not values:
        raise DomainError("Cannot compose an empty list of budgets")
    total = math.fsum(1.0 / e for e in values)
    return math.inf if total == 0 else 1.0 / total


@dataclass(frozen=True)
class LaplaceScale:
    """Laplace noise scale sigma = delta_b / eps"""
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma <= 0:
            raise DomainError(f"Laplace scale must be a finite value > 0, got {self.sigma}")

    @classmethod
    def from_budget(cls, eps: float, delta_b: float = 1.0) -> "LaplaceScale":
        return cls(_check_sensitivity(delta_b) / _check_eps(eps))


@dataclass(frozen=True)
class PrivacyBudget:
    """
    Per-group budgets with their composed overall budget.

    Args:
        per_group_eps: eps_g for g = 1..G (math.inf disables noise for a group)
        sensitivity: delta_b of the bin-count query
    """
    per_group_eps: Tuple[float, ...]
    sensitivity: float = 1.0
    overall_eps: float = field(init=False)

    def __post_init__(self):
        eps = tuple(_check_eps(e) for e in self.per_group_eps)
        object.__setattr__(self, "per_group_eps", eps)
        object.__setattr__(self, "sensitivity", _check_sensitivity(self.sensitivity))
        object.__setattr__(self, "overall_eps", compose_budget(eps))

    @classmethod
    def uniform(cls, overall_eps: float, n_groups: int, sensitivity: float = 1.0) -> "PrivacyBudget":
        """Equal per-group budgets G * eps_overall, which compose back to eps_overall"""
        if n_groups < 1:
            raise DomainError(f"Need at least one group, got {n_groups}")
        return cls(tuple([n_groups * _check_eps(overall_eps)] * n_groups), sensitivity)

    @property
    def n_groups(self) -> int:
        return len(self.per_group_eps)

    def eps_for(self, group: int) -> float:
        if not 1 <= group <= self.n_groups:
            raise DomainError(f"Group {group} has no budget (G={self.n_groups})")
        return self.per_group_eps[group - 1]


@dataclass(frozen=True)
class GroupNoiseParams:
    """Noise settings of one protected group"""
    group: int
    eps: float
    flip: float
    sensitivity: float = 1.0

    def __post_init__(self):
        _check_eps(self.eps)
        _check_sensitivity(self.sensitivity)
        if not 0.0 <= self.flip <= 1.0:
            raise DomainError(f"Flip probability must be in [0, 1], got {self.flip}")

    @property
    def expected_dummies(self) -> float:
        return expected_dummies(self.eps, self.sensitivity)


def laplace_sample(
    scale: LaplaceScale,
    rng: np.random.Generator,
    size: Optional[Union[int, Tuple[int, ...]]] = None,
) -> Union[float, np.ndarray]:
    """Draw from the centred Laplace density exp(-|x|/sigma) / (2 sigma)"""
    draw = rng.laplace(0.0, scale.sigma, size)
    return float(draw) if size is None else draw


def expected_dummies(eps_g: float, delta_b: float = 1.0) -> float:
    """
    Expected dummies per (bin, group) ignoring rounding and the bin-size cap.

    This is E[max(X, 0)] = sigma / 2 for X ~ Laplace(sigma = delta_b / eps_g).
    """
    eps_g = _check_eps(eps_g)
    delta_b = _check_sensitivity(delta_b)
    if math.isinf(eps_g):
        return 0.0
    return delta_b / (2.0 * eps_g)


def dummy_count_draw(eps_g: float, delta_b: float, rng: np.random.Generator) -> int:
    """
    Number of dummies one (bin, group) receives before the bin-size cap.

    The Laplace draw is rounded half away from zero; negative counts become 0
    since records are never deleted.
    """
    if math.isinf(_check_eps(eps_g)):
        return 0
    draw = laplace_sample(LaplaceScale.from_budget(eps_g, delta_b), rng)
    return max(round_half_away(draw), 0)


def capped_dummy_count(eps_g: float, delta_b: float, cap: int, rng: np.random.Generator) -> int:
    """
    Dummies one (bin, group) actually receives: dummy_count_draw capped at the
    group's cardinality in the bin. The released group size is cap plus this.
    """
    if cap < 0:
        raise DomainError(f"cap must be >= 0, got {cap}")
    return min(dummy_count_draw(eps_g, delta_b, rng), cap)


def expected_clamped_dummies(eps_g: float, delta_b: float = 1.0, cap: Optional[int] = None) -> float:
    """
    Exact mean of min(dummy_count_draw, cap).

    With R = round(X), P(R = n) = (exp(-(n - 1/2)/sigma) - exp(-(n + 1/2)/sigma)) / 2
    for n >= 1, so without a cap the mean is sinh(1/(2 sigma)) r / (1 - r)^2 with
    r = exp(-1/sigma). Rounding sends (0, 1/2) to zero, so this sits below sigma / 2.

    Args:
        eps_g: Group budget
        delta_b: Sensitivity
        cap: Upper clamp (the group's size in the bin); None for no cap

    Returns:
        Expected number of dummies actually injected
    """
    eps_g = _check_eps(eps_g)
    delta_b = _check_sensitivity(delta_b)
    if math.isinf(eps_g):
        return 0.0
    sigma = delta_b / eps_g
    if cap is None:
        r = math.exp(-1.0 / sigma)
        return math.sinh(0.5 / sigma) * r / math.expm1(-1.0 / sigma) ** 2
    if cap < 0:
        raise DomainError(f"cap must be >= 0, got {cap}")
    if cap == 0:
        return 0.0

    def tail(x: float) -> float:
        return 0.5 * math.exp(-x / sigma)

    body = math.fsum(n * (tail(n - 0.5) - tail(n + 0.5)) for n in range(1, cap))
    return body + cap * tail(cap - 0.5)


def substream(master_seed: int, *keys: object) -> np.random.Generator:
    """Independent generator for a key path, e.g. ("dp-blocking", label, g)"""
    return np.random.default_rng(derive_seed(master_seed, *keys))

