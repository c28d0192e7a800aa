"""
Synthetic Two-Party Dataset Generator

Builds a pair of party datasets with a controlled number of shared entities,
exact protected-group proportions and optional group-dependent corruption of
party B's copies. Attribute values come from word pools shipped with the
package, so generation needs no external data.

Use Cases:
- Desk-scale stand-in for voter-registration style linkage data
- Fairness experiments with a known, tunable group bias
- Deterministic fixtures for tests and experiment sweeps
"""

from functools import lru_cache
from importlib import resources
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, DomainError, EmptyInputError
from ..utils.helpers import derive_seed, round_half_away
from ..utils.log import get_logger
from .corruption import CorruptionConfig, corrupt_dataset
from .dataset import Dataset, GroundTruth, Record, Schema

logger = get_logger(__name__)

SYNTHETIC_QIDS: Tuple[str, ...] = ("given_name", "surname", "suburb", "postcode")
POSTCODE_RANGE = (2000, 8000)


@lru_cache(maxsize=None)
def load_word_pool(name: str) -> Tuple[str, ...]:
    """
    Load one of the bundled word pools.

    Args:
        name: given_names, surnames or suburbs

    Returns:
        Sorted, de-duplicated tuple of lowercase words
    """
    try:
        text = resources.files("fair_pprl.records").joinpath("data").joinpath(f"{name}.txt").read_text("utf-8")
    except FileNotFoundError:
        raise ConfigurationError(f"No bundled word pool named {name!r}") from None
    return tuple(sorted({line.strip().lower() for line in text.splitlines() if line.strip()}))


def default_group_labels(n_groups: int) -> Tuple[str, ...]:
    return tuple(f"g{g}" for g in range(1, n_groups + 1))


def synthetic_schema(group_labels: Sequence[str]) -> Schema:
    """Schema of generated datasets"""
    return Schema(qid_columns=SYNTHETIC_QIDS, protected_features=("group",), group_labels=tuple(group_labels))


def group_quotas(n: int, proportions: Sequence[float]) -> List[int]:
    """Split n into integer group sizes by largest remainder (each within 1 of n*p)"""
    raw = np.asarray(proportions, dtype=float) * n
    quotas = np.floor(raw).astype(int)
    shortfall = n - int(quotas.sum())
    order = np.argsort(-(raw - quotas), kind="stable")
    quotas[order[:shortfall]] += 1
    return quotas.tolist()


def _validate(n: int, overlap: float, group_proportions: Sequence[float]) -> None:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"Record count must be a non-negative integer, got {n}")
    if n == 0:
        raise EmptyInputError("Cannot generate datasets with zero records")
    if not 0.0 <= overlap <= 1.0:
        raise DomainError(f"overlap must be in [0, 1], got {overlap}")
    if len(group_proportions) == 0:
        raise DomainError("At least one group proportion is required")
    if any(p < 0 for p in group_proportions):
        raise DomainError(f"Group proportions must be non-negative: {list(group_proportions)}")
    if abs(sum(group_proportions) - 1.0) > 1e-9:
        raise DomainError(f"Group proportions must sum to 1, got {sum(group_proportions)}")


def _draw_attributes(rng: np.random.Generator) -> Tuple[Tuple[str, str], ...]:
    given = load_word_pool("given_names")
    surnames = load_word_pool("surnames")
    suburbs = load_word_pool("suburbs")
    return (
        ("given_name", given[int(rng.integers(len(given)))]),
        ("surname", surnames[int(rng.integers(len(surnames)))]),
        ("suburb", suburbs[int(rng.integers(len(suburbs)))]),
        ("postcode", str(int(rng.integers(*POSTCODE_RANGE)))),
    )


def generate_synthetic(
    n: int,
    overlap: float,
    group_proportions: Sequence[float],
    seed: int,
    corruption: Optional[CorruptionConfig] = None,
    group_labels: Optional[Sequence[str]] = None,
) -> Tuple[Dataset, Dataset, GroundTruth]:
    """
    Generate two party datasets and their ground truth.

    Both parties hold n records with exactly the group sizes implied by
    group_proportions. round(overlap * n) entities appear in both datasets
    under the same entity_id; party B's copies pass through the optional
    corruption, which is how group bias is introduced.

    Args:
        n: Records per party
        overlap: Fraction of shared entities
        group_proportions: Fraction of records per group (sums to 1)
        seed: Master seed
        corruption: Corruption applied to party B
        group_labels: Labels for the groups (default g1, g2, ...)

    Returns:
        Tuple of (dataset A, dataset B, ground truth)

    Example:
        >>> a, b, truth = generate_synthetic(100, 0.5, [0.5, 0.5], seed=1)
        >>> len(truth)
        50
    """
    _validate(n, overlap, group_proportions)
    n = int(n)
    labels = tuple(group_labels) if group_labels is not None else default_group_labels(len(group_proportions))
    if len(labels) != len(group_proportions):
        raise ConfigurationError(
            f"{len(labels)} group labels given for {len(group_proportions)} proportions"
        )
    schema = synthetic_schema(labels)
    rng = np.random.default_rng(seed)
    quotas = group_quotas(n, group_proportions)

    groups_a = rng.permutation(np.repeat(np.arange(1, len(quotas) + 1), quotas))
    records_a = [
        Record(entity_id=f"E{i + 1:07d}", attributes=_draw_attributes(rng), group=int(g))
        for i, g in enumerate(groups_a)
    ]

    n_shared = round_half_away(overlap * n)
    shared = sorted(int(i) for i in rng.choice(n, size=n_shared, replace=False))
    shared_records = [records_a[i] for i in shared]

    remaining = list(quotas)
    for record in shared_records:
        remaining[record.group - 1] -= 1
    groups_b_only = rng.permutation(np.repeat(np.arange(1, len(quotas) + 1), remaining))
    b_only = [
        Record(entity_id=f"E{n + i + 1:07d}", attributes=_draw_attributes(rng), group=int(g))
        for i, g in enumerate(groups_b_only)
    ]

    records_b = shared_records + b_only
    records_b = [records_b[i] for i in rng.permutation(len(records_b))]

    dataset_a = Dataset(records=tuple(records_a), schema=schema)
    dataset_b = Dataset(records=tuple(records_b), schema=schema)
    if corruption is not None:
        dataset_b = corrupt_dataset(dataset_b, corruption, derive_seed(seed, "corrupt-party-b"))

    truth = GroundTruth(frozenset((r.entity_id, r.entity_id) for r in shared_records))
    logger.info(
        "[Synthetic] Generated 2 x %d records, %d shared, groups %s", n, n_shared, quotas
    )
    return dataset_a, dataset_b, truth
