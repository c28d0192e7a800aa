"""
Linkage Evaluation

Per-group confusion counts, linkage quality (precision, recall, F*) and
Equalized-Odds fairness of a set of classified candidate pairs. Dummy records
match nothing, so every dummy-involving pair is a true non-match.

Use Cases:
- Score a linkage run per protected group and overall
- Compare scenarios by fairness (1 - fairness loss) and pair cost
- Export one structured row per group for experiment reports
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Collection, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Union

import numpy as np
import pandas as pd

from ..exceptions import ConfigurationError, DimensionError, IntegrityError
from ..records.dataset import GroundTruth
from ..utils.helpers import safe_divide
from .classifiers import CandidatePair, is_true_match

OVERALL = "overall"


class Attribution(Enum):
    """How a pair is attributed to protected groups"""
    LEFT = "left"
    BOTH = "both"
    SAME = "same"

    @classmethod
    def parse(cls, value: Union[str, "Attribution"]) -> "Attribution":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationError(f"Unknown attribution {value!r}; choose left, both or same") from None


def group_attribution(group_left: int, group_right: int, attribution: Attribution) -> Set[int]:
    """Groups a pair of records counts for; a cross-group pair counts for none under SAME"""
    if attribution is Attribution.LEFT:
        return {group_left}
    if attribution is Attribution.BOTH:
        return {group_left, group_right}
    return {group_left} if group_left == group_right else set()


def attributed_groups(pair: CandidatePair, attribution: Attribution) -> Set[int]:
    return group_attribution(pair.group_left, pair.group_right, attribution)


@dataclass
class GroupMetrics:
    """Confusion counts with derived rates; empty denominators give 0.0"""
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def add(self, predicted: bool, actual: bool) -> None:
        if actual:
            if predicted:
                self.tp += 1
            else:
                self.fn += 1
        elif predicted:
            self.fp += 1
        else:
            self.tn += 1

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> float:
        return safe_divide(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return safe_divide(self.tp, self.tp + self.fn)

    @property
    def f_star(self) -> float:
        """TP / (TP + FP + FN)"""
        return safe_divide(self.tp, self.tp + self.fp + self.fn)

    @property
    def fpr(self) -> float:
        return safe_divide(self.fp, self.fp + self.tn)

    @property
    def fnr(self) -> float:
        return safe_divide(self.fn, self.fn + self.tp)

    def to_dict(self) -> Dict[str, float]:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f_star": self.f_star,
            "fpr": self.fpr, "fnr": self.fnr,
        }


def equalized_odds_loss(fprs: Mapping[int, float], fnrs: Mapping[int, float]) -> float:
    """
    Largest |FPR_i - FPR_j| or |FNR_i - FNR_j| over group pairs.

    Example:
        >>> equalized_odds_loss({1: 0.25, 2: 0.5}, {1: 0.5, 2: 0.625})
        0.25
    """
    groups = sorted(fprs)
    if sorted(fnrs) != groups:
        raise DimensionError("FPR and FNR must be given for the same groups")
    loss = 0.0
    for i, j in itertools.combinations(groups, 2):
        loss = max(loss, abs(fprs[i] - fprs[j]), abs(fnrs[i] - fnrs[j]))
    return loss


@dataclass
class LinkageReport:
    """Per-group and overall linkage quality, fairness and cost"""
    groups: Dict[int, GroupMetrics]
    overall: GroupMetrics
    fairness_loss: float
    cost: int
    group_cost: Dict[int, int] = field(default_factory=dict)
    attribution: Attribution = Attribution.LEFT

    @property
    def fairness(self) -> float:
        return 1.0 - self.fairness_loss

    def to_records(self, context: Optional[Mapping[str, Any]] = None) -> List[Dict[str, Any]]:
        """One row per group plus an overall row, prefixed by context columns"""
        rows = []
        for key in list(self.groups) + [OVERALL]:
            metrics = self.overall if key == OVERALL else self.groups[key]
            row: Dict[str, Any] = dict(context or {})
            row["group"] = key
            row.update(metrics.to_dict())
            row["fairness_loss"] = self.fairness_loss
            row["fairness"] = self.fairness
            row["cost"] = self.cost if key == OVERALL else self.group_cost.get(key, 0)
            rows.append(row)
        return rows

    def to_text(self, context: Optional[Mapping[str, Any]] = None) -> str:
        """Human-readable table"""
        frame = pd.DataFrame(self.to_records()).set_index("group")
        header = ""
        if context:
            header = ", ".join(f"{k}={v}" for k, v in context.items()) + "\n"
        summary = (
            f"\nfairness_loss={self.fairness_loss:.4f} fairness={self.fairness:.4f} "
            f"cost={self.cost} attribution={self.attribution.value}"
        )
        columns = ["tp", "fp", "tn", "fn", "precision", "recall", "f_star", "fpr", "fnr", "cost"]
        return header + frame[columns].to_string(float_format=lambda v: f"{v:.4f}") + summary


def evaluate(
    predictions: Sequence[bool],
    ground_truth: GroundTruth,
    pairs: Sequence[CandidatePair],
    attribution: Union[str, Attribution] = Attribution.LEFT,
    known_ids: Optional[Collection[str]] = None,
) -> LinkageReport:
    """
    Build the linkage report of classified candidate pairs.

    With Attribution.LEFT a pair counts for party A's record group; with
    Attribution.BOTH a cross-group pair counts once for each side's group;
    with Attribution.SAME only pairs whose records share a group count for it.
    Overall counts include every pair exactly once.

    Args:
        predictions: Match decision per pair
        ground_truth: True links between the parties
        pairs: The scored pairs, aligned with predictions
        attribution: Group attribution rule
        known_ids: Entity ids of both datasets; originals outside it are rejected

    Returns:
        LinkageReport
    """
    attribution = Attribution.parse(attribution)
    predictions = np.asarray(predictions, dtype=bool)
    if predictions.shape != (len(pairs),):
        raise DimensionError(f"{predictions.size} predictions for {len(pairs)} pairs")
    known = set(known_ids) if known_ids is not None else None

    groups: Dict[int, GroupMetrics] = {}
    group_cost: Dict[int, int] = {}
    overall = GroupMetrics()
    for pair, predicted in zip(pairs, predictions):
        if known is not None:
            for bf in (pair.left, pair.right):
                if not bf.is_dummy and bf.source_entity_id not in known:
                    raise IntegrityError(f"Pair references unknown entity {bf.source_entity_id!r}")
        actual = is_true_match(pair, ground_truth)
        overall.add(bool(predicted), actual)
        for g in attributed_groups(pair, attribution):
            groups.setdefault(g, GroupMetrics()).add(bool(predicted), actual)
            group_cost[g] = group_cost.get(g, 0) + 1

    groups = dict(sorted(groups.items()))
    loss = equalized_odds_loss(
        {g: m.fpr for g, m in groups.items()},
        {g: m.fnr for g, m in groups.items()},
    )
    return LinkageReport(
        groups=groups,
        overall=overall,
        fairness_loss=loss,
        cost=len(pairs),
        group_cost=dict(sorted(group_cost.items())),
        attribution=attribution,
    )


def same_group_cost(pairs: Iterable[CandidatePair]) -> Dict[int, int]:
    """Pairs whose two records both belong to group g, per g"""
    counts: Dict[int, int] = {}
    for pair in pairs:
        if pair.group_left == pair.group_right:
            counts[pair.group_left] = counts.get(pair.group_left, 0) + 1
    return dict(sorted(counts.items()))
