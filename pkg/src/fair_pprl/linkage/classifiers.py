"""
Candidate Pairs and Match Classifiers

The linkage unit compares every record of a bin in party A with every record
of the same-labelled bin in party B, scores each pair by Dice similarity and
classifies it with either a fixed threshold or a one-feature logistic model.
Classifiers only ever see dice_score; provenance flags exist for evaluation.

Use Cases:
- Enumerate and count candidate pairs after blocking
- Threshold classification (match iff dice > T)
- Train a logistic classifier on a class-balanced labelled sample
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..blocking.dp_blocking import BinnedDataset
from ..encoding.bloom_filter import BinLabel, BloomFilter, dice_matrix
from ..exceptions import DomainError, IntegrityError, TrainingError
from ..records.dataset import GroundTruth
from ..utils.log import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CandidatePair:
    """One compared pair; involves_dummy is evaluation-only bookkeeping"""
    left: BloomFilter
    right: BloomFilter
    dice_score: float
    involves_dummy: bool
    group_left: int
    group_right: int
    label: Optional[BinLabel] = None

    def __post_init__(self):
        if self.involves_dummy != (self.left.is_dummy or self.right.is_dummy):
            raise IntegrityError("involves_dummy must equal left.is_dummy or right.is_dummy")
        if self.group_left != self.left.group or self.group_right != self.right.group:
            raise IntegrityError("Pair groups must match the groups of its records")

    @classmethod
    def score(cls, left: BloomFilter, right: BloomFilter, dice_score: float, label: Optional[BinLabel] = None) -> "CandidatePair":
        return cls(
            left=left,
            right=right,
            dice_score=float(dice_score),
            involves_dummy=left.is_dummy or right.is_dummy,
            group_left=left.group,
            group_right=right.group,
            label=label,
        )


def candidate_pairs(binned_a: BinnedDataset, binned_b: BinnedDataset) -> Iterator[CandidatePair]:
    """
    Cross product of same-label bins, scored by Dice.

    Labels are visited in sorted order; within a bin, members are visited in
    group order, so the stream is deterministic.
    """
    for label in binned_a.labels():
        if label not in binned_b.bins:
            continue
        left = binned_a.bins[label].all_members()
        right = binned_b.bins[label].all_members()
        scores = dice_matrix(left, right)
        for i, bf_a in enumerate(left):
            for j, bf_b in enumerate(right):
                yield CandidatePair.score(bf_a, bf_b, scores[i, j], label)


def count_candidate_pairs(binned_a: BinnedDataset, binned_b: BinnedDataset) -> int:
    """Sum over shared labels of |bin_A| * |bin_B|, without scoring"""
    return sum(
        len(binned_a.bins[label]) * len(binned_b.bins[label])
        for label in binned_a.bins
        if label in binned_b.bins
    )


def _scores(pairs: Iterable[CandidatePair]) -> np.ndarray:
    return np.fromiter((p.dice_score for p in pairs), dtype=float)


def classify_threshold(pairs: Iterable[CandidatePair], threshold: float) -> np.ndarray:
    """Match iff dice_score > threshold (strict)"""
    if not 0.0 < threshold < 1.0:
        raise DomainError(f"Threshold must be in (0, 1), got {threshold}")
    return _scores(pairs) > threshold


def is_true_match(pair: CandidatePair, ground_truth: GroundTruth) -> bool:
    """A pair matches iff neither side is a dummy and the entity ids are linked"""
    if pair.involves_dummy:
        return False
    return ground_truth.is_match(pair.left.source_entity_id, pair.right.source_entity_id)


@dataclass(frozen=True)
class LogisticTrainingConfig:
    """Gradient-descent settings"""
    learning_rate: float = 0.5
    epochs: int = 10000
    tol: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.tol <= 0:
            raise DomainError(f"Invalid logistic training config: {self}")


@dataclass(frozen=True)
class LogisticModel:
    """
    P(match | dice) = sigmoid(weight * dice + bias)

    Args:
        weight: Coefficient of the Dice score
        bias: Intercept
        config: Settings the model was trained with
        epochs_run: Gradient steps taken
    """
    weight: float
    bias: float
    config: LogisticTrainingConfig = field(default_factory=LogisticTrainingConfig)
    epochs_run: int = 0

    @property
    def weights(self) -> Tuple[float, float]:
        return (self.weight, self.bias)

    @property
    def decision_boundary(self) -> Optional[float]:
        """Dice value where the predicted probability is 0.5"""
        if self.weight == 0:
            return None
        return -self.bias / self.weight

    def predict_proba(self, scores: Sequence[float]) -> np.ndarray:
        return expit(self.weight * np.asarray(scores, dtype=float) + self.bias)


def train_logistic(
    labeled_pairs: Sequence[Tuple[float, bool]],
    config: Optional[LogisticTrainingConfig] = None,
) -> LogisticModel:
    """
    Fit a one-feature logistic model by batch gradient descent on log-loss.

    The Dice feature is standardized for the descent and the coefficients are
    mapped back to raw Dice units. Weights start at zero and the sample order
    is fixed, so training is deterministic.

    Args:
        labeled_pairs: (dice_score, is_match) tuples containing both classes
        config: Learning rate, epoch cap and gradient tolerance

    Returns:
        Trained LogisticModel
    """
    config = config or LogisticTrainingConfig()
    if not labeled_pairs:
        raise TrainingError("Cannot train on an empty sample")
    x = np.array([score for score, _ in labeled_pairs], dtype=float)
    y = np.array([bool(label) for _, label in labeled_pairs], dtype=float)
    if y.min() == y.max():
        raise TrainingError("Training sample contains a single class")

    mean, std = float(x.mean()), float(x.std())
    std = std if std > 0 else 1.0
    z = (x - mean) / std

    w = b = 0.0
    epochs_run = 0
    for epochs_run in range(1, config.epochs + 1):
        residual = expit(w * z + b) - y
        grad_w = float(np.mean(residual * z))
        grad_b = float(np.mean(residual))
        w -= config.learning_rate * grad_w
        b -= config.learning_rate * grad_b
        if max(abs(grad_w), abs(grad_b)) < config.tol:
            break

    weight, bias = w / std, b - w * mean / std
    if not (np.isfinite(weight) and np.isfinite(bias)):
        raise TrainingError("Logistic training diverged")
    logger.debug("[Logistic] Trained in %d epochs, boundary at dice=%s", epochs_run, -bias / weight if weight else None)
    return LogisticModel(weight=weight, bias=bias, config=config, epochs_run=epochs_run)


def classify_logistic(pairs: Iterable[CandidatePair], model: LogisticModel) -> np.ndarray:
    """Match iff predicted probability > 0.5 (strict)"""
    return model.predict_proba(_scores(pairs)) > 0.5


def sample_training_pairs(
    pairs: Sequence[CandidatePair],
    ground_truth: GroundTruth,
    seed: int,
    max_per_class: Optional[int] = None,
) -> List[Tuple[float, bool]]:
    """
    Class-balanced labelled sample for train_logistic.

    Non-matches are downsampled to the number of matches (optionally capped
    at max_per_class per class); indices are drawn without replacement.
    """
    labels = [is_true_match(p, ground_truth) for p in pairs]
    matches = [i for i, lab in enumerate(labels) if lab]
    non_matches = [i for i, lab in enumerate(labels) if not lab]
    if not matches or not non_matches:
        raise TrainingError("Candidate pairs contain a single class; cannot build a training sample")

    n = min(len(matches), len(non_matches))
    if max_per_class is not None:
        n = min(n, int(max_per_class))
    rng = np.random.default_rng(seed)
    picked = sorted(rng.choice(matches, size=n, replace=False).tolist())
    picked += sorted(rng.choice(non_matches, size=n, replace=False).tolist())
    return [(pairs[i].dice_score, labels[i]) for i in picked]
