"""Linkage Module for candidate pairs, classifiers and per-group evaluation"""

from .classifiers import (
    CandidatePair,
    LogisticModel,
    LogisticTrainingConfig,
    candidate_pairs,
    classify_logistic,
    classify_threshold,
    count_candidate_pairs,
    is_true_match,
    sample_training_pairs,
    train_logistic,
)
from .evaluation import (
    Attribution,
    GroupMetrics,
    attributed_groups,
    LinkageReport,
    equalized_odds_loss,
    evaluate,
    same_group_cost,
)

__all__ = [
    'CandidatePair', 'candidate_pairs', 'count_candidate_pairs', 'classify_threshold',
    'is_true_match', 'LogisticModel', 'LogisticTrainingConfig', 'train_logistic',
    'classify_logistic', 'sample_training_pairs', 'Attribution', 'GroupMetrics', 'attributed_groups',
    'LinkageReport', 'equalized_odds_loss', 'evaluate', 'same_group_cost',
]
