"""Records Module for person datasets, ground truth and corruption"""

from .corruption import (
    DEFAULT_EDIT_OPS,
    CorruptionConfig,
    EditOp,
    corrupt_dataset,
    corrupt_record,
)
from .dataset import (
    Dataset,
    GroundTruth,
    Record,
    Schema,
    load_dataset,
    load_ground_truth,
    records_from_rows,
    save_dataset,
    save_ground_truth,
)
from .synthetic import generate_synthetic, load_word_pool, synthetic_schema

__all__ = [
    'Record', 'Schema', 'Dataset', 'GroundTruth', 'load_dataset', 'save_dataset',
    'load_ground_truth', 'save_ground_truth', 'records_from_rows',
    'CorruptionConfig', 'EditOp', 'DEFAULT_EDIT_OPS', 'corrupt_record', 'corrupt_dataset',
    'generate_synthetic', 'load_word_pool', 'synthetic_schema',
]
