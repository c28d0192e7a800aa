"""Encoding Module for Bloom filter encoding, Dice similarity and bin labels"""

from .bloom_filter import (
    BinLabel,
    BloomFilter,
    EncodingConfig,
    bin_label,
    default_label_positions,
    dice,
    dice_matrix,
    encode_dataset,
    encode_record,
    fill_rate,
    qgram_positions,
    qgrams,
    stack_bits,
)
from .serialization import read_encoded, sidecar_path, write_encoded

__all__ = [
    'EncodingConfig', 'BloomFilter', 'BinLabel', 'qgrams', 'qgram_positions',
    'encode_record', 'encode_dataset', 'dice', 'dice_matrix', 'stack_bits',
    'bin_label', 'fill_rate', 'default_label_positions',
    'write_encoded', 'read_encoded', 'sidecar_path',
]
