"""Utility functions for fair_pprl"""

from .helpers import (
    atomic_write_text,
    derive_seed,
    edit_distance,
    normalize_value,
    normalized_edit_distance,
    parse_float_list,
    round_half_away,
    safe_divide,
)
from .log import get_logger, setup_logging

__all__ = [
    'atomic_write_text', 'derive_seed', 'edit_distance', 'normalize_value',
    'normalized_edit_distance', 'parse_float_list', 'round_half_away',
    'safe_divide', 'get_logger', 'setup_logging',
]
