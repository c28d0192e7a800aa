"""Optimize Module for fairness-driven choice of flip probabilities and budgets"""

from .search import (
    OptimizationResult,
    flip_grid,
    golden_section_search,
    method_a_search,
    method_b_allocate,
)

__all__ = [
    'OptimizationResult', 'flip_grid', 'golden_section_search', 'method_a_search', 'method_b_allocate',
]
