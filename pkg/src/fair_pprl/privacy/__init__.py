"""Privacy Module for Laplace noise and feature-level budget composition"""

from .mechanisms import (
    GroupNoiseParams,
    LaplaceScale,
    PrivacyBudget,
    capped_dummy_count,
    compose_budget,
    dummy_count_draw,
    expected_clamped_dummies,
    expected_dummies,
    laplace_sample,
    substream,
)

__all__ = [
    'PrivacyBudget', 'LaplaceScale', 'GroupNoiseParams', 'laplace_sample',
    'expected_dummies', 'expected_clamped_dummies', 'compose_budget',
    'dummy_count_draw', 'capped_dummy_count', 'substream',
]
