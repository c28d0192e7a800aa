"""Blocking Module for label binning and feature-level DP dummy injection"""

from .dp_blocking import (
    Bin,
    BinnedDataset,
    Scenario,
    ScenarioConfig,
    apply_feature_level_dp,
    block_dataset,
    dummy_report,
    make_dummy,
    read_binned,
    write_binned,
)

__all__ = [
    'Bin', 'BinnedDataset', 'Scenario', 'ScenarioConfig', 'block_dataset',
    'make_dummy', 'apply_feature_level_dp', 'dummy_report', 'write_binned', 'read_binned',
]
