"""
Shared pytest configuration and fixtures
"""

import sys
from pathlib import Path

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

import pytest  # noqa: E402
from fair_pprl.blocking import block_dataset  # noqa: E402
from fair_pprl.encoding import EncodingConfig, encode_dataset  # noqa: E402
from fair_pprl.records import CorruptionConfig, generate_synthetic  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical checks")


@pytest.fixture(scope="session")
def encoding_config():
    """Sparse filters with 16 bins, so bins hold both matches and non-matches"""
    return EncodingConfig(k=5, n_b=4)


@pytest.fixture(scope="session")
def synthetic_pair():
    """300 records per party, group 2 corrupted more often than group 1"""
    return generate_synthetic(
        300, 0.5, [0.6, 0.4], seed=3,
        corruption=CorruptionConfig(corruption_rate=0.1, group_rates={2: 0.6}),
    )


@pytest.fixture(scope="session")
def binned_pair(synthetic_pair, encoding_config):
    """Unperturbed bins of both parties"""
    dataset_a, dataset_b, _ = synthetic_pair
    return (
        block_dataset(encode_dataset(dataset_a, encoding_config), encoding_config),
        block_dataset(encode_dataset(dataset_b, encoding_config), encoding_config),
    )
