"""Fair PPRL Module"""

from .analytics import AnalyticsParams, BaseRates, estimate_base_rates, fp_probability, predicted_fpr
from .blocking import Scenario, ScenarioConfig, apply_feature_level_dp, block_dataset
from .config import ExperimentConfig
from .encoding import BloomFilter, EncodingConfig, dice, encode_dataset
from .exceptions import PPRLError
from .experiments import run_experiment
from .linkage import Attribution, LinkageReport, candidate_pairs, evaluate
from .optimize import OptimizationResult, method_a_search, method_b_allocate
from .records import Dataset, GroundTruth, generate_synthetic

__version__ = "1.1.0"

__all__ = [
    'ExperimentConfig', 'PPRLError', 'Dataset', 'GroundTruth', 'generate_synthetic',
    'EncodingConfig', 'BloomFilter', 'encode_dataset', 'dice',
    'Scenario', 'ScenarioConfig', 'block_dataset', 'apply_feature_level_dp',
    'Attribution', 'LinkageReport', 'candidate_pairs', 'evaluate',
    'AnalyticsParams', 'BaseRates', 'estimate_base_rates', 'fp_probability', 'predicted_fpr',
    'OptimizationResult', 'method_a_search', 'method_b_allocate', 'run_experiment',
]
