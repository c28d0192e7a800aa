"""
Experiment Configuration

A flat key-value YAML file drives the experiment harness and the CLI. Every
key has a default matching the reference setup (n_l=300, k=30, q=2, n_b=30,
T=0.8, budgets 0.1/1/10, 50% overlap), so an empty file is a valid config.

Use Cases:
- Load and validate experiment settings from YAML
- Override single keys from CLI flags
- Build the encoding, corruption, schema and model objects a run needs
"""

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from .analytics.models import AnalyticsParams
from .blocking.dp_blocking import Scenario
from .encoding.bloom_filter import EncodingConfig
from .exceptions import ConfigurationError, PPRLError
from .linkage.evaluation import Attribution
from .records.corruption import DEFAULT_EDIT_OPS, CorruptionConfig, EditOp
from .records.dataset import Schema
from .records.synthetic import SYNTHETIC_QIDS, default_group_labels

CLASSIFIERS = ("threshold", "logistic")
FILL_MODES = ("assumed", "measured")
FP_MODELS = ("flip_aware", "closed_form")
DUMMY_MODELS = ("clamped", "closed_form")
ALL_SCENARIOS = tuple(s.value for s in Scenario)


@dataclass
class ExperimentConfig:
    """
    All experiment settings in one flat structure.

    Dataset: either dataset_a, dataset_b and ground_truth (CSV paths) or the
    synthetic generator keys (n_records, overlap, group_proportions and the
    corruption keys).

    Example:
        >>> cfg = ExperimentConfig.from_dict({"budgets": [1.0], "repetitions": 2})
        >>> cfg.encoding_config().n_l
        300
    """
    # dataset
    dataset_a: Optional[str] = None
    dataset_b: Optional[str] = None
    ground_truth: Optional[str] = None
    id_column: str = "entity_id"
    qid_columns: List[str] = field(default_factory=lambda: list(SYNTHETIC_QIDS))
    protected_features: List[str] = field(default_factory=lambda: ["group"])
    group_labels: Optional[List[str]] = None
    n_records: int = 1000
    overlap: float = 0.5
    group_proportions: List[float] = field(default_factory=lambda: [0.5, 0.5])
    corruption_rate: float = 0.0
    group_corruption_rates: Dict[int, float] = field(default_factory=dict)
    edit_ops: List[str] = field(default_factory=lambda: sorted(op.value for op in DEFAULT_EDIT_OPS))
    ops_per_record: int = 1

    # encoding
    n_l: int = 300
    k: int = 30
    q: int = 2
    n_b: int = 30
    hash_seed: int = 42

    # scenarios and linkage
    scenarios: List[str] = field(default_factory=lambda: list(ALL_SCENARIOS))
    budgets: List[float] = field(default_factory=lambda: [0.1, 1.0, 10.0])
    classifier: str = "threshold"
    threshold: float = 0.8
    flip: float = 0.5
    attribution: str = "left"
    training_max_per_class: Optional[int] = None
    repetitions: int = 10
    seed: int = 0

    # models and optimizers
    sample_size: int = 1000
    fill_mode: str = "assumed"
    fp_model: str = "flip_aware"
    dummy_model: str = "clamped"
    method_a_grid_step: float = 0.01
    method_b_tol: float = 1e-6

    # oracles
    oracle_trials: int = 10000
    oracle_flip_step: float = 0.02
    oracle_flip_max: float = 0.5
    oracle_repetitions: int = 50

    # output
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        self.scenarios = [Scenario.parse(s).value for s in self.scenarios]
        self.budgets = [float(b) for b in self.budgets]
        self.group_proportions = [float(p) for p in self.group_proportions]
        self.group_corruption_rates = {int(g): float(r) for g, r in (self.group_corruption_rates or {}).items()}
        self.classifier = str(self.classifier).lower()
        self.fill_mode = str(self.fill_mode).lower()
        self.fp_model = str(self.fp_model).lower().replace("-", "_")
        self.dummy_model = str(self.dummy_model).lower().replace("-", "_")
        self.attribution = Attribution.parse(self.attribution).value
        self.validate()

    def validate(self) -> None:
        """Raise ConfigurationError on the first invalid value"""
        paths = [self.dataset_a, self.dataset_b, self.ground_truth]
        if any(paths) and not all(paths):
            raise ConfigurationError("dataset_a, dataset_b and ground_truth must be given together")
        if self.repetitions < 1:
            raise ConfigurationError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.budgets:
            raise ConfigurationError("budgets must not be empty")
        if any(not b > 0 or math.isinf(b) for b in self.budgets):
            raise ConfigurationError(f"budgets must be finite values > 0, got {self.budgets}")
        if not self.scenarios:
            raise ConfigurationError("scenarios must not be empty")
        if self.classifier not in CLASSIFIERS:
            raise ConfigurationError(f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if self.fill_mode not in FILL_MODES:
            raise ConfigurationError(f"fill_mode must be one of {FILL_MODES}, got {self.fill_mode!r}")
        if self.fp_model not in FP_MODELS:
            raise ConfigurationError(f"fp_model must be one of {FP_MODELS}, got {self.fp_model!r}")
        if self.dummy_model not in DUMMY_MODELS:
            raise ConfigurationError(f"dummy_model must be one of {DUMMY_MODELS}, got {self.dummy_model!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError(f"threshold must be in (0, 1), got {self.threshold}")
        if not 0.0 <= self.flip <= 1.0:
            raise ConfigurationError(f"flip must be in [0, 1], got {self.flip}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be >= 0, got {self.seed}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.sample_size < 100:
            raise ConfigurationError(f"sample_size must be >= 100, got {self.sample_size}")
        if not 0.0 < self.method_a_grid_step <= 0.1:
            raise ConfigurationError(f"method_a_grid_step must be in (0, 0.1], got {self.method_a_grid_step}")
        if self.method_b_tol <= 0:
            raise ConfigurationError(f"method_b_tol must be > 0, got {self.method_b_tol}")
        if self.oracle_trials < 1 or self.oracle_repetitions < 1:
            raise ConfigurationError("oracle_trials and oracle_repetitions must be >= 1")
        if not 0.0 < self.oracle_flip_step <= self.oracle_flip_max <= 1.0:
            raise ConfigurationError("oracle flips need 0 < oracle_flip_step <= oracle_flip_max <= 1")
        if self.training_max_per_class is not None and self.training_max_per_class < 1:
            raise ConfigurationError("training_max_per_class must be >= 1")
        if len(self.group_labels or self.group_proportions) != len(self.group_proportions) and not self.uses_files:
            raise ConfigurationError("group_labels and group_proportions must have the same length")
        for op in self.edit_ops:
            EditOp.parse(op)
        # The derived objects validate the remaining keys.
        try:
            self.encoding_config()
            self.corruption_config()
            self.schema()
        except PPRLError as exc:
            raise ConfigurationError(str(exc)) from exc

    @property
    def uses_files(self) -> bool:
        return bool(self.dataset_a)

    @property
    def n_groups(self) -> int:
        if self.group_labels:
            return len(self.group_labels)
        return len(self.group_proportions)

    def resolved_group_labels(self) -> Tuple[str, ...]:
        if self.group_labels:
            return tuple(str(g) for g in self.group_labels)
        return default_group_labels(len(self.group_proportions))

    def encoding_config(self) -> EncodingConfig:
        return EncodingConfig(n_l=self.n_l, k=self.k, q=self.q, n_b=self.n_b, hash_seed=self.hash_seed)

    def corruption_config(self) -> CorruptionConfig:
        return CorruptionConfig(
            corruption_rate=self.corruption_rate,
            group_rates=self.group_corruption_rates,
            edit_ops=frozenset(EditOp.parse(op) for op in self.edit_ops),
            ops_per_record=self.ops_per_record,
        )

    def schema(self) -> Schema:
        return Schema(
            qid_columns=tuple(self.qid_columns),
            protected_features=tuple(self.protected_features),
            group_labels=self.resolved_group_labels(),
            id_column=self.id_column,
        )

    def analytics_params(self, fill: Optional[float] = None) -> AnalyticsParams:
        """Model parameters; fill replaces p = 1/2 when fill_mode is measured"""
        p = 0.5
        if self.fill_mode == "measured":
            if fill is None:
                raise ConfigurationError("fill_mode 'measured' needs a measured fill rate")
            p = fill
        return AnalyticsParams(
            n_l=self.n_l,
            threshold=self.threshold,
            p=p,
            flip_variance=self.fp_model == "flip_aware",
            clamp_dummies=self.dummy_model == "clamped",
        )

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with the non-None overrides applied (CLI flags)"""
        values = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(values) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigurationError(f"Unknown config keys: {sorted(unknown)}")
        return replace(self, **values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "ExperimentConfig":
        data = dict(data or {})
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"Unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"Invalid config value: {exc}") from exc

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """
        Load a flat YAML config.

        Args:
            path: YAML file

        Returns:
            Validated ExperimentConfig
        """
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"Cannot parse {path}: {exc}") from exc
        if data is not None and not isinstance(data, Mapping):
            raise ConfigurationError(f"{path} must hold a mapping of keys to values")
        return cls.from_dict(data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)
