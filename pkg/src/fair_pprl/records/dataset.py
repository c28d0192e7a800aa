"""
Person Records, Datasets and Ground Truth

This module holds the raw-data side of a linkage run: person records with
quasi-identifier (QID) attributes, the protected-feature group each record
belongs to, and the ground-truth links between the two parties.

Use Cases:
- Load party datasets from CSV files with a declared schema
- Carry protected-feature groups through encoding and blocking
- Persist synthetic datasets and their ground truth for reuse
"""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple, Union

import pandas as pd

from ..exceptions import (
    ConfigurationError,
    DatasetNotFoundError,
    IntegrityError,
    SchemaError,
)
from ..utils.helpers import atomic_write_text
from ..utils.log import get_logger

logger = get_logger(__name__)

GROUP_SEPARATOR = "|"


@dataclass(frozen=True)
class Record:
    """A person record: entity id, ordered QID attributes and group index"""
    entity_id: str
    attributes: Tuple[Tuple[str, str], ...]
    group: int

    def __post_init__(self):
        if not isinstance(self.entity_id, str) or not self.entity_id:
            raise IntegrityError("entity_id must be a non-empty string")
        if isinstance(self.group, bool) or not isinstance(self.group, int) or self.group < 1:
            raise SchemaError(f"group index must be an integer >= 1, got {self.group!r}")
        object.__setattr__(
            self, "attributes", tuple((str(name), str(value)) for name, value in self.attributes)
        )

    @property
    def values(self) -> Tuple[str, ...]:
        """Attribute values in schema order"""
        return tuple(value for _, value in self.attributes)

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        """Look up one attribute value by name"""
        for key, value in self.attributes:
            if key == name:
                return value
        return default


@dataclass(frozen=True)
class Schema:
    """
    Column layout of a dataset CSV.

    The group label of a row is the value of its protected-feature column.
    With several protected features the label is the values joined by "|",
    so two binary features yield four intersectional groups. Group index g
    is the 1-based position of the label in group_labels.
    """
    qid_columns: Tuple[str, ...]
    protected_features: Tuple[str, ...] = ("group",)
    group_labels: Tuple[str, ...] = ("g1", "g2")
    id_column: str = "entity_id"

    def __post_init__(self):
        object.__setattr__(self, "qid_columns", tuple(self.qid_columns))
        object.__setattr__(self, "protected_features", tuple(self.protected_features))
        object.__setattr__(self, "group_labels", tuple(str(g) for g in self.group_labels))

        if not self.qid_columns:
            raise ConfigurationError("Schema needs at least one QID column")
        if not self.protected_features:
            raise ConfigurationError("Schema needs at least one protected feature")
        if not self.group_labels:
            raise ConfigurationError("Schema needs at least one group label")
        if len(set(self.group_labels)) != len(self.group_labels):
            raise ConfigurationError("Group labels must be unique")
        if len(set(self.columns)) != len(self.columns):
            raise ConfigurationError(f"Schema columns overlap: {self.columns}")

    @property
    def n_groups(self) -> int:
        return len(self.group_labels)

    @property
    def columns(self) -> Tuple[str, ...]:
        """All CSV columns in canonical order"""
        return (self.id_column,) + self.qid_columns + self.protected_features

    def group_index(self, label: str) -> int:
        """Map a group label to its 1-based index"""
        try:
            return self.group_labels.index(label) + 1
        except ValueError:
            raise SchemaError(
                f"Unknown group label {label!r}; expected one of {list(self.group_labels)}"
            ) from None

    def group_label(self, group: int) -> str:
        """Map a 1-based group index back to its label"""
        if not 1 <= group <= self.n_groups:
            raise SchemaError(f"Group index {group} outside [1, {self.n_groups}]")
        return self.group_labels[group - 1]


@dataclass(frozen=True)
class Dataset:
    """One party's records under a schema"""
    records: Tuple[Record, ...]
    schema: Schema

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for record in self.records:
            if record.entity_id in seen:
                raise IntegrityError(f"Duplicate entity_id {record.entity_id!r}")
            seen.add(record.entity_id)
            if record.group > self.schema.n_groups:
                raise SchemaError(
                    f"Record {record.entity_id!r} has group {record.group}, "
                    f"schema defines {self.schema.n_groups}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    @cached_property
    def by_id(self) -> Dict[str, Record]:
        return {record.entity_id: record for record in self.records}

    @property
    def ids(self) -> FrozenSet[str]:
        return frozenset(self.by_id)

    def group_sizes(self) -> Dict[int, int]:
        """Record count per group index, including empty groups"""
        sizes = {g: 0 for g in range(1, self.schema.n_groups + 1)}
        for record in self.records:
            sizes[record.group] += 1
        return sizes

    def to_frame(self) -> pd.DataFrame:
        """Render the dataset with the schema's CSV columns"""
        rows = []
        for record in self.records:
            row = {self.schema.id_column: record.entity_id}
            row.update(dict(record.attributes))
            label = self.schema.group_label(record.group)
            parts = label.split(GROUP_SEPARATOR)
            if len(parts) != len(self.schema.protected_features):
                parts = [label]
            for feature, part in zip(self.schema.protected_features, parts):
                row[feature] = part
            rows.append(row)
        return pd.DataFrame(rows, columns=list(self.schema.columns))


@dataclass(frozen=True)
class GroundTruth:
    """True matches as (entity_id in A, entity_id in B) pairs, one-to-one"""
    matches: FrozenSet[Tuple[str, str]] = field(default_factory=frozenset)

    def __post_init__(self):
        pairs = frozenset((str(a), str(b)) for a, b in self.matches)
        object.__setattr__(self, "matches", pairs)
        left = [a for a, _ in pairs]
        right = [b for _, b in pairs]
        if len(set(left)) != len(left) or len(set(right)) != len(right):
            raise IntegrityError("Ground truth must be one-to-one")

    def __len__(self) -> int:
        return len(self.matches)

    def __contains__(self, pair: object) -> bool:
        return pair in self.matches

    def is_match(self, id_a: Optional[str], id_b: Optional[str]) -> bool:
        if id_a is None or id_b is None:
            return False
        return (id_a, id_b) in self.matches

    def sorted_pairs(self) -> List[Tuple[str, str]]:
        return sorted(self.matches)


def _read_csv(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFoundError(f"Dataset file not found: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path} has no header row") from None


def load_dataset(path: Union[str, Path], schema: Schema) -> Dataset:
    """
    Load a party dataset from CSV.

    Args:
        path: CSV file with a header row naming every schema column
        schema: Column layout and group labels

    Returns:
        Dataset with one Record per data row
    """
    frame = _read_csv(path)
    missing = [c for c in schema.columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")

    dataset = records_from_rows(frame.to_dict("records"), schema)
    logger.debug("[Records] Loaded %d records from %s", len(dataset), path)
    return dataset


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write a dataset as UTF-8 CSV with a header row"""
    content = dataset.to_frame().to_csv(index=False, lineterminator="\n")
    return atomic_write_text(path, content)


def load_ground_truth(path: Union[str, Path]) -> GroundTruth:
    """Read ground truth from a CSV with columns id_a,id_b"""
    frame = _read_csv(path)
    missing = [c for c in ("id_a", "id_b") if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")
    return GroundTruth(frozenset(zip(frame["id_a"], frame["id_b"])))


def save_ground_truth(ground_truth: GroundTruth, path: Union[str, Path]) -> Path:
    """Write ground truth as CSV (id_a,id_b), sorted for reproducibility"""
    frame = pd.DataFrame(ground_truth.sorted_pairs(), columns=["id_a", "id_b"])
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def records_from_rows(rows: Iterable[Dict[str, str]], schema: Schema) -> Dataset:
    """Build a Dataset from already-parsed row dicts"""
    records = []
    for values in rows:
        missing = [c for c in schema.columns if c not in values]
        if missing:
            raise SchemaError(f"Row is missing column(s): {', '.join(missing)}")
        label = GROUP_SEPARATOR.join(str(values[f]) for f in schema.protected_features)
        records.append(Record(
            entity_id=str(values[schema.id_column]),
            attributes=tuple((c, str(values[c])) for c in schema.qid_columns),
            group=schema.group_index(label),
        ))
    return Dataset(records=tuple(records), schema=schema)
