"""
Record Corruption

Typographical and look-up-table corruptions applied to QID attribute values.
A per-group corruption rate is the lever that makes one protected group
noisier than another, which is where linkage unfairness comes from.

Use Cases:
- Produce dirty party-B copies of shared entities
- Manufacture controlled, measurable group bias
- Reproduce the same corruption from the same seed
"""

import string
from dataclasses import dataclass, replace
from enum import Enum
from typing import FrozenSet, Mapping, Tuple, Union

import numpy as np

from ..exceptions import ConfigurationError, EmptyInputError
from ..utils.helpers import derive_seed
from .dataset import Dataset, Record


class EditOp(Enum):
    """Edit operations a corruption may apply"""
    INSERT = "insert"
    DELETE = "delete"
    SUBSTITUTE = "substitute"
    TRANSPOSE = "transpose"
    OCR = "ocr"
    PHONETIC = "phonetic"

    @classmethod
    def parse(cls, value: Union[str, "EditOp"]) -> "EditOp":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationError(
                f"Unknown edit operation {value!r}; choose from {[op.value for op in cls]}"
            ) from None


DEFAULT_EDIT_OPS: FrozenSet[EditOp] = frozenset(
    {EditOp.INSERT, EditOp.DELETE, EditOp.SUBSTITUTE, EditOp.TRANSPOSE}
)

# Characters commonly confused by optical character recognition
OCR_TABLE: Tuple[Tuple[str, str], ...] = (
    ("0", "o"), ("o", "0"), ("1", "l"), ("l", "1"), ("5", "s"), ("s", "5"),
    ("8", "b"), ("b", "8"), ("9", "g"), ("g", "9"), ("rn", "m"), ("m", "rn"),
    ("cl", "d"), ("d", "cl"), ("vv", "w"), ("w", "vv"), ("2", "z"), ("z", "2"),
)

# Spellings that sound alike
PHONETIC_TABLE: Tuple[Tuple[str, str], ...] = (
    ("ph", "f"), ("f", "ph"), ("ck", "k"), ("k", "ck"), ("z", "s"), ("s", "z"),
    ("ie", "y"), ("y", "ie"), ("ee", "ea"), ("ea", "ee"), ("ou", "ow"),
    ("ow", "ou"), ("x", "ks"), ("kn", "n"), ("wr", "r"), ("gh", "g"), ("c", "k"),
)


@dataclass(frozen=True)
class CorruptionConfig:
    """
    How much and how records get corrupted.

    Args:
        corruption_rate: Probability that a record is corrupted at all
        group_rates: Optional per-group override of corruption_rate
        edit_ops: Enabled edit operations
        ops_per_record: Edits applied to a selected record
    """
    corruption_rate: float = 0.0
    group_rates: Tuple[Tuple[int, float], ...] = ()
    edit_ops: FrozenSet[EditOp] = DEFAULT_EDIT_OPS
    ops_per_record: int = 1

    def __post_init__(self):
        rates = self.group_rates
        if isinstance(rates, Mapping):
            rates = rates.items()
        rates = tuple(sorted((int(g), float(r)) for g, r in (rates or ())))
        object.__setattr__(self, "group_rates", rates)
        object.__setattr__(self, "edit_ops", frozenset(EditOp.parse(op) for op in self.edit_ops))

        for rate in [self.corruption_rate] + [r for _, r in rates]:
            if not 0.0 <= rate <= 1.0:
                raise ConfigurationError(f"Corruption rate {rate} outside [0, 1]")
        if int(self.ops_per_record) != self.ops_per_record or self.ops_per_record < 1:
            raise ConfigurationError(f"ops_per_record must be a positive integer, got {self.ops_per_record}")

    def rate_for(self, group: int) -> float:
        """Corruption rate that applies to a group"""
        return dict(self.group_rates).get(group, self.corruption_rate)


def _alphabet_for(value: str) -> str:
    return string.digits if value.isdigit() else string.ascii_lowercase


def _substitute(value: str, rng: np.random.Generator) -> str:
    pos = int(rng.integers(len(value)))
    choices = [c for c in _alphabet_for(value) if c != value[pos]]
    return value[:pos] + choices[int(rng.integers(len(choices)))] + value[pos + 1:]


def _insert(value: str, rng: np.random.Generator) -> str:
    alphabet = _alphabet_for(value)
    pos = int(rng.integers(len(value) + 1))
    return value[:pos] + alphabet[int(rng.integers(len(alphabet)))] + value[pos:]


def _delete(value: str, rng: np.random.Generator) -> str:
    if len(value) < 2:
        return _substitute(value, rng)
    pos = int(rng.integers(len(value)))
    return value[:pos] + value[pos + 1:]


def _transpose(value: str, rng: np.random.Generator) -> str:
    positions = [i for i in range(len(value) - 1) if value[i] != value[i + 1]]
    if not positions:
        return _substitute(value, rng)
    pos = positions[int(rng.integers(len(positions)))]
    return value[:pos] + value[pos + 1] + value[pos] + value[pos + 2:]


def _table_edit(table: Tuple[Tuple[str, str], ...]):
    def edit(value: str, rng: np.random.Generator) -> str:
        hits = [
            (pos, src, dst)
            for src, dst in table
            for pos in range(len(value) - len(src) + 1)
            if value.startswith(src, pos)
        ]
        if not hits:
            return _substitute(value, rng)
        pos, src, dst = hits[int(rng.integers(len(hits)))]
        return value[:pos] + dst + value[pos + len(src):]
    return edit


_EDITORS = {
    EditOp.INSERT: _insert,
    EditOp.DELETE: _delete,
    EditOp.SUBSTITUTE: _substitute,
    EditOp.TRANSPOSE: _transpose,
    EditOp.OCR: _table_edit(OCR_TABLE),
    EditOp.PHONETIC: _table_edit(PHONETIC_TABLE),
}


def apply_edit(value: str, op: EditOp, rng: np.random.Generator) -> str:
    """Apply one edit operation to a non-empty string"""
    if not value:
        raise EmptyInputError("Cannot edit an empty value")
    return _EDITORS[op](value, rng)


def corrupt_record(record: Record, config: CorruptionConfig, seed: int) -> Record:
    """
    Corrupt a record's attribute values.

    The record is selected with probability config.rate_for(record.group);
    a selected record receives ops_per_record edits, each on a randomly
    chosen non-empty attribute with a randomly chosen enabled operation.
    entity_id and group are never touched.

    Args:
        record: Record to corrupt
        config: Corruption settings
        seed: Seed of the record's random stream

    Returns:
        The corrupted record, or the record itself when not selected

    Example:
        >>> cfg = CorruptionConfig(corruption_rate=1.0, edit_ops={EditOp.SUBSTITUTE})
        >>> rec = Record("E1", (("surname", "smith"),), 1)
        >>> len(corrupt_record(rec, cfg, seed=7).get("surname"))
        5
    """
    if not config.edit_ops:
        raise ConfigurationError("At least one edit operation must be enabled")

    values = list(record.values)
    editable = [i for i, v in enumerate(values) if v]
    if not editable:
        raise EmptyInputError(f"Record {record.entity_id!r} has no non-empty attribute")

    rng = np.random.default_rng(seed)
    if rng.random() >= config.rate_for(record.group):
        return record

    ops = sorted(config.edit_ops, key=lambda op: op.value)
    for _ in range(config.ops_per_record):
        idx = editable[int(rng.integers(len(editable)))]
        op = ops[int(rng.integers(len(ops)))]
        values[idx] = apply_edit(values[idx], op, rng)

    names = [name for name, _ in record.attributes]
    return replace(record, attributes=tuple(zip(names, values)))


def corrupt_dataset(dataset: Dataset, config: CorruptionConfig, seed: int) -> Dataset:
    """Corrupt every record with its own seed derived from (seed, entity_id)"""
    records = [
        corrupt_record(record, config, derive_seed(seed, "corrupt", record.entity_id))
        for record in dataset
    ]
    return Dataset(records=tuple(records), schema=dataset.schema)
