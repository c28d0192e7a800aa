"""
Encoded-dataset file format (version 1).

A file starts with one header line, ``# fair-pprl encoded v1 n_l=<n_l>``,
followed by CSV with columns ``bits_hex,group,is_dummy``. Bits are packed
most-significant-first and zero padded to whole bytes. Entity identifiers
never enter this file; they go to a private sidecar ``<stem>.private.csv``
with columns ``row,source_entity_id`` that stays with the data owner.
"""

import io
import re
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import pandas as pd

from ..exceptions import DatasetNotFoundError, DimensionError, IntegrityError, SchemaError
from ..utils.helpers import atomic_write_text
from .bloom_filter import BloomFilter

FORMAT_VERSION = 1
_HEADER = re.compile(r"^# fair-pprl (?P<kind>[a-z]+) v(?P<version>\d+) n_l=(?P<n_l>\d+)\s*$")


def sidecar_path(path: Union[str, Path]) -> Path:
    """Location of the private sidecar belonging to a released file"""
    path = Path(path)
    return path.with_name(f"{path.stem}.private.csv")


def format_header(kind: str, n_l: int) -> str:
    return f"# fair-pprl {kind} v{FORMAT_VERSION} n_l={n_l}\n"


def common_length(filters: Sequence[BloomFilter], n_l: int = None) -> int:
    lengths = {bf.n_l for bf in filters}
    if n_l is not None:
        lengths.add(n_l)
    if len(lengths) != 1:
        raise DimensionError(f"Cannot serialize filters of mixed or unknown length {sorted(lengths)}")
    return lengths.pop()


def read_versioned_csv(path: Union[str, Path], kind: str) -> Tuple[int, pd.DataFrame]:
    """Parse the header line and return (n_l, body frame)"""
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFoundError(f"File not found: {path}")
    header, _, body = path.read_text(encoding="utf-8").partition("\n")
    match = _HEADER.match(header)
    if not match or match.group("kind") != kind:
        raise SchemaError(f"{path} is not a fair-pprl {kind} file (header {header!r})")
    if int(match.group("version")) != FORMAT_VERSION:
        raise SchemaError(f"{path} uses format v{match.group('version')}, expected v{FORMAT_VERSION}")
    try:
        frame = pd.read_csv(io.StringIO(body), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path} has no column header") from None
    return int(match.group("n_l")), frame


def read_sidecar(path: Union[str, Path], n_rows: int, columns: Sequence[str]) -> pd.DataFrame:
    private = sidecar_path(path)
    if not private.is_file():
        raise DatasetNotFoundError(f"Private sidecar not found: {private}")
    frame = pd.read_csv(private, dtype=str, keep_default_na=False)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{private} is missing column(s): {', '.join(missing)}")
    if len(frame) != n_rows:
        raise IntegrityError(f"{private} has {len(frame)} rows, released file has {n_rows}")
    return frame


def write_encoded(filters: Sequence[BloomFilter], path: Union[str, Path], n_l: int = None) -> Path:
    """
    Write filters in format v1 plus the private sidecar.

    Args:
        filters: Filters of one common length
        path: Destination of the released file
        n_l: Filter length, required only when filters is empty

    Returns:
        Path of the released file
    """
    length = common_length(filters, n_l)
    frame = pd.DataFrame({
        "bits_hex": [bf.to_hex() for bf in filters],
        "group": [bf.group for bf in filters],
        "is_dummy": [int(bf.is_dummy) for bf in filters],
    }, columns=["bits_hex", "group", "is_dummy"])
    private = pd.DataFrame({
        "row": list(range(len(filters))),
        "source_entity_id": [bf.source_entity_id or "" for bf in filters],
    }, columns=["row", "source_entity_id"])

    atomic_write_text(sidecar_path(path), private.to_csv(index=False, lineterminator="\n"))
    return atomic_write_text(path, format_header("encoded", length) + frame.to_csv(index=False, lineterminator="\n"))


def read_encoded(path: Union[str, Path]) -> List[BloomFilter]:
    """Read a format-v1 encoded file back, joining the private sidecar"""
    n_l, frame = read_versioned_csv(path, "encoded")
    missing = [c for c in ("bits_hex", "group", "is_dummy") if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")
    private = read_sidecar(path, len(frame), ("row", "source_entity_id"))

    filters = []
    for row, entity_id in zip(frame.itertuples(index=False), private["source_entity_id"]):
        is_dummy = row.is_dummy == "1"
        filters.append(BloomFilter.from_hex(
            row.bits_hex, n_l, int(row.group), is_dummy=is_dummy,
            source_entity_id=None if is_dummy else entity_id,
        ))
    return filters
