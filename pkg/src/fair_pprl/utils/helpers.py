"""Helper utility functions"""

import hashlib
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Union


def normalize_value(text: Optional[str]) -> str:
    """
    Normalize an attribute value before tokenisation.

    Args:
        text: Raw attribute value (None is treated as empty)

    Returns:
        Lowercased, whitespace-trimmed string
    """
    if text is None:
        return ""
    return str(text).strip().lower()


def edit_distance(a: str, b: str) -> int:
    """
    Levenshtein distance (unit-cost insert, delete, substitute).

    Args:
        a: First string
        b: Second string

    Returns:
        Minimum number of single-character edits turning a into b
    """
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)

    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def normalized_edit_distance(a: str, b: str) -> float:
    """
    Edit distance scaled by the longer string length.

    Args:
        a: First string
        b: Second string

    Returns:
        Distance in [0.0, 1.0]; 0.0 for two empty strings
    """
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return edit_distance(a, b) / longest


def derive_seed(master_seed: int, *keys: object) -> int:
    """
    Derive an independent 64-bit seed from a master seed and a key path.

    The derivation is a keyed BLAKE2b hash, so seeds for distinct key paths
    are unrelated while staying reproducible across processes and platforms.

    Args:
        master_seed: Root seed
        *keys: Any printable values identifying the substream

    Returns:
        Non-negative integer seed
    """
    key = int(master_seed).to_bytes(16, "little", signed=True)
    path = "\x1f".join(str(k) for k in keys).encode("utf-8")
    digest = hashlib.blake2b(path, digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def round_half_away(value: float) -> int:
    """Round to the nearest integer, halves away from zero"""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def safe_divide(numerator: float, denominator: float, default: float = 0.0) -> float:
    """Divide, returning default when the denominator is zero"""
    if denominator == 0:
        return default
    return numerator / denominator


def parse_float_list(text: Union[str, Iterable[float], None]) -> List[float]:
    """
    Parse "0.1,1,10" (or an iterable of numbers) into a list of floats.

    Args:
        text: Comma-separated string, iterable of numbers, or None

    Returns:
        List of floats (empty for None or an empty string)
    """
    if text is None:
        return []
    if isinstance(text, str):
        return [float(part) for part in text.split(",") if part.strip()]
    return [float(v) for v in text]


def atomic_write_text(path: Union[str, Path], content: str) -> Path:
    """
    Write text so readers never observe a partially written file.

    Args:
        path: Destination file
        content: Full file content

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path

