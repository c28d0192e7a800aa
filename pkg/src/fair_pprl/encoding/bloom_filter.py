"""
Bloom Filter Encoding

Record-level Bloom filter (CLK) encoding of person records: every QID value
is lowercased, split into q-grams, and each q-gram sets k bit positions
chosen by keyed double hashing. Also provides Dice similarity and the bin
labels used for blocking.

Use Cases:
- Encode party datasets before they leave the data owner
- Score candidate pairs with the Dice coefficient
- Derive blocking labels from designated filter bits
"""

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ConfigurationError, DimensionError, DomainError, EmptyInputError, IntegrityError
from ..records.dataset import Dataset, Record
from ..utils.helpers import derive_seed, normalize_value
from ..utils.log import get_logger

logger = get_logger(__name__)


def default_label_positions(n_l: int, n_b: int, hash_seed: int) -> Tuple[int, ...]:
    """First n_b indices of a permutation of [0, n_l) keyed by hash_seed"""
    rng = np.random.default_rng(derive_seed(hash_seed, "label-positions"))
    return tuple(int(i) for i in rng.permutation(n_l)[:n_b])


@dataclass(frozen=True)
class EncodingConfig:
    """
    Bloom filter parameters shared by both parties.

    Args:
        n_l: Filter length in bits
        k: Hash functions per q-gram
        q: q-gram length
        n_b: Number of label bits used for blocking
        hash_seed: Secret key of the hash family and label selection
        label_positions: Explicit label bit indices (default derived from hash_seed)
    """
    n_l: int = 300
    k: int = 30
    q: int = 2
    n_b: int = 30
    hash_seed: int = 42
    label_positions: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.n_l <= 0:
            raise ConfigurationError(f"n_l must be positive, got {self.n_l}")
        if not 1 <= self.k <= self.n_l:
            raise ConfigurationError(f"k must be in [1, n_l], got {self.k}")
        if self.q < 1:
            raise ConfigurationError(f"q must be >= 1, got {self.q}")
        if not 0 <= self.n_b <= self.n_l:
            raise ConfigurationError(f"n_b must be in [0, n_l], got {self.n_b}")

        if self.label_positions is None:
            positions = default_label_positions(self.n_l, self.n_b, self.hash_seed)
        else:
            positions = tuple(int(i) for i in self.label_positions)
        if len(positions) != self.n_b:
            raise ConfigurationError(f"Expected {self.n_b} label positions, got {len(positions)}")
        if len(set(positions)) != len(positions):
            raise ConfigurationError("Label positions must be distinct")
        if any(not 0 <= i < self.n_l for i in positions):
            raise ConfigurationError(f"Label positions must lie in [0, {self.n_l})")
        object.__setattr__(self, "label_positions", positions)


@dataclass(frozen=True, eq=False)
class BloomFilter:
    """
    An encoded record.

    bits is a read-only boolean vector. Dummies carry no source_entity_id;
    every original carries the entity_id it was encoded from.
    """
    bits: np.ndarray
    group: int
    is_dummy: bool = False
    source_entity_id: Optional[str] = None

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 1 or bits.size == 0:
            raise DimensionError(f"Bloom filter bits must be a non-empty vector, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "is_dummy", bool(self.is_dummy))
        if int(self.group) < 1:
            raise DomainError(f"group index must be >= 1, got {self.group}")
        object.__setattr__(self, "group", int(self.group))
        if not self.is_dummy and not self.source_entity_id:
            raise IntegrityError("An original Bloom filter needs a source_entity_id")
        if self.is_dummy and self.source_entity_id is not None:
            raise IntegrityError("A dummy Bloom filter cannot carry a source_entity_id")

    @property
    def n_l(self) -> int:
        return int(self.bits.size)

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.bits))

    def to_hex(self) -> str:
        """Pack the bits (most significant first, zero padded) into hex"""
        return np.packbits(self.bits).tobytes().hex()

    @classmethod
    def from_hex(
        cls,
        text: str,
        n_l: int,
        group: int,
        is_dummy: bool = False,
        source_entity_id: Optional[str] = None,
    ) -> "BloomFilter":
        raw = bytes.fromhex(text.strip())
        if len(raw) != (n_l + 7) // 8:
            raise DimensionError(f"Hex string encodes {len(raw) * 8} bits, expected n_l={n_l}")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n_l]
        return cls(bits=bits, group=group, is_dummy=is_dummy, source_entity_id=source_entity_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BloomFilter):
            return NotImplemented
        return (
            self.group == other.group
            and self.is_dummy == other.is_dummy
            and self.source_entity_id == other.source_entity_id
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self) -> int:
        return hash((self.bits.tobytes(), self.group, self.is_dummy, self.source_entity_id))

    def __repr__(self) -> str:
        kind = "dummy" if self.is_dummy else self.source_entity_id
        return f"BloomFilter({kind}, group={self.group}, popcount={self.popcount}/{self.n_l})"


@dataclass(frozen=True, order=True)
class BinLabel:
    """Bit string read from a filter's label positions"""
    value: str

    def __post_init__(self):
        if set(self.value) - {"0", "1"}:
            raise DomainError(f"Bin label must be a bit string, got {self.value!r}")

    def __len__(self) -> int:
        return len(self.value)

    def __str__(self) -> str:
        return self.value


def qgrams(s: Optional[str], q: int) -> List[str]:
    """
    Contiguous q-grams of a normalized string, without padding.

    Example:
        >>> qgrams("Peter", 2)
        ['pe', 'et', 'te', 'er']
    """
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    text = normalize_value(s)
    return [text[i:i + q] for i in range(len(text) - q + 1)]


@lru_cache(maxsize=1 << 16)
def qgram_positions(token: str, n_l: int, k: int, hash_seed: int) -> Tuple[int, ...]:
    """
    Bit positions of one q-gram: h1 + i*h2 mod n_l for i in [0, k).

    h1 and h2 are the two 64-bit halves of a BLAKE2b digest keyed with
    hash_seed.
    """
    key = int(hash_seed).to_bytes(16, "little", signed=True)
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16, key=key).digest()
    h1 = int.from_bytes(digest[:8], "little")
    h2 = int.from_bytes(digest[8:], "little")
    return tuple((h1 + i * h2) % n_l for i in range(k))


def encode_record(record: Record, cfg: EncodingConfig) -> BloomFilter:
    """
    Encode all QID values of a record into a single Bloom filter.

    Args:
        record: Record to encode
        cfg: Encoding parameters

    Returns:
        Original (non-dummy) BloomFilter in the record's group; an all-zero
        filter, with a warning, when the record yields no q-grams
    """
    if not record.attributes:
        raise EmptyInputError(f"Record {record.entity_id!r} has no attributes")

    bits = np.zeros(cfg.n_l, dtype=bool)
    n_tokens = 0
    for value in record.values:
        for token in qgrams(value, cfg.q):
            bits[list(qgram_positions(token, cfg.n_l, cfg.k, cfg.hash_seed))] = True
            n_tokens += 1

    if n_tokens == 0:
        logger.warning("[Encoder] Record %s yields no q-grams; encoded as an all-zero filter", record.entity_id)
    return BloomFilter(bits=bits, group=record.group, is_dummy=False, source_entity_id=record.entity_id)


def encode_dataset(dataset: Union[Dataset, Iterable[Record]], cfg: EncodingConfig) -> List[BloomFilter]:
    """Encode every record, preserving order"""
    filters = [encode_record(record, cfg) for record in dataset]
    logger.debug("[Encoder] Encoded %d records (n_l=%d, k=%d, q=%d)", len(filters), cfg.n_l, cfg.k, cfg.q)
    return filters


def _as_bits(bf: Union[BloomFilter, np.ndarray, Sequence[int]]) -> np.ndarray:
    if isinstance(bf, BloomFilter):
        return bf.bits
    return np.asarray(bf, dtype=bool)


def dice(a: Union[BloomFilter, np.ndarray], b: Union[BloomFilter, np.ndarray]) -> float:
    """
    Dice coefficient 2c / (x1 + x2) of two bit vectors.

    Example:
        >>> dice(np.array([1, 1, 0]), np.array([0, 1, 1]))
        0.5
    """
    bits_a, bits_b = _as_bits(a), _as_bits(b)
    if bits_a.shape != bits_b.shape:
        raise DimensionError(f"Cannot compare filters of length {bits_a.size} and {bits_b.size}")
    total = int(np.count_nonzero(bits_a)) + int(np.count_nonzero(bits_b))
    if total == 0:
        return 0.0
    common = int(np.count_nonzero(bits_a & bits_b))
    return 2 * common / total


def stack_bits(filters: Sequence[BloomFilter]) -> np.ndarray:
    """Stack filters into a (len(filters), n_l) boolean matrix"""
    if not filters:
        return np.zeros((0, 0), dtype=bool)
    lengths = {bf.n_l for bf in filters}
    if len(lengths) != 1:
        raise DimensionError(f"Filters have mixed lengths {sorted(lengths)}")
    return np.vstack([bf.bits for bf in filters])


def dice_matrix(left: Sequence[BloomFilter], right: Sequence[BloomFilter]) -> np.ndarray:
    """
    All-pairs Dice coefficients.

    Args:
        left: m filters
        right: n filters

    Returns:
        (m, n) float array, equal element-wise to dice(left[i], right[j])
    """
    if not left or not right:
        return np.zeros((len(left), len(right)), dtype=float)
    a = stack_bits(left).astype(np.int32)
    b = stack_bits(right).astype(np.int32)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"Cannot compare filters of length {a.shape[1]} and {b.shape[1]}")
    common = a @ b.T
    totals = a.sum(axis=1)[:, None] + b.sum(axis=1)[None, :]
    out = np.zeros(common.shape, dtype=float)
    np.divide(2.0 * common, totals, out=out, where=totals > 0)
    return out


def bin_label(bf: BloomFilter, cfg: EncodingConfig) -> BinLabel:
    """Concatenate the filter's bits at cfg.label_positions"""
    if bf.n_l != cfg.n_l:
        raise DimensionError(f"Filter length {bf.n_l} does not match n_l={cfg.n_l}")
    picked = bf.bits[list(cfg.label_positions)]
    return BinLabel("".join("1" if bit else "0" for bit in picked))


def fill_rate(filters: Sequence[BloomFilter]) -> float:
    """Mean popcount / n_l over a collection of filters"""
    if not filters:
        raise EmptyInputError("Cannot measure the fill rate of zero filters")
    return float(stack_bits(filters).mean())
