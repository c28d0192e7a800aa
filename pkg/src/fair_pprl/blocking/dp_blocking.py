"""
Feature-Level Differentially Private Blocking

Encoded records are binned by their label bits. Each party then perturbs its
bins independently: for every (bin, group) a Laplace draw decides how many
dummy records to add, capped at the group's size in that bin, and each dummy
is a bit-flipped copy of a randomly chosen original of the same group.
Originals are never removed and dummies stay in their progenitor's bin.

Use Cases:
- Hide per-group bin sizes from the linkage unit
- Run the four experiment scenarios (two baselines, Method A, Method B)
- Export perturbed bins with a private provenance sidecar
"""

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..encoding.bloom_filter import BinLabel, BloomFilter, EncodingConfig, bin_label
from ..encoding.serialization import (
    common_length,
    format_header,
    read_sidecar,
    read_versioned_csv,
    sidecar_path,
)
from ..exceptions import ConfigurationError, DimensionError, DomainError, SchemaError
from ..privacy.mechanisms import (
    GroupNoiseParams,
    PrivacyBudget,
    capped_dummy_count,
    compose_budget,
    expected_clamped_dummies,
    expected_dummies,
    substream,
)
from ..utils.helpers import atomic_write_text
from ..utils.log import get_logger

logger = get_logger(__name__)

COMPOSITION_TOLERANCE = 1e-9


class Scenario(Enum):
    """Experiment scenarios"""
    BASELINE1 = "Baseline1"
    BASELINE2 = "Baseline2"
    METHOD_A = "MethodA"
    METHOD_B = "MethodB"

    @classmethod
    def parse(cls, value: Union[str, "Scenario"]) -> "Scenario":
        """Accept Baseline1, baseline-1, method_b, METHOD A, ..."""
        if isinstance(value, cls):
            return value
        key = re.sub(r"[^a-z0-9]", "", str(value).lower())
        for scenario in cls:
            if scenario.value.lower() == key:
                return scenario
        raise ConfigurationError(
            f"Unknown scenario {value!r}; choose from {[s.value for s in cls]}"
        )

    @property
    def is_noisy(self) -> bool:
        return self is not Scenario.BASELINE1


def _all_equal(values: Sequence[float]) -> bool:
    return all(math.isclose(v, values[0], rel_tol=1e-12, abs_tol=0.0) for v in values)


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Per-group noise parameters of one scenario.

    Args:
        scenario: Which scenario
        per_group_eps: eps_g per group (unused by Baseline1)
        per_group_flip: flip_g per group (unused by Baseline1)
        overall_eps: Composed budget; derived from per_group_eps when None
        threshold: Classification threshold T
        seed: Master seed of the perturbation
    """
    scenario: Scenario
    per_group_eps: Tuple[float, ...] = ()
    per_group_flip: Tuple[float, ...] = ()
    overall_eps: Optional[float] = None
    threshold: float = 0.8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario))
        object.__setattr__(self, "per_group_eps", tuple(float(e) for e in self.per_group_eps))
        object.__setattr__(self, "per_group_flip", tuple(float(f) for f in self.per_group_flip))
        if not 0.0 < self.threshold < 1.0:
            raise DomainError(f"Threshold must be in (0, 1), got {self.threshold}")

        if not self.scenario.is_noisy:
            if self.overall_eps is None:
                object.__setattr__(self, "overall_eps", math.inf)
            return

        eps, flips = self.per_group_eps, self.per_group_flip
        if not eps or len(eps) != len(flips):
            raise ConfigurationError(
                f"{self.scenario.value} needs one eps and one flip per group, got {len(eps)} and {len(flips)}"
            )
        if any(not 0.0 <= f <= 1.0 for f in flips):
            raise DomainError(f"Flip probabilities must be in [0, 1], got {list(flips)}")
        composed = compose_budget(eps)
        if self.overall_eps is None:
            object.__setattr__(self, "overall_eps", composed)
        elif not math.isclose(composed, self.overall_eps, rel_tol=COMPOSITION_TOLERANCE, abs_tol=COMPOSITION_TOLERANCE):
            raise ConfigurationError(
                f"Per-group budgets compose to {composed}, not overall_eps={self.overall_eps}"
            )

        if self.scenario in (Scenario.BASELINE2, Scenario.METHOD_A) and not _all_equal(eps):
            raise ConfigurationError(f"{self.scenario.value} requires equal per-group budgets")
        if self.scenario in (Scenario.BASELINE2, Scenario.METHOD_B) and not _all_equal(flips):
            raise ConfigurationError(f"{self.scenario.value} requires equal flip probabilities")

    @classmethod
    def baseline1(cls, threshold: float = 0.8, seed: int = 0) -> "ScenarioConfig":
        return cls(Scenario.BASELINE1, threshold=threshold, seed=seed)

    @classmethod
    def uniform(
        cls,
        scenario: Union[str, Scenario],
        overall_eps: float,
        n_groups: int,
        flip: float,
        threshold: float = 0.8,
        seed: int = 0,
    ) -> "ScenarioConfig":
        """Uniform allocation eps_g = G * eps_overall with one flip for all groups"""
        budget = PrivacyBudget.uniform(overall_eps, n_groups)
        return cls(
            Scenario.parse(scenario), budget.per_group_eps, (float(flip),) * n_groups,
            overall_eps=budget.overall_eps, threshold=threshold, seed=seed,
        )

    @property
    def n_groups(self) -> int:
        return len(self.per_group_eps)

    def budget(self, sensitivity: float = 1.0) -> PrivacyBudget:
        if not self.scenario.is_noisy:
            raise ConfigurationError("Baseline1 has no privacy budget")
        return PrivacyBudget(self.per_group_eps, sensitivity)

    def group_params(self, sensitivity: float = 1.0) -> List[GroupNoiseParams]:
        return [
            GroupNoiseParams(group=g, eps=e, flip=f, sensitivity=sensitivity)
            for g, (e, f) in enumerate(zip(self.per_group_eps, self.per_group_flip), start=1)
        ]

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return ScenarioConfig(
            self.scenario, self.per_group_eps, self.per_group_flip,
            overall_eps=self.overall_eps, threshold=self.threshold, seed=seed,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data fragment suitable for YAML export"""
        return {
            "scenario": self.scenario.value,
            "per_group_eps": list(self.per_group_eps),
            "per_group_flip": list(self.per_group_flip),
            "overall_eps": None if math.isinf(self.overall_eps) else self.overall_eps,
            "threshold": self.threshold,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        known = {"scenario", "per_group_eps", "per_group_flip", "overall_eps", "threshold", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown scenario keys: {sorted(unknown)}")
        if "scenario" not in data:
            raise ConfigurationError("Scenario fragment needs a 'scenario' key")
        return cls(
            scenario=Scenario.parse(data["scenario"]),
            per_group_eps=tuple(data.get("per_group_eps") or ()),
            per_group_flip=tuple(data.get("per_group_flip") or ()),
            overall_eps=data.get("overall_eps"),
            threshold=float(data.get("threshold", 0.8)),
            seed=int(data.get("seed", 0)),
        )


@dataclass
class Bin:
    """Records sharing one label, kept per group"""
    label: BinLabel
    members: Dict[int, List[BloomFilter]] = field(default_factory=dict)

    def add(self, bf: BloomFilter) -> None:
        self.members.setdefault(bf.group, []).append(bf)

    def copy(self) -> "Bin":
        return Bin(self.label, {g: list(members) for g, members in self.members.items()})

    def groups(self) -> List[int]:
        return sorted(self.members)

    def originals(self, group: int) -> List[BloomFilter]:
        return [bf for bf in self.members.get(group, []) if not bf.is_dummy]

    def group_size(self, group: int, originals_only: bool = False) -> int:
        if originals_only:
            return len(self.originals(group))
        return len(self.members.get(group, []))

    def all_members(self) -> List[BloomFilter]:
        """Members in group order, insertion order within a group"""
        return [bf for g in self.groups() for bf in self.members[g]]

    def __len__(self) -> int:
        return sum(len(members) for members in self.members.values())


@dataclass
class BinnedDataset:
    """One party's bins keyed by label"""
    bins: Dict[BinLabel, Bin] = field(default_factory=dict)

    def __len__(self) -> int:
        return sum(len(b) for b in self.bins.values())

    def labels(self) -> List[BinLabel]:
        return sorted(self.bins)

    def group_counts(self) -> Dict[BinLabel, Dict[int, int]]:
        """N_{b,g} per bin, dummies included"""
        return {label: {g: b.group_size(g) for g in b.groups()} for label, b in self.bins.items()}

    def original_group_counts(self) -> Dict[BinLabel, Dict[int, int]]:
        return {
            label: {g: b.group_size(g, originals_only=True) for g in b.groups()}
            for label, b in self.bins.items()
        }

    def group_totals(self, originals_only: bool = True) -> Dict[int, int]:
        """N_{.,g}: per-group totals over all bins"""
        totals: Dict[int, int] = {}
        for b in self.bins.values():
            for g in b.groups():
                totals[g] = totals.get(g, 0) + b.group_size(g, originals_only)
        return dict(sorted(totals.items()))

    def filters(self) -> List[BloomFilter]:
        return [bf for label in self.labels() for bf in self.bins[label].all_members()]

    def n_dummies(self) -> int:
        return sum(1 for bf in self.filters() if bf.is_dummy)

    def copy(self) -> "BinnedDataset":
        return BinnedDataset({label: b.copy() for label, b in self.bins.items()})


def block_dataset(encoded: Iterable[BloomFilter], cfg: EncodingConfig) -> BinnedDataset:
    """
    Place each filter into the bin named by its label bits.

    Args:
        encoded: Filters of length cfg.n_l
        cfg: Encoding parameters (label positions)

    Returns:
        BinnedDataset in first-seen label order
    """
    binned = BinnedDataset()
    for bf in encoded:
        if bf.n_l != cfg.n_l:
            raise DimensionError(f"Filter length {bf.n_l} does not match n_l={cfg.n_l}")
        label = bin_label(bf, cfg)
        if label not in binned.bins:
            binned.bins[label] = Bin(label)
        binned.bins[label].add(bf)
    return binned


def make_dummy(progenitor: BloomFilter, flip: float, rng: np.random.Generator) -> BloomFilter:
    """
    Bit-flipped copy of a record: each bit inverts with probability flip.

    The dummy keeps the progenitor's group and carries no entity id.
    """
    if not 0.0 <= flip <= 1.0:
        raise DomainError(f"Flip probability must be in [0, 1], got {flip}")
    mask = rng.random(progenitor.n_l) < flip
    return BloomFilter(bits=progenitor.bits ^ mask, group=progenitor.group, is_dummy=True)


def apply_feature_level_dp(
    binned: BinnedDataset,
    scenario: ScenarioConfig,
    budget: Optional[PrivacyBudget] = None,
    seed: Optional[int] = None,
) -> BinnedDataset:
    """
    Inject dummy records into every (bin, group).

    For each bin b and group g holding N_{b,g} originals, draw
    n = capped_dummy_count(eps_g, cap=N_{b,g}), pick n progenitors without
    replacement from the group's originals and add make_dummy(., flip_g)
    copies. Each (bin, group) uses its own substream of seed, so bins can
    be processed in any order.

    Args:
        binned: Unperturbed bins
        scenario: Flip probabilities (and budgets when budget is None)
        budget: Per-group budgets and sensitivity
        seed: Master seed (default scenario.seed)

    Returns:
        New BinnedDataset; the input is left untouched. Baseline1 returns
        the input unchanged.
    """
    if not scenario.scenario.is_noisy:
        return binned
    if budget is None:
        budget = scenario.budget()
    elif budget.n_groups != scenario.n_groups or not np.allclose(
        budget.per_group_eps, scenario.per_group_eps, rtol=1e-12, atol=0.0
    ):
        raise ConfigurationError("Privacy budget does not match the scenario's per-group budgets")
    seed = scenario.seed if seed is None else seed

    perturbed = binned.copy()
    injected = 0
    for label, bin_ in perturbed.bins.items():
        for g in bin_.groups():
            if not 1 <= g <= budget.n_groups:
                raise DomainError(f"Bin {label} holds group {g}, budget covers G={budget.n_groups}")
            originals = bin_.originals(g)
            if not originals:
                continue
            rng = substream(seed, "dp-blocking", label.value, g)
            n = capped_dummy_count(budget.eps_for(g), budget.sensitivity, len(originals), rng)
            if n == 0:
                continue
            flip = scenario.per_group_flip[g - 1]
            for idx in rng.choice(len(originals), size=n, replace=False):
                bin_.add(make_dummy(originals[int(idx)], flip, rng))
            injected += n

    logger.debug(
        "[Blocking] %s injected %d dummies into %d bins", scenario.scenario.value, injected, len(perturbed.bins)
    )
    return perturbed


def dummy_report(
    perturbed: BinnedDataset,
    scenario: ScenarioConfig,
    budget: Optional[PrivacyBudget] = None,
) -> pd.DataFrame:
    """
    Injected dummies per group next to their expectations.

    expected_unclamped is the sigma/2-per-bin figure used by the cost model;
    expected_clamped accounts for rounding and the bin-size cap, so the gap
    between the two shows what the cap removes.
    """
    rows = []
    original = perturbed.original_group_counts()
    groups = sorted({g for counts in original.values() for g in counts})
    for g in groups:
        bins_with_group = [label for label, counts in original.items() if counts.get(g, 0) > 0]
        injected = sum(
            perturbed.bins[label].group_size(g) - original[label][g] for label in bins_with_group
        )
        if scenario.scenario.is_noisy:
            b = budget or scenario.budget()
            eps, delta_b = b.eps_for(g), b.sensitivity
            unclamped = len(bins_with_group) * expected_dummies(eps, delta_b)
            clamped = math.fsum(
                expected_clamped_dummies(eps, delta_b, cap=original[label][g]) for label in bins_with_group
            )
        else:
            eps, unclamped, clamped = math.inf, 0.0, 0.0
        rows.append({
            "group": g,
            "eps": eps,
            "bins": len(bins_with_group),
            "originals": sum(original[label][g] for label in bins_with_group),
            "dummies": injected,
            "expected_unclamped": unclamped,
            "expected_clamped": clamped,
        })
    return pd.DataFrame(rows, columns=[
        "group", "eps", "bins", "originals", "dummies", "expected_unclamped", "expected_clamped",
    ])


def write_binned(binned: BinnedDataset, path: Union[str, Path], seed: int = 0, n_l: int = None) -> Path:
    """
    Release bins to the linkage unit.

    The released file (header ``# fair-pprl binned v1 n_l=<n_l>``) has columns
    bin_label,bits_hex,group with members shuffled inside each bin, so row
    order does not reveal which rows are dummies. The private sidecar holds
    row,is_dummy,source_entity_id.
    """
    released, private = [], []
    for label in binned.labels():
        members = binned.bins[label].all_members()
        order = substream(seed, "release-shuffle", label.value).permutation(len(members))
        for idx in order:
            bf = members[int(idx)]
            released.append({"bin_label": label.value, "bits_hex": bf.to_hex(), "group": bf.group})
            private.append({
                "row": len(private),
                "is_dummy": int(bf.is_dummy),
                "source_entity_id": bf.source_entity_id or "",
            })

    length = common_length(binned.filters(), n_l)
    released_frame = pd.DataFrame(released, columns=["bin_label", "bits_hex", "group"])
    private_frame = pd.DataFrame(private, columns=["row", "is_dummy", "source_entity_id"])
    atomic_write_text(sidecar_path(path), private_frame.to_csv(index=False, lineterminator="\n"))
    return atomic_write_text(
        path, format_header("binned", length) + released_frame.to_csv(index=False, lineterminator="\n")
    )


def read_binned(path: Union[str, Path]) -> BinnedDataset:
    """Read a released binned file together with its private sidecar"""
    n_l, frame = read_versioned_csv(path, "binned")
    missing = [c for c in ("bin_label", "bits_hex", "group") if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")
    private = read_sidecar(path, len(frame), ("row", "is_dummy", "source_entity_id"))

    binned = BinnedDataset()
    for row, is_dummy, entity_id in zip(
        frame.itertuples(index=False), private["is_dummy"], private["source_entity_id"]
    ):
        label = BinLabel(row.bin_label)
        dummy = is_dummy == "1"
        bf = BloomFilter.from_hex(
            row.bits_hex, n_l, int(row.group), is_dummy=dummy, source_entity_id=None if dummy else entity_id
        )
        if label not in binned.bins:
            binned.bins[label] = Bin(label)
        binned.bins[label].add(bf)
    return binned
