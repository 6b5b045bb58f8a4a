"""Backbone registry: lookup, descriptor invariants and cross-record consistency."""

from __future__ import annotations

import functools
import logging
from collections.abc import Iterable
from pathlib import Path

from depth_zoo.exceptions import DescriptorInvalidError, UnknownDescriptorError
from depth_zoo.zoo.catalog import BUILTIN_SOURCE, CatalogEntry, resolve_catalog
from depth_zoo.zoo.models import (
    DATASETS,
    EXTENDED_MIX_DATASETS,
    BackboneDescriptor,
    DataMix,
    FirstStageRecord,
    ModelEvalRecord,
)
from depth_zoo.zoo.records import builtin_data, load_first_stage_records, read_eval_records

logger = logging.getLogger(__name__)

ABLATION_TAG = "ablation"
ZERO_SHOT_MIX = "3+10"


def descriptor_problems(d: BackboneDescriptor) -> list[str]:  # noqa: C901, PLR0912
    """Every invariant *d* violates; empty when the descriptor is valid."""
    problems: list[str] = []
    n = d.num_stages
    if n not in (3, 4):
        problems.append(f"num_stages must be 3 or 4, got {n}")
    for field in ("hook_positions", "stage_channels", "adapter_channels"):
        if len(getattr(d, field)) != n:
            problems.append(f"{field} has {len(getattr(d, field))} entries, expected {n}")
    if any(c <= 0 for c in (*d.stage_channels, *d.adapter_channels)):
        problems.append("channel counts must be positive")
    if min(d.training_resolution) <= 0:
        problems.append("training_resolution must be positive")
    if d.resolution_multiple <= 0:
        problems.append("resolution_multiple must be positive")

    problems.extend(_stem_problems(d))
    problems.extend(_hook_problems(d))

    if d.family == "PlainTokens":
        if len(set(d.stage_channels)) > 1:
            problems.append("PlainTokens encoders keep one embedding width across blocks")
    elif d.adapter_channels != d.stage_channels:
        problems.append("hierarchical encoders feed stage_channels to the decoder unchanged")
    if d.hooks_reversed and d.family != "PlainTokens":
        problems.append("hooks_reversed is only defined for PlainTokens encoders")

    if not d.head.channels or d.head.channels[-1] != 1:
        problems.append("head channel path must end in 1 channel")
    return problems


def _stem_problems(d: BackboneDescriptor) -> list[str]:
    stem = d.stem
    if stem.kind == "PatchEmbed":
        if stem.patch_size <= 0 or stem.output_scale != stem.patch_size:
            return [f"PatchEmbed output_scale {stem.output_scale} != patch_size {stem.patch_size}"]
        return []
    problems: list[str] = []
    if stem.num_stride2_blocks <= 0 or stem.output_scale != 2**stem.num_stride2_blocks:
        problems.append(
            f"ConvStem output_scale {stem.output_scale} != 2**{stem.num_stride2_blocks}",
        )
    progression = stem.channel_progression
    if progression and len(progression) != stem.num_stride2_blocks + 1:
        problems.append("ConvStem channel_progression needs one entry per block plus input")
    return problems


def _hook_problems(d: BackboneDescriptor) -> list[str]:  # noqa: C901
    hooks = d.hook_positions
    ranges = d.hook_ranges
    problems: list[str] = []
    if any(h < 0 for h in hooks):
        problems.append("hook positions must be >= 0")
    if ranges and len(ranges) != len(hooks):
        problems.append(f"hook_ranges has {len(ranges)} levels, expected {len(hooks)}")

    if d.hook_addressing == "RelativePerLevel":
        if not ranges:
            problems.append("RelativePerLevel hooks need per-level hook_ranges")
    else:
        pairs = list(zip(hooks, hooks[1:], strict=False))
        if d.hooks_reversed:
            if not all(a > b for a, b in pairs):
                problems.append("reversed Absolute hooks must be strictly decreasing")
        elif not all(a < b for a, b in pairs):
            problems.append("Absolute hooks must be strictly increasing")
        if d.num_blocks and any(h >= d.num_blocks for h in hooks):
            problems.append(f"Absolute hooks must be < num_blocks ({d.num_blocks})")

    for level, (hook, (low, high)) in enumerate(zip(hooks, ranges, strict=False)):
        if low > high:
            problems.append(f"hook_ranges[{level}] is empty ({low}-{high})")
        elif not low <= hook <= high:
            problems.append(f"hook {hook} at level {level} outside range {low}-{high}")
    return problems


def validate_descriptor(d: BackboneDescriptor) -> BackboneDescriptor:
    """Return *d* unchanged or raise `DescriptorInvalidError` listing every problem."""
    problems = descriptor_problems(d)
    if problems:
        raise DescriptorInvalidError(f"{d.name}: " + "; ".join(problems))
    return d


def expected_zero_shot(data_mix: DataMix) -> tuple[bool, ...]:
    """Zero-shot flags a record trained on *data_mix* must carry, in dataset order.

    >>> expected_zero_shot("5+12")
    (True, True, True, False, False, True)
    """
    if data_mix == ZERO_SHOT_MIX:
        return (True,) * len(DATASETS)
    return tuple(ds not in EXTENDED_MIX_DATASETS for ds in DATASETS)


class Registry:
    """Immutable name -> descriptor mapping built from a catalog search path."""

    def __init__(self, entries: dict[str, CatalogEntry]) -> None:
        self._entries = dict(entries)

    @classmethod
    def load(cls, search_path: Iterable[Path] = ()) -> Registry:
        return cls(resolve_catalog(search_path))

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return list(self._entries)

    def entries(self) -> list[CatalogEntry]:
        return list(self._entries.values())

    def descriptors(self) -> list[BackboneDescriptor]:
        return [e.descriptor for e in self._entries.values()]

    def lookup(self, name: str) -> BackboneDescriptor:
        try:
            return self._entries[name].descriptor
        except KeyError:
            raise UnknownDescriptorError(f"no backbone named {name!r}") from None

    def source(self, name: str) -> str:
        self.lookup(name)
        return self._entries[name].source

    def check_consistency(
        self,
        records: Iterable[ModelEvalRecord] = (),
        first_stage: Iterable[FirstStageRecord] = (),
    ) -> list[str]:
        """Problems across descriptors and records; empty when consistent."""
        problems = [
            f"{d.name}: {p}" for d in self.descriptors() for p in descriptor_problems(d)
        ]
        for d in self.descriptors():
            if d.base and d.base not in self:
                problems.append(f"{d.name}: base descriptor {d.base!r} is not registered")
        for record in records:
            if record.descriptor not in self:
                problems.append(f"{record.key}: unknown descriptor {record.descriptor!r}")
            problems.extend(_zero_shot_problems(record))
        problems.extend(
            f"{r.model_name}: unknown descriptor {r.descriptor!r}"
            for r in first_stage
            if r.descriptor not in self
        )
        return problems


def _zero_shot_problems(record: ModelEvalRecord) -> list[str]:
    expected = expected_zero_shot(record.data_mix)
    problems: list[str] = []
    for mode in ("unconstrained", "square"):
        row = record.row(mode)
        for dataset, value, flag, want in zip(
            DATASETS, row.values, row.zero_shot, expected, strict=True
        ):
            if value is not None and flag != want:
                state = "zero-shot" if want else "non-zero-shot"
                problems.append(f"{record.key}: {mode} {dataset} should be {state}")
    return problems


@functools.cache
def builtin_registry() -> Registry:
    """Registry over the builtin catalog only."""
    return Registry.load()


def builtin_descriptors() -> list[BackboneDescriptor]:
    """Released, legacy and unreleased backbones shipped with the package."""
    return [
        e.descriptor
        for e in builtin_registry().entries()
        if e.source == BUILTIN_SOURCE and ABLATION_TAG not in e.descriptor.tags
    ]


def ablation_variants() -> list[BackboneDescriptor]:
    """Hook-placement ablation variants shipped with the package."""
    return [d for d in builtin_registry().descriptors() if ABLATION_TAG in d.tags]


@functools.cache
def _builtin_eval_records() -> tuple[ModelEvalRecord, ...]:
    with builtin_data("eval_records.csv").open("r", encoding="utf-8", newline="") as handle:
        return tuple(read_eval_records(handle, "eval_records.csv"))


def builtin_eval_records() -> list[ModelEvalRecord]:
    """Rows of both published second-stage comparison tables, in printed order."""
    return list(_builtin_eval_records())


@functools.cache
def _builtin_first_stage_records() -> tuple[FirstStageRecord, ...]:
    data = builtin_data("first_stage_records.csv")
    with data.open("r", encoding="utf-8", newline="") as handle:
        return tuple(load_first_stage_records(handle, "first_stage_records.csv"))


def builtin_first_stage_records() -> list[FirstStageRecord]:
    """First-stage validation rows, in printed order."""
    return list(_builtin_first_stage_records())


def find_record(
    records: Iterable[ModelEvalRecord],
    model_name: str,
    data_mix: DataMix | None = None,
) -> ModelEvalRecord:
    """First record named *model_name* (and trained on *data_mix*, when given)."""
    for record in records:
        if record.model_name == model_name and data_mix in (None, record.data_mix):
            return record
    mix = f" [{data_mix}]" if data_mix else ""
    raise KeyError(f"no evaluation record for {model_name}{mix}")
