"""Registry data model: backbone descriptors and published evaluation records."""

from __future__ import annotations

from typing import Literal

import msgspec

Family = Literal["PlainTokens", "HierarchicalTokens", "HierarchicalSpatial"]
HookAddressing = Literal["Absolute", "RelativePerLevel"]
StemKind = Literal["PatchEmbed", "ConvStem"]
DataMix = Literal["3+10", "5+12", "5K+12K", "5+12+12K", "5A+12A"]
ResolutionMode = Literal["unconstrained", "square"]

# Column order of every six-value error row.
DATASETS = ("DIW", "ETH3D", "Sintel", "KITTI", "NYU", "TUM")
DATASET_METRICS = {
    "DIW": "WHDR",
    "ETH3D": "REL",
    "Sintel": "REL",
    "KITTI": "BadPixDelta1",
    "NYU": "BadPixDelta1",
    "TUM": "BadPixDelta1",
}
# Datasets that mixes other than 3+10 train on.
EXTENDED_MIX_DATASETS = frozenset({"KITTI", "NYU"})

# Cell markers: "--" unsupported resolution, "-" not evaluated.
UNSUPPORTED = "--"
NOT_EVALUATED = "-"


class _Record(msgspec.Struct, frozen=True, forbid_unknown_fields=True, omit_defaults=True):
    pass


class StemSpec(_Record):
    """Patch embedding or convolutional stem in front of the first stage."""

    kind: StemKind
    output_scale: int
    patch_size: int = 0
    num_stride2_blocks: int = 0
    channel_progression: tuple[int, ...] = ()


class HeadSpec(_Record):
    """Channel path after the hierarchical part of the decoder.

    ``deconv_channels`` are stride-2 transposed blocks inserted before the head; the
    head itself is a conv to ``channels[0]``, one 2x upsampling, then the rest.
    """

    channels: tuple[int, ...] = (128, 32, 1)
    deconv_channels: tuple[int, ...] = ()


class BackboneDescriptor(_Record):
    """Declarative description of how one encoder is wired into the depth decoder."""

    name: str
    family: Family
    training_resolution: tuple[int, int]
    stem: StemSpec
    num_stages: int
    hook_positions: tuple[int, ...]
    hook_addressing: HookAddressing
    stage_channels: tuple[int, ...]
    adapter_channels: tuple[int, ...]
    num_blocks: int = 0
    hook_ranges: tuple[tuple[int, int], ...] = ()
    hooks_reversed: bool = False
    square_only: bool = False
    class_token: bool = False
    position_index_cache: bool = False
    resolution_multiple: int = 32
    released: bool = True
    tags: tuple[str, ...] = ()
    base: str = ""
    head: HeadSpec = msgspec.field(default_factory=HeadSpec)

    @property
    def embed_dim(self) -> int:
        return self.stage_channels[0]


class ErrorRow(_Record):
    """Six per-dataset errors for one resolution mode, in `DATASETS` order.

    ``markers`` holds ``""`` for present cells and ``"--"`` / ``"-"`` otherwise;
    ``printed_improvement`` is the I column exactly as published.
    """

    values: tuple[float | None, ...]
    zero_shot: tuple[bool, ...]
    markers: tuple[str, ...]
    printed_improvement: str = ""

    @property
    def complete(self) -> bool:
        return all(v is not None for v in self.values)


class ModelEvalRecord(_Record):
    """One row of a published comparison table."""

    model_name: str
    descriptor: str
    data_mix: DataMix
    params_millions: float
    fps: float | None
    unconstrained: ErrorRow
    square: ErrorRow
    table: int = 1
    section: str = "main"
    note: str = ""

    @property
    def errors_unconstrained(self) -> tuple[float | None, ...]:
        return self.unconstrained.values

    @property
    def errors_square(self) -> tuple[float | None, ...]:
        return self.square.values

    def row(self, mode: ResolutionMode) -> ErrorRow:
        return self.square if mode == "square" else self.unconstrained

    @property
    def key(self) -> str:
        """Unique row key: model name and data mix."""
        return f"{self.model_name} [{self.data_mix}]"


class FirstStageRecord(_Record):
    """Validation after the first training stage (square resolution)."""

    model_name: str
    descriptor: str
    hrwsi_rmse: float
    blendedmvs_rel: float
    redweb_rmse: float
    section: str = "reference"
    run: str = ""


class Catalog(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    """On-disk catalog layout: ``[[backbone]]`` tables."""

    schema_version: int = 1
    backbone: list[BackboneDescriptor] = []
