"""Symbolic shape propagation from encoder hooks to the depth output.

`propagate` walks one descriptor through stem, hooks, adapters, the 256-channel
decoder stages, the deepest-to-shallowest fusion and the head, and checks that the
result is a one-channel map at the input resolution. No tensors are allocated.
"""

from __future__ import annotations

import logging

import msgspec

from depth_zoo.exceptions import (
    IndivisibleByStemError,
    NotMultipleOf32Error,
    ShapeMismatchError,
    SquareResolutionRequiredError,
)
from depth_zoo.shapecheck.cache import ResolutionCache
from depth_zoo.shapecheck.shapes import (
    AdapterOp,
    DownsampleBy,
    DropClassToken,
    ProjectChannels,
    ResizeToGrid,
    Spatial,
    TensorShape,
    Tokens,
    Transpose,
    Unflatten,
    UpsampleBy,
    ceil_half,
    run_chain,
)
from depth_zoo.zoo.models import BackboneDescriptor

logger = logging.getLogger(__name__)

DECODER_CHANNELS = 256
INPUT_MULTIPLE = 32
# Reassemble scale of the shallowest plain-token stage; deeper stages double it.
PLAIN_BASE_SCALE = 4


class ShapeReport(msgspec.Struct, frozen=True):
    """Verdict of one propagation. Resolutions are ``(width, height)``."""

    descriptor: str
    family: str
    hook_positions: tuple[int, ...]
    input_resolution: tuple[int, int]
    stem_output: TensorShape
    hook_shapes: list[TensorShape]
    adapter_chains: list[list[AdapterOp]]
    decoder_stage_shapes: list[Spatial]
    fusion_ops: list[AdapterOp]
    head_trace: list[Spatial]
    output_resolution: tuple[int, int]
    output_channels: int
    cache_misses: int = 0
    position_index_size: int = 0


def validate_resolution(d: BackboneDescriptor, width: int, height: int) -> None:
    """Raise unless *d* can run at ``width x height``."""
    if width <= 0 or height <= 0:
        raise NotMultipleOf32Error(f"resolution {width}x{height} must be positive")
    if d.square_only and width != height:
        raise SquareResolutionRequiredError(
            f"{d.name} accepts square inference resolutions only, got {width}x{height}",
        )
    if width % INPUT_MULTIPLE or height % INPUT_MULTIPLE:
        raise NotMultipleOf32Error(
            f"resolution {width}x{height} is not a multiple of {INPUT_MULTIPLE}",
        )
    for requirement in (d.stem.output_scale, d.resolution_multiple):
        if width % requirement or height % requirement:
            raise IndivisibleByStemError(
                f"{d.name} needs both sides divisible by {requirement}, got {width}x{height}",
            )


def stage_grids(d: BackboneDescriptor, width: int, height: int) -> list[tuple[int, int]]:
    """``(h, w)`` token or feature grid at every hook.

    Plain-token encoders keep the stem grid throughout; hierarchical encoders
    halve it (rounding up) after every stage.
    """
    grid = (height // d.stem.output_scale, width // d.stem.output_scale)
    if d.family == "PlainTokens":
        return [grid] * d.num_stages
    grids = [grid]
    for _ in range(d.num_stages - 1):
        grids.append((ceil_half(grids[-1][0]), ceil_half(grids[-1][1])))
    return grids


def _stem_output(d: BackboneDescriptor, grid: tuple[int, int]) -> TensorShape:
    gh, gw = grid
    if d.stem.kind == "PatchEmbed" and d.family != "HierarchicalSpatial":
        return Tokens(gh * gw + int(d.class_token), d.stage_channels[0])
    channels = (
        d.stem.channel_progression[-1] if d.stem.channel_progression else d.stage_channels[0]
    )
    return Spatial(gh, gw, channels)


def _hook_shape(d: BackboneDescriptor, level: int, grid: tuple[int, int]) -> TensorShape:
    gh, gw = grid
    if d.family == "PlainTokens":
        return Tokens(gh * gw + int(d.class_token), d.embed_dim)
    if d.family == "HierarchicalTokens":
        return Tokens(gh * gw, d.stage_channels[level])
    return Spatial(gh, gw, d.stage_channels[level])


def _resample_to_scale(source_scale: int, target_scale: int) -> list[AdapterOp]:
    if target_scale < source_scale:
        return [UpsampleBy(source_scale // target_scale)]
    if target_scale > source_scale:
        return [DownsampleBy(target_scale // source_scale)]
    return []


def adapter_chain(d: BackboneDescriptor, level: int, grid: tuple[int, int]) -> list[AdapterOp]:
    """Operators that turn hook *level*'s output into a decoder-ready spatial grid."""
    gh, gw = grid
    if d.family == "PlainTokens":
        ops: list[AdapterOp] = [DropClassToken()] if d.class_token else []
        ops += [
            Transpose(),
            Unflatten(gh, gw),
            ProjectChannels(d.embed_dim, d.adapter_channels[level]),
        ]
        target = PLAIN_BASE_SCALE * 2**level
        return ops + _resample_to_scale(d.stem.output_scale, target)
    if d.family == "HierarchicalTokens":
        return [Transpose(), Unflatten(gh, gw)]
    return []


def _head_ops(d: BackboneDescriptor) -> list[AdapterOp]:
    ops: list[AdapterOp] = []
    channels = DECODER_CHANNELS
    for out in d.head.deconv_channels:
        ops += [UpsampleBy(2), ProjectChannels(channels, out)]
        channels = out
    first, *rest = d.head.channels
    ops += [ProjectChannels(channels, first), UpsampleBy(2)]
    channels = first
    for out in rest:
        ops.append(ProjectChannels(channels, out))
        channels = out
    return ops


def _fuse(stages: list[Spatial]) -> tuple[list[AdapterOp], Spatial]:
    ops: list[AdapterOp] = []
    fused: TensorShape = stages[-1]
    for step, target in enumerate(reversed(stages[:-1])):
        op = ResizeToGrid(target.height, target.width)
        fused = op.apply(fused, "fusion", step)
        if fused != target:
            raise ShapeMismatchError("fusion", step, str(op), f"{fused} cannot fuse with {target}")
        ops.append(op)
    upsample = UpsampleBy(2)
    out = upsample.apply(fused, "fusion", len(ops))
    ops.append(upsample)
    assert isinstance(out, Spatial)
    return ops, out


def propagate(
    d: BackboneDescriptor,
    width: int,
    height: int,
    cache: ResolutionCache | None = None,
) -> ShapeReport:
    """Propagate shapes for *d* at ``width x height``."""
    validate_resolution(d, width, height)
    grids = stage_grids(d, width, height)

    hook_shapes: list[TensorShape] = []
    chains: list[list[AdapterOp]] = []
    decoder_stages: list[Spatial] = []
    for level, grid in enumerate(grids):
        hook = _hook_shape(d, level, grid)
        chain = adapter_chain(d, level, grid)
        adapted = run_chain(hook, chain, f"adapter[{level}]")
        projected = run_chain(
            adapted,
            [ProjectChannels(d.adapter_channels[level], DECODER_CHANNELS)],
            f"decoder[{level}]",
        )
        assert isinstance(projected, Spatial)
        hook_shapes.append(hook)
        chains.append(chain)
        decoder_stages.append(projected)

    fusion_ops, fused = _fuse(decoder_stages)

    trace: list[Spatial] = [fused]
    shape: TensorShape = fused
    for step, op in enumerate(_head_ops(d)):
        shape = op.apply(shape, "head", step)
        assert isinstance(shape, Spatial)
        trace.append(shape)
    if (shape.width, shape.height) != (width, height) or shape.channels != 1:
        raise ShapeMismatchError(
            "head",
            len(trace) - 1,
            "Output",
            f"expected Spatial({height}x{width}x1), got {shape}",
        )

    misses = 0
    index_size = 0
    if d.position_index_cache:
        cache = cache if cache is not None else ResolutionCache()
        index_size, missed = cache.lookup(width, height, *grids[0])
        misses = int(missed)

    return ShapeReport(
        descriptor=d.name,
        family=d.family,
        hook_positions=d.hook_positions,
        input_resolution=(width, height),
        stem_output=_stem_output(d, grids[0]),
        hook_shapes=hook_shapes,
        adapter_chains=chains,
        decoder_stage_shapes=decoder_stages,
        fusion_ops=fusion_ops,
        head_trace=trace,
        output_resolution=(shape.width, shape.height),
        output_channels=shape.channels,
        cache_misses=misses,
        position_index_size=index_size,
    )
