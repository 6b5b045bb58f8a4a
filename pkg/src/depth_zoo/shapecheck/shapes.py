"""Symbolic tensor shapes and the adapter operators that transform them.

Batch dimensions are omitted. ``Tokens`` is a rank-2 ``(count, embed)`` tensor, or
``(embed, count)`` once transposed; ``Spatial`` is a rank-3 ``(channels, h, w)`` grid.
"""

from __future__ import annotations

import math

import msgspec

from depth_zoo.exceptions import ShapeMismatchError


class _Shape(msgspec.Struct, frozen=True, tag_field="kind", omit_defaults=True):
    pass


class Tokens(_Shape, tag="Tokens"):
    count: int
    embed_dim: int
    channels_first: bool = False

    def __str__(self) -> str:
        first, second = (self.count, self.embed_dim)
        if self.channels_first:
            first, second = second, first
        return f"Tokens({first}x{second})"


class Spatial(_Shape, tag="Spatial"):
    height: int
    width: int
    channels: int

    @property
    def grid(self) -> tuple[int, int]:
        return self.height, self.width

    def __str__(self) -> str:
        return f"Spatial({self.height}x{self.width}x{self.channels})"


TensorShape = Tokens | Spatial


def ceil_half(n: int) -> int:
    """Output length of a stride-2 stage with padding.

    >>> [ceil_half(n) for n in (14, 7, 4, 1)]
    [7, 4, 2, 1]
    """
    return math.ceil(n / 2)


class _Op(msgspec.Struct, frozen=True, tag_field="op"):
    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        raise NotImplementedError

    def _fail(self, stage: str, step: int, message: str) -> ShapeMismatchError:
        return ShapeMismatchError(stage, step, str(self), message)


def _spatial(op: _Op, shape: TensorShape, stage: str, step: int) -> Spatial:
    if not isinstance(shape, Spatial):
        raise op._fail(stage, step, f"expects a spatial grid, got {shape}")
    return shape


class DropClassToken(_Op, tag="DropClassToken"):
    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        if not isinstance(shape, Tokens) or shape.channels_first:
            raise self._fail(stage, step, f"expects (count, embed) tokens, got {shape}")
        if shape.count < 2:
            raise self._fail(stage, step, "no patch tokens left after the class token")
        return Tokens(shape.count - 1, shape.embed_dim)

    def __str__(self) -> str:
        return "DropClassToken"


class Transpose(_Op, tag="Transpose"):
    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        if not isinstance(shape, Tokens):
            raise self._fail(stage, step, f"expects tokens, got {shape}")
        return Tokens(shape.count, shape.embed_dim, channels_first=not shape.channels_first)

    def __str__(self) -> str:
        return "Transpose"


class Unflatten(_Op, tag="Unflatten"):
    height: int
    width: int

    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        if not isinstance(shape, Tokens) or not shape.channels_first:
            raise self._fail(stage, step, f"expects transposed tokens, got {shape}")
        if shape.count != self.height * self.width:
            raise self._fail(
                stage,
                step,
                f"{shape.count} tokens cannot fill a {self.height}x{self.width} grid",
            )
        return Spatial(self.height, self.width, shape.embed_dim)

    def __str__(self) -> str:
        return f"Unflatten({self.height}x{self.width})"


class ProjectChannels(_Op, tag="ProjectChannels"):
    in_channels: int
    out_channels: int

    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        grid = _spatial(self, shape, stage, step)
        if grid.channels != self.in_channels:
            raise self._fail(
                stage, step, f"expects {self.in_channels} channels, got {grid.channels}"
            )
        return Spatial(grid.height, grid.width, self.out_channels)

    def __str__(self) -> str:
        return f"ProjectChannels({self.in_channels}->{self.out_channels})"


class UpsampleBy(_Op, tag="UpsampleBy"):
    factor: int

    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        grid = _spatial(self, shape, stage, step)
        return Spatial(grid.height * self.factor, grid.width * self.factor, grid.channels)

    def __str__(self) -> str:
        return f"UpsampleBy({self.factor})"


class DownsampleBy(_Op, tag="DownsampleBy"):
    factor: int

    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        grid = _spatial(self, shape, stage, step)
        return Spatial(
            math.ceil(grid.height / self.factor),
            math.ceil(grid.width / self.factor),
            grid.channels,
        )

    def __str__(self) -> str:
        return f"DownsampleBy({self.factor})"


class ResizeToGrid(_Op, tag="ResizeToGrid"):
    height: int
    width: int

    def apply(self, shape: TensorShape, stage: str, step: int) -> TensorShape:
        grid = _spatial(self, shape, stage, step)
        return Spatial(self.height, self.width, grid.channels)

    def __str__(self) -> str:
        return f"ResizeToGrid({self.height}x{self.width})"


AdapterOp = (
    DropClassToken | Transpose | Unflatten | ProjectChannels | UpsampleBy | DownsampleBy
    | ResizeToGrid
)


def run_chain(
    shape: TensorShape,
    ops: list[AdapterOp],
    stage: str,
) -> TensorShape:
    """Apply *ops* in order; the first non-composable step raises `ShapeMismatchError`."""
    for step, op in enumerate(ops):
        shape = op.apply(shape, stage, step)
    return shape
