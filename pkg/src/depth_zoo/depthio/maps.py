"""Dense single-channel maps with validity masks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Self

import numpy as np
from numpy.typing import ArrayLike, NDArray


def _frozen(array: NDArray) -> NDArray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, slots=True)
class _Map:
    values: NDArray[np.float64]
    mask: NDArray[np.bool_]

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ValueError(f"map values must be 2-D, got shape {self.values.shape}")
        if self.values.shape != self.mask.shape:
            raise ValueError(
                f"values {self.values.shape} and mask {self.mask.shape} differ in shape",
            )
        if not np.all(np.isfinite(self.values[self.mask])):
            raise ValueError("masked-in values must be finite")

    @classmethod
    def from_array(cls, values: ArrayLike, mask: ArrayLike | None = None) -> Self:
        """Build a map from *values*; pixels with non-finite values are masked out.

        >>> DisparityMap.from_array([[1.0, float("nan")]]).mask.tolist()
        [[True, False]]
        """
        grid = np.array(values, dtype=np.float64, copy=True)
        valid = np.isfinite(grid)
        if mask is not None:
            valid &= np.asarray(mask, dtype=bool)
        return cls(values=_frozen(grid), mask=_frozen(valid))

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    def with_values(self, values: NDArray[np.float64]) -> Self:
        """Same mask, new values."""
        return type(self).from_array(values, self.mask)


@dataclass(frozen=True, slots=True)
class DisparityMap(_Map):
    """Inverse relative depth, defined up to scale and shift; larger is closer."""


@dataclass(frozen=True, slots=True)
class DepthMap(_Map):
    """Depth, strictly positive on valid pixels."""

    def __post_init__(self) -> None:
        _Map.__post_init__(self)
        if np.any(self.values[self.mask] <= 0):
            raise ValueError("masked-in depth values must be > 0")

    @classmethod
    def from_array(cls, values: ArrayLike, mask: ArrayLike | None = None) -> Self:
        """Like `_Map.from_array` but also masks out non-positive depths."""
        grid = np.array(values, dtype=np.float64, copy=True)
        valid = np.isfinite(grid)
        if mask is not None:
            valid &= np.asarray(mask, dtype=bool)
        valid[valid] = grid[valid] > 0
        return cls(values=_frozen(grid), mask=_frozen(valid))


def joint_mask(a: _Map, b: _Map) -> NDArray[np.bool_]:
    """Pixels valid in both maps; shapes must agree."""
    if a.values.shape != b.values.shape:
        raise ValueError(f"map shapes differ: {a.values.shape} vs {b.values.shape}")
    return a.mask & b.mask
