"""Bilinear resampling of masked maps onto a new grid."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from depth_zoo.depthio.maps import DisparityMap


def source_coordinates(out_size: int, in_size: int) -> NDArray[np.float64]:
    """Half-pixel-centre mapping of output indices into input coordinates, clamped.

    >>> source_coordinates(4, 2).tolist()
    [0.0, 0.25, 0.75, 1.0]
    """
    dst = np.arange(out_size, dtype=np.float64)
    src = (dst + 0.5) * in_size / out_size - 0.5
    return np.clip(src, 0.0, in_size - 1)


def nearest_indices(out_size: int, in_size: int) -> NDArray[np.intp]:
    """Input index whose pixel contains each output pixel centre.

    >>> nearest_indices(4, 2).tolist()
    [0, 0, 1, 1]
    """
    dst = np.arange(out_size, dtype=np.float64)
    return np.clip(np.floor((dst + 0.5) * in_size / out_size), 0, in_size - 1).astype(np.intp)


def _axis(out_size: int, in_size: int) -> tuple[NDArray, NDArray, NDArray]:
    src = source_coordinates(out_size, in_size)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, in_size - 1)
    return lo, hi, src - lo


def resample(depth_map: DisparityMap, target_w: int, target_h: int) -> DisparityMap:
    """Resize *depth_map* to ``target_w x target_h``.

    Values are bilinear over valid corners only, with weights renormalized; the mask
    is taken from the nearest source pixel, and a pixel whose bilinear support holds
    no valid corner is masked out.
    """
    if target_w <= 0 or target_h <= 0:
        raise ValueError(f"target size must be positive, got {target_w}x{target_h}")
    if (target_h, target_w) == depth_map.values.shape:
        return depth_map

    y0, y1, fy = _axis(target_h, depth_map.height)
    x0, x1, fx = _axis(target_w, depth_map.width)
    valid = depth_map.mask.astype(np.float64)
    values = np.where(depth_map.mask, depth_map.values, 0.0)

    weighted = np.zeros((target_h, target_w))
    support = np.zeros((target_h, target_w))
    for ys, wy in ((y0, 1.0 - fy), (y1, fy)):
        for xs, wx in ((x0, 1.0 - fx), (x1, fx)):
            weight = np.outer(wy, wx) * valid[np.ix_(ys, xs)]
            weighted += weight * values[np.ix_(ys, xs)]
            support += weight

    rows = nearest_indices(target_h, depth_map.height)
    cols = nearest_indices(target_w, depth_map.width)
    nearest_mask = depth_map.mask[np.ix_(rows, cols)]
    mask = nearest_mask & (support > 0)
    out = np.full((target_h, target_w), np.nan)
    out[mask] = weighted[mask] / support[mask]
    return DisparityMap.from_array(out, mask)
