"""Scale-and-shift alignment in disparity space and disparity/depth conversion."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from depth_zoo.depthio.maps import DepthMap, DisparityMap, joint_mask
from depth_zoo.exceptions import DegenerateSystemError, EmptyOverlapError

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-8


@dataclass(frozen=True, slots=True)
class AlignmentParams:
    """Affine map ``gt ≈ scale * pred + shift``."""

    scale: float
    shift: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.scale) and np.isfinite(self.shift)):
            raise ValueError(f"alignment params must be finite, got {self}")


IDENTITY = AlignmentParams(1.0, 0.0)


def solve_alignment(
    pred: DisparityMap,
    gt: DisparityMap,
    *,
    clamp_scale: bool = False,
) -> AlignmentParams:
    """Least-squares ``(s, t)`` minimising ``sum((s * pred + t - gt) ** 2)`` over joint pixels.

    Solves the 2x2 normal equations in centred form. With *clamp_scale* a negative
    scale is replaced by ``s = 0, t = mean(gt)``.
    """
    mask = joint_mask(pred, gt)
    p = pred.values[mask]
    g = gt.values[mask]
    if p.size < 2:
        raise DegenerateSystemError(f"alignment needs >= 2 jointly valid pixels, got {p.size}")

    p_mean = np.mean(p)
    g_mean = np.mean(g)
    dp = p - p_mean
    var = np.sum(dp * dp)
    if var == 0.0 or np.ptp(p) == 0.0:
        raise DegenerateSystemError("prediction is constant over the jointly valid pixels")

    scale = float(np.sum(dp * (g - g_mean)) / var)
    if clamp_scale and scale < 0:
        logger.debug("Negative scale %.6g clamped to 0", scale)
        return AlignmentParams(0.0, float(g_mean))
    return AlignmentParams(scale, float(g_mean - scale * p_mean))


def fallback_alignment(pred: DisparityMap, gt: DisparityMap) -> AlignmentParams:
    """``s = 0, t = mean(gt)`` over joint pixels, used for degenerate samples."""
    mask = joint_mask(pred, gt)
    if not mask.any():
        raise EmptyOverlapError("prediction and ground truth share no valid pixel")
    return AlignmentParams(0.0, float(np.mean(gt.values[mask])))


def apply_alignment(pred: DisparityMap, params: AlignmentParams) -> DisparityMap:
    """Return ``scale * pred + shift``; the mask is unchanged."""
    if params == IDENTITY:
        return pred
    return pred.with_values(params.scale * pred.values + params.shift)


def residual(pred: DisparityMap, gt: DisparityMap, params: AlignmentParams) -> float:
    """Sum of squared alignment residuals over joint pixels."""
    mask = joint_mask(pred, gt)
    diff = params.scale * pred.values[mask] + params.shift - gt.values[mask]
    return float(np.sum(diff * diff))


def disparity_to_depth(
    disparity: DisparityMap,
    cap: float,
    eps: float = DEFAULT_EPS,
) -> DepthMap:
    """``min(1 / max(d, eps), cap)`` on every valid pixel.

    >>> d = DisparityMap.from_array([[0.5, 0.0]])
    >>> disparity_to_depth(d, cap=10).values.tolist()
    [[2.0, 10.0]]
    """
    if cap <= 0 or eps <= 0:
        raise ValueError(f"cap and eps must be > 0, got cap={cap}, eps={eps}")
    safe = np.where(disparity.mask, np.maximum(disparity.values, eps), 1.0)
    depth = np.minimum(1.0 / safe, cap)
    return DepthMap.from_array(np.where(disparity.mask, depth, np.nan), disparity.mask)


def depth_to_disparity(depth: DepthMap) -> DisparityMap:
    """Reciprocal of a depth map on valid pixels."""
    safe = np.where(depth.mask, depth.values, 1.0)
    return DisparityMap.from_array(np.where(depth.mask, 1.0 / safe, np.nan), depth.mask)
