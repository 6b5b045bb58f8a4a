"""Per-sample error measures: REL, bad-pixel delta1, disparity RMSE and WHDR.

All sums are float64 ``numpy.sum`` reductions (pairwise summation) over pixels or
pairs in row-major order, so results do not depend on evaluation order elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from depth_zoo.depthio.maps import DepthMap, DisparityMap, joint_mask
from depth_zoo.evaluation.ordinal import OrdinalPairSet, Relation
from depth_zoo.exceptions import (
    EmptyOverlapError,
    OutOfBoundsError,
    ThresholdRequiredError,
)

DELTA1_THRESHOLD = 1.25


@dataclass(frozen=True, slots=True)
class MetricResult:
    """One error value and the number of pixels or pairs it was computed over."""

    value: float
    count: int


def _joint(
    pred: DepthMap | DisparityMap,
    gt: DepthMap | DisparityMap,
) -> tuple[np.ndarray, np.ndarray, int]:
    mask = joint_mask(pred, gt)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise EmptyOverlapError("prediction and ground truth share no valid pixel")
    return pred.values[mask], gt.values[mask], count


def rel(pred: DepthMap, gt: DepthMap) -> MetricResult:
    """Mean absolute relative error ``mean(|d - d*| / d*)``."""
    p, g, count = _joint(pred, gt)
    return MetricResult(float(np.sum(np.abs(p - g) / g) / count), count)


def bad_pix_delta1(
    pred: DepthMap,
    gt: DepthMap,
    threshold: float = DELTA1_THRESHOLD,
) -> MetricResult:
    """Percentage of pixels with ``max(d / d*, d* / d) > threshold`` (strict).

    Compared as ``max(d, d*) > threshold * min(d, d*)``, so a prediction of exactly
    ``threshold * d*`` is not counted.

    >>> bad_pix_delta1(DepthMap.from_array([[3.75]]), DepthMap.from_array([[3.0]])).value
    0.0
    """
    p, g, count = _joint(pred, gt)
    bad = int(np.count_nonzero(np.maximum(p, g) > threshold * np.minimum(p, g)))
    return MetricResult(100.0 * bad / count, count)


def rmse_disparity(pred: DisparityMap, gt: DisparityMap) -> MetricResult:
    """Root mean square disparity error."""
    p, g, count = _joint(pred, gt)
    diff = p - g
    return MetricResult(float(np.sqrt(np.sum(diff * diff) / count)), count)


def whdr(
    pred: DisparityMap,
    pairs: OrdinalPairSet,
    tau: float | None = None,
) -> MetricResult:
    """Weighted percentage of pairs whose predicted ordering contradicts the annotation.

    A pair is predicted A-closer when ``pred(A) - pred(B) > tau``, B-closer when it is
    below ``-tau`` and equal otherwise. *tau* may be omitted only when no pair is
    annotated Equal; it then defaults to 0.
    """
    if tau is None:
        if pairs.has_equal:
            raise ThresholdRequiredError(
                "pair set contains Equal annotations; an explicit WHDR tau is required",
            )
        tau = 0.0
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")

    da = _sample(pred, pairs.a_xy, "A")
    db = _sample(pred, pairs.b_xy, "B")
    diff = da - db
    predicted = np.where(
        diff > tau,
        int(Relation.A_CLOSER),
        np.where(diff < -tau, int(Relation.B_CLOSER), int(Relation.EQUAL)),
    )
    wrong = predicted != pairs.relations
    total = np.sum(pairs.weights)
    disagree = np.sum(np.where(wrong, pairs.weights, 0.0))
    return MetricResult(float(100.0 * disagree / total), len(pairs))


def _sample(pred: DisparityMap, xy: np.ndarray, endpoint: str) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    inside = (x >= 0) & (x < pred.width) & (y >= 0) & (y < pred.height)
    if not inside.all():
        first = int(np.argmin(inside))
        raise OutOfBoundsError(
            f"pair {first} endpoint {endpoint} ({x[first]}, {y[first]}) lies outside "
            f"the {pred.width}x{pred.height} prediction",
        )
    valid = pred.mask[y, x]
    if not valid.all():
        first = int(np.argmin(valid))
        raise OutOfBoundsError(
            f"pair {first} endpoint {endpoint} ({x[first]}, {y[first]}) is a masked pixel",
        )
    return pred.values[y, x]
