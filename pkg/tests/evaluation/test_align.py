from __future__ import annotations

import math

import allure
import numpy as np
import pytest

from depth_zoo.depthio.maps import DepthMap, DisparityMap
from depth_zoo.evaluation.align import (
    IDENTITY,
    AlignmentParams,
    apply_alignment,
    depth_to_disparity,
    disparity_to_depth,
    fallback_alignment,
    residual,
    solve_alignment,
)
from depth_zoo.exceptions import DegenerateSystemError, EmptyOverlapError

pytestmark = [
    allure.epic("Evaluation"),
    allure.feature("Alignment"),
]


def _coordinate_descent(p: np.ndarray, g: np.ndarray, rounds: int = 2000) -> tuple[float, float]:
    """Exact 1-D minimisations along s and t, alternated until converged."""
    s = t = 0.0
    n = len(p)
    for _ in range(rounds):
        s = sum(pi * (gi - t) for pi, gi in zip(p, g)) / sum(pi * pi for pi in p)
        t = sum(gi - s * pi for pi, gi in zip(p, g)) / n
    return s, t


def test_recovers_exact_affine_transform(rng) -> None:
    pred = DisparityMap.from_array(rng.uniform(0.1, 2.0, size=(8, 8)))
    gt = pred.with_values(0.25 * pred.values - 0.1)
    params = solve_alignment(pred, gt)
    assert params.scale == pytest.approx(0.25, rel=1e-12)
    assert params.shift == pytest.approx(-0.1, abs=1e-12)


def test_matches_coordinate_descent_oracle(rng) -> None:
    values = rng.uniform(0.0, 1.0, size=(6, 5))
    mask = rng.random((6, 5)) > 0.2
    pred = DisparityMap.from_array(values, mask)
    gt = DisparityMap.from_array(rng.uniform(0.0, 1.0, size=(6, 5)), rng.random((6, 5)) > 0.2)
    joint = pred.mask & gt.mask
    s, t = _coordinate_descent(list(pred.values[joint]), list(gt.values[joint]))
    params = solve_alignment(pred, gt)
    assert params.scale == pytest.approx(s, rel=1e-6, abs=1e-9)
    assert params.shift == pytest.approx(t, rel=1e-6, abs=1e-9)
    assert residual(pred, gt, params) <= residual(pred, gt, AlignmentParams(s, t)) + 1e-12


def test_perturbing_the_solution_never_lowers_residual(rng) -> None:
    pred = DisparityMap.from_array(rng.uniform(size=(5, 5)))
    gt = DisparityMap.from_array(rng.uniform(size=(5, 5)))
    best = solve_alignment(pred, gt)
    base = residual(pred, gt, best)
    for ds, dt in ((1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)):
        nudged = AlignmentParams(best.scale + ds, best.shift + dt)
        assert residual(pred, gt, nudged) >= base


def test_constant_prediction_is_degenerate() -> None:
    pred = DisparityMap.from_array(np.full((3, 3), 0.4))
    gt = DisparityMap.from_array(np.arange(9.0).reshape(3, 3))
    with pytest.raises(DegenerateSystemError, match="constant"):
        solve_alignment(pred, gt)
    assert fallback_alignment(pred, gt) == AlignmentParams(0.0, 4.0)


def test_single_joint_pixel_is_degenerate() -> None:
    pred = DisparityMap.from_array([[1.0, float("nan")]])
    gt = DisparityMap.from_array([[2.0, 3.0]])
    with pytest.raises(DegenerateSystemError, match=">= 2"):
        solve_alignment(pred, gt)


def test_fallback_needs_overlap() -> None:
    pred = DisparityMap.from_array([[1.0, float("nan")]])
    gt = DisparityMap.from_array([[float("nan"), 3.0]])
    with pytest.raises(EmptyOverlapError):
        fallback_alignment(pred, gt)


def test_negative_scale_is_clamped_only_on_request() -> None:
    pred = DisparityMap.from_array([[1.0, 2.0, 3.0]])
    gt = DisparityMap.from_array([[3.0, 2.0, 1.0]])
    assert solve_alignment(pred, gt).scale == pytest.approx(-1.0)
    assert solve_alignment(pred, gt, clamp_scale=True) == AlignmentParams(0.0, 2.0)


def test_apply_keeps_mask() -> None:
    pred = DisparityMap.from_array([[1.0, float("nan")]])
    aligned = apply_alignment(pred, AlignmentParams(2.0, 1.0))
    assert aligned.mask.tolist() == [[True, False]]
    assert aligned.values[0, 0] == 3.0


def test_depth_conversion_caps_and_guards_zero() -> None:
    disparity = DisparityMap.from_array([[0.5, 0.0, -1.0, 0.01]])
    depth = disparity_to_depth(disparity, cap=80.0, eps=1e-8)
    assert depth.values.tolist() == [[2.0, 80.0, 80.0, 80.0]]


def test_depth_to_disparity_is_reciprocal() -> None:
    depth = DepthMap.from_array([[2.0, float("nan"), 4.0]])
    disparity = depth_to_disparity(depth)
    assert disparity.mask.tolist() == [[True, False, True]]
    assert disparity.values[0, 2] == 0.25


def _normal_equations(p: list[float], g: list[float]) -> tuple[float, float]:
    """Cramer's rule on the 2x2 system, with exactly rounded sums."""
    n = len(p)
    spp = math.fsum(x * x for x in p)
    sp = math.fsum(p)
    spg = math.fsum(x * y for x, y in zip(p, g, strict=True))
    sg = math.fsum(g)
    det = spp * n - sp * sp
    return (spg * n - sp * sg) / det, (spp * sg - sp * spg) / det


def _random_pairs(rng, count: int):
    for _ in range(count):
        pred = DisparityMap.from_array(rng.uniform(0.0, 1.0, (8, 8)), rng.random((8, 8)) > 0.2)
        gt = DisparityMap.from_array(rng.uniform(0.0, 1.0, (8, 8)), rng.random((8, 8)) > 0.2)
        yield pred, gt


def test_matches_normal_equations_on_random_pairs(rng) -> None:
    for pred, gt in _random_pairs(rng, 200):
        joint = pred.mask & gt.mask
        s, t = _normal_equations(list(pred.values[joint]), list(gt.values[joint]))
        params = solve_alignment(pred, gt)
        assert params.scale == pytest.approx(s, rel=1e-9, abs=1e-9)
        assert params.shift == pytest.approx(t, rel=1e-9, abs=1e-9)


def test_alignment_is_affine_equivariant(rng) -> None:
    for pred, gt in _random_pairs(rng, 200):
        a = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 5.0))
        b = float(rng.uniform(-3.0, 3.0))
        moved = pred.with_values(a * pred.values + b)
        aligned = apply_alignment(pred, solve_alignment(pred, gt))
        aligned_moved = apply_alignment(moved, solve_alignment(moved, gt))
        joint = pred.mask & gt.mask
        np.testing.assert_allclose(aligned_moved.values[joint], aligned.values[joint], atol=1e-9)


def test_solution_beats_identity_and_constant(rng) -> None:
    for pred, gt in _random_pairs(rng, 200):
        joint = pred.mask & gt.mask
        best = residual(pred, gt, solve_alignment(pred, gt))
        constant = AlignmentParams(0.0, float(np.mean(gt.values[joint])))
        assert best <= residual(pred, gt, IDENTITY) + 1e-12
        assert best <= residual(pred, gt, constant) + 1e-12


def test_clamp_replaces_negative_scale_with_mean(rng) -> None:
    for _ in range(50):
        values = rng.uniform(0.0, 1.0, (8, 8))
        pred = DisparityMap.from_array(values)
        gt = DisparityMap.from_array(2.0 - 3.0 * values + rng.normal(0.0, 0.01, (8, 8)))
        assert solve_alignment(pred, gt).scale < 0
        params = solve_alignment(pred, gt, clamp_scale=True)
        assert params.scale == 0.0
        assert params.shift == pytest.approx(float(np.mean(gt.values)), rel=1e-12)
