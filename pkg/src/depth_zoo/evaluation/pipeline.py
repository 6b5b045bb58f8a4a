"""Per-sample scoring and per-dataset aggregation.

Each sample is resampled to its ground-truth grid, aligned in disparity space and
scored with the dataset's metric. WHDR samples are scored on the raw prediction.
Samples run on a thread pool; results are reduced in manifest order, so dataset
scores do not depend on the number of workers.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import msgspec
import numpy as np

from depth_zoo.config import DegeneratePolicy
from depth_zoo.depthio.manifest import Sample, SampleManifest
from depth_zoo.depthio.maps import DepthMap, DisparityMap
from depth_zoo.depthio.raster import RasterKind, load_raster
from depth_zoo.depthio.resample import resample
from depth_zoo.depthio.resolution import ResolutionPolicy, compute_inference_resolution
from depth_zoo.evaluation.align import (
    DEFAULT_EPS,
    AlignmentParams,
    apply_alignment,
    depth_to_disparity,
    disparity_to_depth,
    fallback_alignment,
    solve_alignment,
)
from depth_zoo.evaluation.metrics import (
    MetricResult,
    bad_pix_delta1,
    rel,
    rmse_disparity,
    whdr,
)
from depth_zoo.evaluation.ordinal import load_ordinal_pairs
from depth_zoo.exceptions import ConfigError, DegenerateSystemError, DepthZooError

logger = logging.getLogger(__name__)

DEFAULT_DEPTH_CAPS: dict[str, float] = {
    "KITTI": 80.0,
    "NYU": 10.0,
    "TUM": 10.0,
    "ETH3D": 72.0,
    "Sintel": 72.0,
}


@dataclass(frozen=True, slots=True)
class EvaluationOptions:
    policy: ResolutionPolicy | None = None
    degenerate: DegeneratePolicy = "fallback"
    eps: float = DEFAULT_EPS
    workers: int = 4
    strict: bool = False


class SampleScore(msgspec.Struct, frozen=True):
    index: int
    prediction: str
    value: float
    count: int
    degenerate: bool = False


class SampleFailure(msgspec.Struct, frozen=True):
    dataset: str
    index: int
    prediction: str
    error: str
    message: str


class DatasetResult(msgspec.Struct, frozen=True):
    dataset_name: str
    metric_kind: str
    value: float | None
    sample_count: int
    scores: list[SampleScore]
    failures: list[SampleFailure]
    skipped: list[int]
    degenerate_count: int = 0
    depth_cap: float | None = None
    clamp_scale: bool = False


class _Skipped(Exception):
    pass


@dataclass(frozen=True, slots=True)
class _Job:
    manifest: SampleManifest
    options: EvaluationOptions
    depth_cap: float | None
    clamp_scale: bool

    def score(self, sample: Sample) -> SampleScore:
        pred = load_raster(sample.prediction, RasterKind.for_path(sample.prediction))
        if self.manifest.metric_kind == "WHDR":
            return self._score_whdr(sample, pred)

        header = self.manifest.header
        gt_path = sample.ground_truth
        assert gt_path is not None
        gt_kind = RasterKind.for_path(gt_path)
        if header.ground_truth_space == "depth":
            gt_depth = load_raster(gt_path, gt_kind, scale=header.png_scale, space="depth")
            gt = depth_to_disparity(gt_depth)
        else:
            gt = load_raster(gt_path, gt_kind, scale=header.png_scale)

        native = self.manifest.native_resolution_for(sample) or (gt.width, gt.height)
        self._check_inference_resolution(sample, pred, native)
        if (pred.width, pred.height) != (gt.width, gt.height):
            pred = resample(pred, gt.width, gt.height)

        params, degenerate = self._align(sample, pred, gt)
        aligned = apply_alignment(pred, params)
        result = self._metric(aligned, gt)
        return SampleScore(
            sample.index,
            str(sample.prediction),
            result.value,
            result.count,
            degenerate,
        )

    def _score_whdr(self, sample: Sample, pred: DisparityMap) -> SampleScore:
        assert sample.ordinal_pairs is not None
        pairs = load_ordinal_pairs(sample.ordinal_pairs)
        native = self.manifest.native_resolution_for(sample)
        if native is not None:
            self._check_inference_resolution(sample, pred, native)
            if (pred.width, pred.height) != native:
                pred = resample(pred, *native)
        result = whdr(pred, pairs, self.manifest.header.whdr_tau)
        return SampleScore(sample.index, str(sample.prediction), result.value, result.count)

    def _align(
        self,
        sample: Sample,
        pred: DisparityMap,
        gt: DisparityMap,
    ) -> tuple[AlignmentParams, bool]:
        try:
            return solve_alignment(pred, gt, clamp_scale=self.clamp_scale), False
        except DegenerateSystemError as exc:
            if self.options.strict:
                raise
            if self.options.degenerate == "skip":
                logger.warning(
                    "%s sample %d skipped: %s", self.manifest.dataset_name, sample.index, exc
                )
                raise _Skipped from exc
            logger.warning(
                "%s sample %d degenerate, scored with zero scale: %s",
                self.manifest.dataset_name,
                sample.index,
                exc,
            )
            return fallback_alignment(pred, gt), True

    def _metric(self, aligned: DisparityMap, gt: DisparityMap) -> MetricResult:
        kind = self.manifest.metric_kind
        if kind == "RMSE":
            return rmse_disparity(aligned, gt)
        assert self.depth_cap is not None
        pred_depth = disparity_to_depth(aligned, self.depth_cap, self.options.eps)
        gt_depth = _capped_depth(gt, self.depth_cap)
        if kind == "REL":
            return rel(pred_depth, gt_depth)
        return bad_pix_delta1(pred_depth, gt_depth)

    def _check_inference_resolution(
        self,
        sample: Sample,
        pred: DisparityMap,
        native: tuple[int, int],
    ) -> None:
        policy = self.options.policy
        if policy is None:
            return
        expected = compute_inference_resolution(*native, policy)
        if (pred.width, pred.height) != expected:
            logger.warning(
                "%s sample %d: prediction is %dx%d, policy %s expects %dx%d",
                self.manifest.dataset_name,
                sample.index,
                pred.width,
                pred.height,
                policy,
                *expected,
            )


def _capped_depth(gt: DisparityMap, cap: float) -> DepthMap:
    """Ground-truth depth with pixels beyond *cap* masked out."""
    positive = gt.mask & (np.where(gt.mask, gt.values, 0.0) > 0)
    depth = 1.0 / np.where(positive, gt.values, 1.0)
    mask = positive & (depth <= cap)
    return DepthMap.from_array(np.where(mask, depth, np.nan), mask)


def resolve_depth_cap(manifest: SampleManifest, override: float | None = None) -> float | None:
    """Depth cap for a dataset: explicit override, manifest header, then the builtin default."""
    cap = override or manifest.depth_cap or DEFAULT_DEPTH_CAPS.get(manifest.dataset_name)
    if cap is None and manifest.metric_kind in ("REL", "BadPixDelta1"):
        raise ConfigError(
            f"{manifest.dataset_name}: {manifest.metric_kind} needs a depth cap; "
            "set depth_cap in the manifest header or the run config",
        )
    if cap is not None and cap <= 0:
        raise ConfigError(f"{manifest.dataset_name}: depth cap must be > 0, got {cap}")
    return cap


def evaluate_dataset(
    manifest: SampleManifest,
    options: EvaluationOptions,
    *,
    depth_cap: float | None = None,
    clamp_scale: bool | None = None,
) -> DatasetResult:
    """Score every sample of *manifest* and average the scores."""
    name = manifest.dataset_name
    clamp = manifest.metric_kind == "BadPixDelta1" if clamp_scale is None else clamp_scale
    cap = resolve_depth_cap(manifest, depth_cap) if manifest.metric_kind != "WHDR" else None
    job = _Job(manifest, options, cap, clamp)
    logger.info(
        "Evaluating [cyan]%s[/cyan] (%s, %d samples)",
        name,
        manifest.metric_kind,
        len(manifest.samples),
    )

    scores: list[SampleScore] = []
    failures: list[SampleFailure] = []
    skipped: list[int] = []
    for sample, outcome in zip(
        manifest.samples, _run(job, manifest.samples, options.workers), strict=True
    ):
        if isinstance(outcome, SampleScore):
            scores.append(outcome)
        elif isinstance(outcome, _Skipped):
            skipped.append(sample.index)
        else:
            logger.warning("%s sample %d failed: %s", name, sample.index, outcome)
            failures.append(
                SampleFailure(
                    name,
                    sample.index,
                    str(sample.prediction),
                    type(outcome).__name__,
                    str(outcome),
                ),
            )

    value = float(np.mean(np.array([s.value for s in scores]))) if scores else None
    result = DatasetResult(
        dataset_name=name,
        metric_kind=manifest.metric_kind,
        value=value,
        sample_count=len(manifest.samples),
        scores=scores,
        failures=failures,
        skipped=skipped,
        degenerate_count=sum(1 for s in scores if s.degenerate),
        depth_cap=cap,
        clamp_scale=clamp,
    )
    logger.info(
        "[cyan]%s[/cyan] %s = %s over %d samples (%d degenerate, %d skipped, %d failed)",
        name,
        manifest.metric_kind,
        "n/a" if value is None else f"{value:.6g}",
        len(scores),
        result.degenerate_count,
        len(skipped),
        len(failures),
    )
    return result


def _run(
    job: _Job,
    samples: tuple[Sample, ...],
    workers: int,
) -> Iterator[SampleScore | _Skipped | DepthZooError]:
    def _one(sample: Sample) -> SampleScore | _Skipped | DepthZooError:
        try:
            return job.score(sample)
        except _Skipped as exc:
            return exc
        except DepthZooError as exc:
            return exc

    if workers <= 1:
        yield from map(_one, samples)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_one, samples)
