"""Shared test fixtures."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from depth_zoo.depthio.manifest import ManifestHeader, MetricKind, SampleRecord, write_manifest
from depth_zoo.depthio.maps import DepthMap, DisparityMap
from depth_zoo.depthio.raster import RasterKind, write_raster

DatasetFactory = Callable[..., Path]


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20231126)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    for name in (
        "DEPTHZOO_CATALOG",
        "DEPTHZOO_WORKERS",
        "DEPTHZOO_EPS",
        "DEPTHZOO_REFERENCE",
        "DEPTHZOO_DEGENERATE",
    ):
        monkeypatch.delenv(name, raising=False)


def make_depth(rng: np.random.Generator, height: int, width: int) -> DepthMap:
    """Random depth in [1, 9] with about a tenth of the pixels masked out."""
    values = rng.uniform(1.0, 9.0, size=(height, width))
    mask = rng.random((height, width)) > 0.1
    return DepthMap.from_array(values, mask)


@pytest.fixture()
def synthetic_dataset(tmp_path: Path, rng: np.random.Generator) -> DatasetFactory:
    """Write a dataset whose predictions are an affine disparity transform of the truth.

    Returns the manifest path. ``noise`` adds Gaussian noise to predicted disparity,
    ``constant`` makes the given sample indices constant predictions.
    """

    def _build(  # noqa: PLR0913
        name: str = "NYU",
        metric: MetricKind = "REL",
        samples: int = 4,
        *,
        size: tuple[int, int] = (12, 9),
        noise: float = 0.0,
        constant: tuple[int, ...] = (),
        depth_cap: float | None = 10.0,
    ) -> Path:
        root = tmp_path / name
        (root / "gt").mkdir(parents=True, exist_ok=True)
        (root / "pred").mkdir(exist_ok=True)
        width, height = size
        records: list[SampleRecord] = []
        for i in range(samples):
            depth = make_depth(rng, height, width)
            write_raster(root / "gt" / f"{i:04d}.pfm", depth, RasterKind.PFM)
            disparity = 1.0 / np.where(depth.mask, depth.values, 1.0)
            pred = 3.0 * disparity + 0.5 + noise * rng.standard_normal(disparity.shape)
            if i in constant:
                pred = np.full_like(pred, 0.7)
            write_raster(
                root / "pred" / f"{i:04d}.pfm",
                DisparityMap.from_array(pred),
                RasterKind.PFM,
            )
            records.append(
                SampleRecord(prediction=f"pred/{i:04d}.pfm", ground_truth=f"gt/{i:04d}.pfm"),
            )
        manifest = root / "manifest.jsonl"
        write_manifest(
            manifest,
            ManifestHeader(dataset_name=name, metric_kind=metric, depth_cap=depth_cap),
            records,
        )
        return manifest

    return _build
