"""Line-oriented JSON sample manifests.

The first non-blank line is the header record; each following line is one sample::

    {"dataset_name": "KITTI", "metric_kind": "BadPixDelta1", "depth_cap": 80, "png_scale": 256}
    {"prediction": "pred/0000.pfm", "ground_truth": "gt/0000.png"}

Sample paths are resolved relative to the manifest's directory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import msgspec

from depth_zoo.exceptions import ManifestError
from depth_zoo.storage.io import atomic_write

logger = logging.getLogger(__name__)

MetricKind = Literal["WHDR", "REL", "BadPixDelta1", "RMSE"]
GroundTruthSpace = Literal["disparity", "depth"]


class ManifestHeader(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    """Dataset-level settings shared by every sample."""

    dataset_name: str
    metric_kind: MetricKind
    depth_cap: float | None = None
    png_scale: float = 1.0
    ground_truth_space: GroundTruthSpace = "depth"
    native_resolution: tuple[int, int] | None = None
    whdr_tau: float | None = None


class SampleRecord(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    """One manifest line: paths as written in the file."""

    prediction: str
    ground_truth: str | None = None
    ordinal_pairs: str | None = None
    image: str | None = None
    native_resolution: tuple[int, int] | None = None


@dataclass(frozen=True, slots=True)
class Sample:
    """A sample with paths resolved against the manifest directory."""

    index: int
    prediction: Path
    ground_truth: Path | None
    ordinal_pairs: Path | None
    native_resolution: tuple[int, int] | None


@dataclass(frozen=True, slots=True)
class SampleManifest:
    """Parsed manifest: header plus resolved samples."""

    path: Path
    header: ManifestHeader
    samples: tuple[Sample, ...]

    @property
    def dataset_name(self) -> str:
        return self.header.dataset_name

    @property
    def metric_kind(self) -> MetricKind:
        return self.header.metric_kind

    @property
    def depth_cap(self) -> float | None:
        return self.header.depth_cap

    def native_resolution_for(self, sample: Sample) -> tuple[int, int] | None:
        return sample.native_resolution or self.header.native_resolution


_header_decoder = msgspec.json.Decoder(ManifestHeader)
_sample_decoder = msgspec.json.Decoder(SampleRecord)


def load_manifest(path: Path) -> SampleManifest:
    """Parse and validate the manifest at *path*."""
    try:
        lines = path.read_bytes().splitlines()
    except OSError as exc:
        raise ManifestError(f"{path}: {exc.strerror or exc}") from exc

    numbered = [(n, line) for n, line in enumerate(lines, start=1) if line.strip()]
    if not numbered:
        raise ManifestError(f"{path}: manifest is empty")

    header_line, header_raw = numbered[0]
    header = _decode(_header_decoder, header_raw, path, header_line)
    _validate_header(header, path)

    base = path.parent
    samples: list[Sample] = []
    for index, (line_no, raw) in enumerate(numbered[1:]):
        record = _decode(_sample_decoder, raw, path, line_no)
        _validate_record(record, header, path, line_no)
        samples.append(
            Sample(
                index=index,
                prediction=base / record.prediction,
                ground_truth=base / record.ground_truth if record.ground_truth else None,
                ordinal_pairs=base / record.ordinal_pairs if record.ordinal_pairs else None,
                native_resolution=record.native_resolution,
            ),
        )
    if not samples:
        raise ManifestError(f"{path}: manifest has a header but no samples")
    logger.debug("Loaded %d samples for %s from %s", len(samples), header.dataset_name, path)
    return SampleManifest(path=path, header=header, samples=tuple(samples))


def write_manifest(path: Path, header: ManifestHeader, records: list[SampleRecord]) -> None:
    """Write *header* and *records* as a manifest, one JSON object per line."""
    encoder = msgspec.json.Encoder()
    lines = [encoder.encode(header), *(encoder.encode(r) for r in records)]
    atomic_write(path, b"\n".join(lines) + b"\n")


def _decode[T](decoder: msgspec.json.Decoder[T], raw: bytes, path: Path, line_no: int) -> T:
    try:
        return decoder.decode(raw)
    except msgspec.DecodeError as exc:
        raise ManifestError(f"{path}:{line_no}: {exc}") from exc


def _validate_header(header: ManifestHeader, path: Path) -> None:
    if header.depth_cap is not None and header.depth_cap <= 0:
        raise ManifestError(f"{path}: depth_cap must be > 0, got {header.depth_cap}")
    if header.png_scale <= 0:
        raise ManifestError(f"{path}: png_scale must be > 0, got {header.png_scale}")
    if header.whdr_tau is not None and header.whdr_tau < 0:
        raise ManifestError(f"{path}: whdr_tau must be >= 0, got {header.whdr_tau}")
    _validate_resolution(header.native_resolution, path, 1)


def _validate_record(
    record: SampleRecord,
    header: ManifestHeader,
    path: Path,
    line_no: int,
) -> None:
    if header.metric_kind == "WHDR":
        if not record.ordinal_pairs:
            raise ManifestError(f"{path}:{line_no}: WHDR samples require 'ordinal_pairs'")
    elif not record.ground_truth:
        raise ManifestError(
            f"{path}:{line_no}: {header.metric_kind} samples require 'ground_truth'",
        )
    _validate_resolution(record.native_resolution, path, line_no)


def _validate_resolution(resolution: tuple[int, int] | None, path: Path, line_no: int) -> None:
    if resolution is not None and min(resolution) <= 0:
        raise ManifestError(f"{path}:{line_no}: native_resolution must be positive")
