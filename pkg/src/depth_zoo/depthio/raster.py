"""PFM and 16-bit PNG raster I/O.

PFM: ``Pf`` header (single channel), ``width height`` line, scale line whose sign
selects endianness (negative = little-endian), then float32 rows stored bottom to
top. Non-finite pixels are the masked sentinel.

PNG16: single-channel 16-bit grayscale. Raw value 0 is the masked sentinel; other
values are divided by the declared *scale*.
"""

from __future__ import annotations

import io
import logging
import re
from enum import StrEnum
from pathlib import Path
from typing import Literal, overload

import numpy as np
from PIL import Image, UnidentifiedImageError

from depth_zoo.depthio.maps import DepthMap, DisparityMap
from depth_zoo.exceptions import RasterFormatError, RasterReadError
from depth_zoo.storage.io import atomic_write

logger = logging.getLogger(__name__)

MAX_DIMENSION = 1 << 16
_PFM_HEADER_RE = re.compile(rb"^(P[Ff])\s+(\d+)\s+(\d+)\s+(\S+)\s", re.ASCII)
_PNG16_MODES = {"I;16", "I;16B", "I;16L", "I"}

Space = Literal["disparity", "depth"]


class RasterKind(StrEnum):
    PFM = "PFM"
    PNG16 = "PNG16"

    @classmethod
    def for_path(cls, path: Path) -> RasterKind:
        """Infer the raster kind from a file suffix.

        >>> RasterKind.for_path(Path("a/b.pfm"))
        <RasterKind.PFM: 'PFM'>
        >>> RasterKind.for_path(Path("gt.PNG"))
        <RasterKind.PNG16: 'PNG16'>
        """
        suffix = path.suffix.lower()
        if suffix == ".pfm":
            return cls.PFM
        if suffix == ".png":
            return cls.PNG16
        raise RasterFormatError(f"{path}: cannot infer raster kind from suffix {suffix!r}")


@overload
def load_raster(
    path: Path, kind: RasterKind, *, scale: float = ..., space: Literal["disparity"] = ...
) -> DisparityMap: ...
@overload
def load_raster(
    path: Path, kind: RasterKind, *, scale: float = ..., space: Literal["depth"]
) -> DepthMap: ...
def load_raster(
    path: Path,
    kind: RasterKind,
    *,
    scale: float = 1.0,
    space: Space = "disparity",
) -> DisparityMap | DepthMap:
    """Read *path* as a disparity (default) or depth map.

    *scale* divides PNG16 raw values and is ignored for PFM.
    """
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise RasterReadError(f"{path}: {exc.strerror or exc}") from exc

    if kind is RasterKind.PFM:
        values = _decode_pfm(data, path)
    else:
        values = _decode_png16(data, path, scale)

    cls = DepthMap if space == "depth" else DisparityMap
    return cls.from_array(values)


def write_raster(
    path: Path,
    depth_map: DisparityMap | DepthMap,
    kind: RasterKind,
    *,
    scale: float = 1.0,
) -> None:
    """Write *depth_map* to *path*; masked pixels become the format's sentinel.

    PNG16 quantizes ``round(value * scale)`` into ``[1, 65535]`` on valid pixels so
    no valid pixel collides with the 0 sentinel. A valid value ``<= 0`` has no
    encoding and raises :class:`RasterFormatError`; positive values below
    ``0.5 / scale`` store as 1 and values above ``65535 / scale`` saturate.
    """
    if kind is RasterKind.PFM:
        atomic_write(path, _encode_pfm(depth_map))
    else:
        atomic_write(path, _encode_png16(depth_map, scale))


def _decode_pfm(data: bytes, path: Path) -> np.ndarray:
    match = _PFM_HEADER_RE.match(data)
    if match is None:
        raise RasterFormatError(f"{path}: malformed PFM header")
    tag, raw_w, raw_h, raw_scale = match.groups()
    if tag != b"Pf":
        raise RasterFormatError(f"{path}: only single-channel 'Pf' files are supported")
    width, height = int(raw_w), int(raw_h)
    try:
        pfm_scale = float(raw_scale)
    except ValueError as exc:
        raise RasterFormatError(f"{path}: malformed PFM scale {raw_scale!r}") from exc
    if pfm_scale == 0 or not np.isfinite(pfm_scale):
        raise RasterFormatError(f"{path}: PFM scale must be finite and non-zero")
    _check_dimensions(width, height, path)

    offset = match.end()
    expected = width * height * 4
    if len(data) - offset < expected:
        raise RasterFormatError(
            f"{path}: header declares {width}x{height} but only "
            f"{len(data) - offset} data bytes follow",
        )
    dtype = np.dtype("<f4") if pfm_scale < 0 else np.dtype(">f4")
    grid = np.frombuffer(data, dtype=dtype, count=width * height, offset=offset)
    return np.flipud(grid.reshape(height, width)).astype(np.float64)


def _encode_pfm(depth_map: DisparityMap | DepthMap) -> bytes:
    grid = np.where(depth_map.mask, depth_map.values, np.nan).astype("<f4")
    header = f"Pf\n{depth_map.width} {depth_map.height}\n-1.0\n".encode("ascii")
    return header + np.flipud(grid).tobytes()


def _decode_png16(data: bytes, path: Path, scale: float) -> np.ndarray:
    if scale <= 0:
        raise RasterFormatError(f"{path}: PNG16 scale must be > 0, got {scale}")
    try:
        with Image.open(io.BytesIO(data)) as image:
            if image.mode not in _PNG16_MODES:
                raise RasterFormatError(
                    f"{path}: expected 16-bit grayscale PNG, got mode {image.mode!r}",
                )
            _check_dimensions(image.width, image.height, path)
            raw = np.asarray(image, dtype=np.int64)
    except (UnidentifiedImageError, OSError) as exc:
        raise RasterFormatError(f"{path}: not a readable PNG ({exc})") from exc
    if raw.min(initial=0) < 0 or raw.max(initial=0) > 65535:
        raise RasterFormatError(f"{path}: pixel values outside the 16-bit range")
    values = raw.astype(np.float64) / scale
    values[raw == 0] = np.nan
    return values


def _encode_png16(depth_map: DisparityMap | DepthMap, scale: float) -> bytes:
    if scale <= 0:
        raise ValueError(f"PNG16 scale must be > 0, got {scale}")
    valid = depth_map.values[depth_map.mask]
    if valid.size and float(valid.min()) <= 0:
        raise RasterFormatError(
            f"PNG16 cannot store valid value {float(valid.min())!r}: values must be > 0",
        )
    quantized = np.clip(np.rint(depth_map.values * scale), 1, 65535)
    raw = np.where(depth_map.mask, quantized, 0).astype(np.uint16)
    buffer = io.BytesIO()
    Image.fromarray(raw).save(buffer, format="PNG")
    return buffer.getvalue()


def _check_dimensions(width: int, height: int, path: Path) -> None:
    if not (0 < width <= MAX_DIMENSION and 0 < height <= MAX_DIMENSION):
        raise RasterFormatError(
            f"{path}: dimensions {width}x{height} outside 1..{MAX_DIMENSION}",
        )
