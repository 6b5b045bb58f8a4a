"""Report and raster output: files appear complete or not at all."""

from __future__ import annotations

import contextlib
import os
import tempfile
from collections.abc import Iterator
from pathlib import Path
from typing import BinaryIO

import msgspec


@contextlib.contextmanager
def atomic_output(path: Path) -> Iterator[BinaryIO]:
    """Yield a binary handle whose contents replace *path* when the block exits cleanly.

    The temp file lives next to *path* so the final ``os.replace`` stays on one
    filesystem; on error it is removed and *path* is left untouched.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, staging = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as handle:
            yield handle
        os.replace(staging, path)
    except BaseException:
        Path(staging).unlink(missing_ok=True)
        raise


def atomic_write(path: Path, data: bytes) -> None:
    with atomic_output(path) as handle:
        handle.write(data)


def atomic_write_text(path: Path, text: str) -> None:
    """UTF-8, line endings kept as given."""
    atomic_write(path, text.encode("utf-8"))


def save_msgspec(path: Path, obj: object) -> None:
    """Indented JSON with a trailing newline, so reruns produce identical bytes."""
    atomic_write(path, msgspec.json.format(msgspec.json.encode(obj), indent=2) + b"\n")
