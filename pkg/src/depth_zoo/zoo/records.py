"""CSV loaders for evaluation records.

Error cells are kept exactly as printed in the comparison tables: a trailing ``*``
marks a non-zero-shot error, ``--`` an unsupported resolution and ``-`` a value
that was not evaluated.
"""

from __future__ import annotations

import csv
import logging
from importlib import resources
from importlib.resources.abc import Traversable
from pathlib import Path
from typing import TextIO

import msgspec

from depth_zoo.exceptions import RecordsFileError
from depth_zoo.zoo.models import (
    DATASETS,
    NOT_EVALUATED,
    UNSUPPORTED,
    FirstStageRecord,
    ModelEvalRecord,
)

logger = logging.getLogger(__name__)

EVAL_RECORD_COLUMNS = (
    "table",
    "section",
    "model",
    "descriptor",
    "data_mix",
    "params",
    "fps",
    *(f"u_{d}" for d in DATASETS),
    "u_I",
    *(f"s_{d}" for d in DATASETS),
    "s_I",
    "note",
)
_REQUIRED_COLUMNS = frozenset(EVAL_RECORD_COLUMNS) - {"table", "section", "descriptor", "note"}


def parse_cell(text: str) -> tuple[float | None, bool, str]:
    """Split a printed cell into ``(value, zero_shot, marker)``.

    >>> parse_cell("11.57*")
    (11.57, False, '')
    >>> parse_cell("0.066")
    (0.066, True, '')
    >>> parse_cell("--"), parse_cell("-"), parse_cell("")
    ((None, True, '--'), (None, True, '-'), (None, True, '-'))
    """
    cell = text.strip()
    if cell in (UNSUPPORTED, NOT_EVALUATED, ""):
        return None, True, cell or NOT_EVALUATED
    zero_shot = not cell.endswith("*")
    value = float(cell.rstrip("*"))
    if value < 0:
        raise ValueError(f"error values must be >= 0, got {cell!r}")
    return value, zero_shot, ""


def format_cell(value: float | None, zero_shot: bool, marker: str) -> str:
    """Inverse of `parse_cell` up to float formatting.

    >>> format_cell(11.57, False, "")
    '11.57*'
    """
    if value is None:
        return marker or NOT_EVALUATED
    return f"{value:g}{'' if zero_shot else '*'}"


def _error_row(row: dict[str, str], prefix: str) -> dict[str, object]:
    cells = [parse_cell(row[f"{prefix}_{d}"]) for d in DATASETS]
    printed = row[f"{prefix}_I"].strip()
    return {
        "values": [c[0] for c in cells],
        "zero_shot": [c[1] for c in cells],
        "markers": [c[2] for c in cells],
        "printed_improvement": "" if printed in (UNSUPPORTED, NOT_EVALUATED) else printed,
    }


def _optional_float(text: str) -> float | None:
    cell = text.strip()
    return None if cell in ("", UNSUPPORTED, NOT_EVALUATED) else float(cell)


def read_eval_records(handle: TextIO, source: str = "<stream>") -> list[ModelEvalRecord]:
    """Parse evaluation records from an open CSV stream."""
    reader = csv.DictReader(handle)
    missing = _REQUIRED_COLUMNS - set(reader.fieldnames or ())
    if missing:
        raise RecordsFileError(f"{source}: missing columns {sorted(missing)}")
    records: list[ModelEvalRecord] = []
    for line_no, row in enumerate(reader, start=2):
        try:
            record = msgspec.convert(
                {
                    "model_name": row["model"].strip(),
                    "descriptor": (row.get("descriptor") or row["model"]).strip(),
                    "data_mix": row["data_mix"].strip(),
                    "params_millions": float(row["params"]),
                    "fps": _optional_float(row["fps"]),
                    "unconstrained": _error_row(row, "u"),
                    "square": _error_row(row, "s"),
                    "table": int(row.get("table") or 1),
                    "section": (row.get("section") or "main").strip(),
                    "note": (row.get("note") or "").strip(),
                },
                ModelEvalRecord,
            )
        except (ValueError, msgspec.ValidationError) as exc:
            raise RecordsFileError(f"{source}:{line_no}: {exc}") from exc
        records.append(record)
    logger.debug("Read %d evaluation records from %s", len(records), source)
    return records


def load_eval_records(path: Path) -> list[ModelEvalRecord]:
    """Load evaluation records from a CSV file."""
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            return read_eval_records(handle, str(path))
    except OSError as exc:
        raise RecordsFileError(f"{path}: {exc.strerror or exc}") from exc


def load_first_stage_records(handle: TextIO, source: str = "<stream>") -> list[FirstStageRecord]:
    """Parse first-stage validation records (HRWSI RMSE, BlendedMVS REL, ReDWeb RMSE)."""
    records: list[FirstStageRecord] = []
    for line_no, row in enumerate(csv.DictReader(handle), start=2):
        try:
            records.append(
                FirstStageRecord(
                    model_name=row["model"].strip(),
                    descriptor=(row.get("descriptor") or row["model"]).strip(),
                    hrwsi_rmse=float(row["hrwsi_rmse"]),
                    blendedmvs_rel=float(row["blendedmvs_rel"]),
                    redweb_rmse=float(row["redweb_rmse"]),
                    section=(row.get("section") or "reference").strip(),
                    run=(row.get("run") or "").strip(),
                ),
            )
        except (KeyError, ValueError) as exc:
            raise RecordsFileError(f"{source}:{line_no}: {exc}") from exc
    return records


def builtin_data(name: str) -> Traversable:
    """Path-like handle to a file shipped in ``depth_zoo/zoo/data``."""
    return resources.files("depth_zoo.zoo").joinpath("data", name)
