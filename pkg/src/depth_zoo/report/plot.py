"""Improvement-versus-FPS plot data.

The built-in Table 1 has 14 rows and all of them carry FPS, so the built-in plot has
14 points and drops nothing. The published figure shows 16 bubbles; its two extra
entries have no table row, so there are no errors to compute an improvement from.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterable
from typing import NamedTuple, TextIO

from depth_zoo.report.table import DEFAULT_REFERENCE, build_comparison_table
from depth_zoo.zoo.models import ModelEvalRecord

logger = logging.getLogger(__name__)

PLOT_HEADER = ("fps", "improvement", "params", "model")


class PlotPoint(NamedTuple):
    fps: float
    improvement: float
    params: float
    model: str


def plot_data(
    records: Iterable[ModelEvalRecord],
    reference: str = DEFAULT_REFERENCE,
    *,
    pool: Iterable[ModelEvalRecord] | None = None,
) -> list[PlotPoint]:
    """One point per record with FPS, ordered by FPS.

    The square-resolution improvement is used when available, otherwise the
    unconstrained one. Records lacking either FPS or an improvement are skipped.
    """
    records = list(records)
    table = build_comparison_table(records, reference, pool=pool)
    points: list[PlotPoint] = []
    for record in records:
        row = table.row(record.key)
        if record.fps is None:
            logger.warning("Skipping %s in plot data: no FPS", record.key)
            continue
        improvement = row.improvement_square
        if improvement is None:
            improvement = row.improvement_unconstrained
        if improvement is None:
            logger.warning("Skipping %s in plot data: no improvement", record.key)
            continue
        points.append(
            PlotPoint(record.fps, improvement, record.params_millions, record.model_name),
        )
    return sorted(points, key=lambda p: p.fps)


def write_plot_csv(points: Iterable[PlotPoint], handle: TextIO) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(PLOT_HEADER)
    for point in points:
        writer.writerow(
            [f"{point.fps:g}", f"{point.improvement:.2f}", f"{point.params:g}", point.model],
        )
