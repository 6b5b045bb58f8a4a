"""Comparison tables over published or freshly computed evaluation records.

Rows are ranked by square-resolution improvement within each section; rows that
have no square improvement stay directly below the ranked row they followed in the
input. Per column, the best value is marked ``best`` and the runner-up ``second``.
"""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable, Sequence
from typing import Literal, TextIO

import msgspec
from rich.console import Console
from rich.table import Table
from rich.text import Text

from depth_zoo.exceptions import ReferenceMissingError
from depth_zoo.report.improvement import ErrorSet, format_improvement, relative_improvement
from depth_zoo.zoo.models import (
    DATASETS,
    NOT_EVALUATED,
    UNSUPPORTED,
    ErrorRow,
    FirstStageRecord,
    ModelEvalRecord,
    ResolutionMode,
)
from depth_zoo.zoo.records import format_cell

logger = logging.getLogger(__name__)

Better = Literal["low", "high"]
Marker = Literal["best", "second"]

DEFAULT_REFERENCE = "ViT-L"
MODE_PREFIX: dict[ResolutionMode, str] = {"unconstrained": "u", "square": "s"}

# (key, header, direction)
COLUMNS: tuple[tuple[str, str, Better], ...] = (
    ("params", "Par.", "low"),
    ("fps", "FPS", "high"),
    *((f"u_{d}", d, "low") for d in DATASETS),
    ("u_I", "I", "high"),
    *((f"s_{d}", d, "low") for d in DATASETS),
    ("s_I", "I", "high"),
)


class TableRow(msgspec.Struct):
    record: ModelEvalRecord
    improvement_unconstrained: float | None = None
    improvement_square: float | None = None
    markers: dict[str, Marker] = {}

    def improvement(self, mode: ResolutionMode) -> float | None:
        return self.improvement_square if mode == "square" else self.improvement_unconstrained

    def numeric(self, column: str) -> float | None:
        """Value used for ranking *column*; None for absent cells."""
        if column == "params":
            return self.record.params_millions
        if column == "fps":
            return self.record.fps
        prefix, _, name = column.partition("_")
        mode: ResolutionMode = "square" if prefix == "s" else "unconstrained"
        if name == "I":
            return self.improvement(mode)
        return self.record.row(mode).values[DATASETS.index(name)]

    def cell(self, column: str) -> str:
        record = self.record
        if column == "params":
            return f"{record.params_millions:g}"
        if column == "fps":
            return NOT_EVALUATED if record.fps is None else f"{record.fps:g}"
        prefix, _, name = column.partition("_")
        mode: ResolutionMode = "square" if prefix == "s" else "unconstrained"
        row = record.row(mode)
        if name == "I":
            value = self.improvement(mode)
            if value is None:
                return _missing_marker(row)
            return format_improvement(value, row.printed_improvement)
        i = DATASETS.index(name)
        return format_cell(row.values[i], row.zero_shot[i], row.markers[i])


def _missing_marker(row: ErrorRow) -> str:
    if row.markers and all(m == UNSUPPORTED for m in row.markers):
        return UNSUPPORTED
    return NOT_EVALUATED


class ComparisonTable(msgspec.Struct):
    reference: str
    rows: list[TableRow]

    def row(self, model_name: str) -> TableRow:
        for row in self.rows:
            if model_name in (row.record.model_name, row.record.key):
                return row
        raise KeyError(model_name)


class ImprovementDelta(msgspec.Struct, frozen=True):
    model: str
    mode: ResolutionMode
    recomputed: float
    printed: float
    note: str = ""

    @property
    def delta(self) -> float:
        return self.recomputed - self.printed


def find_reference(reference: str, pool: Iterable[ModelEvalRecord]) -> ModelEvalRecord:
    """Reference record by model name or ``"name [mix]"`` key with a complete square row."""
    for record in pool:
        if reference in (record.model_name, record.key):
            if not record.square.complete:
                raise ReferenceMissingError(
                    f"reference {reference!r} has no complete square-resolution errors",
                )
            return record
    raise ReferenceMissingError(f"reference model {reference!r} not found")


def _improvement(
    record: ModelEvalRecord,
    reference: ModelEvalRecord,
    mode: ResolutionMode,
) -> float | None:
    if not (record.row(mode).complete and reference.row(mode).complete):
        return None
    return relative_improvement(
        ErrorSet.from_record(record, mode),
        ErrorSet.from_record(reference, mode),
    ).improvement_percent


def order_rows(rows: Sequence[TableRow]) -> list[TableRow]:
    """Rank rows by square improvement, descending, section by section."""
    sections: dict[str, list[list[TableRow]]] = {}
    for row in rows:
        groups = sections.setdefault(row.record.section, [])
        if row.improvement_square is not None or not groups:
            groups.append([row])
        else:
            groups[-1].append(row)
    ordered: list[TableRow] = []
    for groups in sections.values():
        head = [] if groups[0][0].improvement_square is not None else groups.pop(0)
        ranked = sorted(groups, key=lambda g: -(g[0].improvement_square or 0.0))
        ordered.extend(head)
        for group in ranked:
            ordered.extend(group)
    return ordered


def _rank_markers(
    values: Sequence[float | None],
    better: Better,
) -> list[Marker | None]:
    distinct = sorted({v for v in values if v is not None}, reverse=better == "high")
    marks: dict[float, Marker] = {}
    if distinct:
        marks[distinct[0]] = "best"
    if len(distinct) > 1:
        marks[distinct[1]] = "second"
    return [None if v is None else marks.get(v) for v in values]


def _assign_markers(rows: Sequence[TableRow]) -> None:
    for column, _, better in COLUMNS:
        marks = _rank_markers([row.numeric(column) for row in rows], better)
        for row, mark in zip(rows, marks, strict=True):
            if mark:
                row.markers[column] = mark


def build_comparison_table(
    records: Iterable[ModelEvalRecord],
    reference: str = DEFAULT_REFERENCE,
    *,
    pool: Iterable[ModelEvalRecord] | None = None,
) -> ComparisonTable:
    """Rank *records* against *reference*, looked up in *pool* (defaults to *records*)."""
    records = list(records)
    ref = find_reference(reference, records if pool is None else pool)
    rows = [
        TableRow(
            record=record,
            improvement_unconstrained=_improvement(record, ref, "unconstrained"),
            improvement_square=_improvement(record, ref, "square"),
            markers={},
        )
        for record in records
    ]
    ordered = order_rows(rows)
    _assign_markers(ordered)
    return ComparisonTable(reference=ref.model_name, rows=ordered)


def improvement_deltas(table: ComparisonTable) -> list[ImprovementDelta]:
    """Recomputed versus published improvement for every row that prints one."""
    deltas: list[ImprovementDelta] = []
    for row in table.rows:
        for mode in ("unconstrained", "square"):
            printed = row.record.row(mode).printed_improvement
            value = row.improvement(mode)
            if printed and value is not None:
                deltas.append(
                    ImprovementDelta(
                        row.record.key,
                        mode,
                        value,
                        float(printed),
                        row.record.note,
                    ),
                )
    return deltas


_STYLES: dict[Marker, str] = {"best": "bold", "second": "underline"}
_PLAIN: dict[Marker, str] = {"best": "**{}**", "second": "_{}_"}


def to_rich_table(table: ComparisonTable, *, styled: bool = True) -> Table:
    """Rich table; markers render as bold/underline, or as ``**x**``/``_x_`` when unstyled."""
    out = Table(show_lines=False, pad_edge=False, box=None)
    out.add_column("Model", no_wrap=True)
    out.add_column("Mix", no_wrap=True)
    for _, header, _ in COLUMNS:
        out.add_column(header, justify="right", no_wrap=True)
    section = table.rows[0].record.section if table.rows else ""
    for row in table.rows:
        if row.record.section != section:
            section = row.record.section
            out.add_section()
        cells: list[Text | str] = [row.record.model_name, row.record.data_mix]
        for column, _, _ in COLUMNS:
            text = row.cell(column)
            mark = row.markers.get(column)
            if mark and styled:
                cells.append(Text(text, style=_STYLES[mark]))
            else:
                cells.append(_PLAIN[mark].format(text) if mark else text)
        out.add_row(*cells)
    return out


def render_text(table: ComparisonTable, width: int = 240) -> str:
    """Aligned plain text, reference line first."""
    buffer = io.StringIO()
    console = Console(file=buffer, width=width, no_color=True, highlight=False)
    console.print(f"Reference: {table.reference}")
    console.print(to_rich_table(table, styled=False))
    return buffer.getvalue()


def write_table_csv(table: ComparisonTable, handle: TextIO) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(
        ["section", "model", "data_mix", *(key for key, _, _ in COLUMNS), "best", "second"],
    )
    for row in table.rows:
        writer.writerow(
            [
                row.record.section,
                row.record.model_name,
                row.record.data_mix,
                *(row.cell(key) for key, _, _ in COLUMNS),
                ";".join(k for k, m in row.markers.items() if m == "best"),
                ";".join(k for k, m in row.markers.items() if m == "second"),
            ],
        )


FIRST_STAGE_COLUMNS = (
    ("hrwsi_rmse", "HRWSI RMSE"),
    ("blendedmvs_rel", "BlendedMVS REL"),
    ("redweb_rmse", "ReDWeb RMSE"),
)


class FirstStageRow(msgspec.Struct):
    record: FirstStageRecord
    markers: dict[str, Marker] = {}


def build_first_stage_table(records: Iterable[FirstStageRecord]) -> list[FirstStageRow]:
    """First-stage records in input order with lower-is-better markers."""
    rows = [FirstStageRow(record, {}) for record in records]
    for column, _ in FIRST_STAGE_COLUMNS:
        marks = _rank_markers([getattr(r.record, column) for r in rows], "low")
        for row, mark in zip(rows, marks, strict=True):
            if mark:
                row.markers[column] = mark
    return rows


def first_stage_rich_table(rows: Sequence[FirstStageRow], *, styled: bool = True) -> Table:
    out = Table(show_lines=False, pad_edge=False, box=None)
    out.add_column("Model", no_wrap=True)
    out.add_column("Run", no_wrap=True)
    for _, header in FIRST_STAGE_COLUMNS:
        out.add_column(header, justify="right", no_wrap=True)
    section = rows[0].record.section if rows else ""
    for row in rows:
        if row.record.section != section:
            section = row.record.section
            out.add_section()
        cells: list[Text | str] = [row.record.model_name, row.record.run]
        for column, _ in FIRST_STAGE_COLUMNS:
            text = f"{getattr(row.record, column):g}"
            mark = row.markers.get(column)
            if mark and styled:
                cells.append(Text(text, style=_STYLES[mark]))
            else:
                cells.append(_PLAIN[mark].format(text) if mark else text)
        out.add_row(*cells)
    return out
