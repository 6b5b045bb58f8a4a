"""Controller for the ``compare`` CLI command."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

from depth_zoo.report.plot import PlotPoint, plot_data, write_plot_csv
from depth_zoo.report.table import (
    DEFAULT_REFERENCE,
    ComparisonTable,
    FirstStageRow,
    ImprovementDelta,
    build_comparison_table,
    build_first_stage_table,
    improvement_deltas,
    write_table_csv,
)
from depth_zoo.storage.io import atomic_write_text
from depth_zoo.zoo.models import ModelEvalRecord
from depth_zoo.zoo.records import load_eval_records
from depth_zoo.zoo.registry import builtin_eval_records, builtin_first_stage_records

logger = logging.getLogger(__name__)

# Published improvements mix integer and one-decimal precision.
PRINTED_TOLERANCE = 0.6


@dataclass(slots=True)
class CompareCommand:
    """CLI inputs for the compare command. Without *records_csv* the builtin records are used."""

    records_csv: Path | None = None
    reference: str = DEFAULT_REFERENCE
    table: int | None = None
    plot_path: Path | None = None
    csv_path: Path | None = None
    check: bool = False
    first_stage: bool = False


@dataclass(slots=True)
class CompareResult:
    table: ComparisonTable | None = None
    deltas: list[ImprovementDelta] = field(default_factory=list)
    plot: list[PlotPoint] = field(default_factory=list)
    first_stage: list[FirstStageRow] = field(default_factory=list)

    @property
    def check_failures(self) -> list[ImprovementDelta]:
        """Deltas beyond the printed-precision tolerance on rows without a note."""
        return [d for d in self.deltas if not d.note and abs(d.delta) > PRINTED_TOLERANCE]


class CompareCliController:
    """Builds comparison tables and writes their CSV and plot artifacts."""

    def run(self, command: CompareCommand) -> CompareResult:
        if command.first_stage:
            rows = build_first_stage_table(builtin_first_stage_records())
            return CompareResult(first_stage=rows)

        records, pool = self._records(command)
        table = build_comparison_table(records, command.reference, pool=pool)
        result = CompareResult(table=table)
        if command.check:
            result.deltas = improvement_deltas(table)
        if command.csv_path is not None:
            buffer = io.StringIO()
            write_table_csv(table, buffer)
            atomic_write_text(command.csv_path, buffer.getvalue())
            logger.info("Table written to [cyan]%s[/cyan]", command.csv_path)
        if command.plot_path is not None:
            result.plot = plot_data(records, command.reference, pool=pool)
            buffer = io.StringIO()
            write_plot_csv(result.plot, buffer)
            atomic_write_text(command.plot_path, buffer.getvalue())
            logger.info(
                "Plot data for %d models written to [cyan]%s[/cyan]",
                len(result.plot),
                command.plot_path,
            )
        return result

    @staticmethod
    def _records(
        command: CompareCommand,
    ) -> tuple[list[ModelEvalRecord], list[ModelEvalRecord]]:
        builtin = builtin_eval_records()
        if command.records_csv is None:
            table = command.table or 1
            return [r for r in builtin if r.table == table], builtin
        records = load_eval_records(command.records_csv)
        if command.table is not None:
            records = [r for r in records if r.table == command.table]
        return records, [*records, *builtin]
