"""Controller for the ``evaluate`` CLI command and its report files."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path

import msgspec

from depth_zoo.config import DegeneratePolicy, RunConfig, Settings, load_run_config
from depth_zoo.depthio.manifest import load_manifest
from depth_zoo.evaluation.pipeline import DatasetResult, EvaluationOptions, evaluate_dataset
from depth_zoo.exceptions import DepthZooError, SampleFailuresError
from depth_zoo.report.improvement import ErrorSet, ImprovementResult, relative_improvement
from depth_zoo.report.table import find_reference
from depth_zoo.storage.io import atomic_write_text, save_msgspec
from depth_zoo.zoo.models import DATASETS, ResolutionMode
from depth_zoo.zoo.registry import builtin_eval_records

logger = logging.getLogger(__name__)

# Published tables print WHDR as a fraction, the metric reports a percentage.
TABLE_UNITS = {"DIW": 0.01}

REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"
REPORT_TXT = "report.txt"


@dataclass(slots=True)
class EvaluateCommand:
    """CLI inputs for the evaluate command; set fields override the run config."""

    config_path: Path
    workers: int | None = None
    strict: bool = False
    output_dir: Path | None = None
    degenerate: DegeneratePolicy | None = None
    resolution: str | None = None


class EvaluationReport(msgspec.Struct):
    resolution_policy: str | None
    degenerate_policy: str
    eps: float
    reference: str
    datasets: list[DatasetResult]
    improvement: ImprovementResult | None = None

    @property
    def failure_count(self) -> int:
        return sum(len(d.failures) for d in self.datasets)


@dataclass(slots=True)
class EvaluationResult:
    report: EvaluationReport
    output_dir: Path


class EvaluateCliController:
    """Runs every configured dataset and writes the JSON, CSV and text reports."""

    def run(self, command: EvaluateCommand) -> EvaluationResult:
        settings = Settings.from_env()
        config = load_run_config(command.config_path)
        if command.resolution is not None:
            config = msgspec.structs.replace(config, resolution=command.resolution)
            config.validate()

        options = EvaluationOptions(
            policy=config.policy(),
            degenerate=command.degenerate or config.degenerate or settings.evaluation.degenerate,
            eps=config.eps or settings.evaluation.eps,
            workers=command.workers or config.workers or settings.evaluation.workers,
            strict=command.strict,
        )
        reference = config.reference or settings.report.reference
        datasets = [
            evaluate_dataset(
                load_manifest(Path(entry.manifest)),
                options,
                depth_cap=entry.depth_cap,
                clamp_scale=_pick(entry.clamp_scale, config.clamp_scale),
            )
            for entry in config.dataset
        ]

        report = EvaluationReport(
            resolution_policy=config.resolution,
            degenerate_policy=options.degenerate,
            eps=options.eps,
            reference=reference,
            datasets=datasets,
            improvement=_improvement(datasets, reference, config),
        )
        if options.strict and report.failure_count:
            raise SampleFailuresError(
                f"{report.failure_count} unusable samples: "
                + "; ".join(
                    f"{f.dataset}#{f.index} {f.error}" for d in datasets for f in d.failures
                ),
            )

        output_dir = command.output_dir or Path(config.output_dir)
        write_reports(report, output_dir)
        return EvaluationResult(report=report, output_dir=output_dir)


def _improvement(
    datasets: list[DatasetResult],
    reference: str,
    config: RunConfig,
) -> ImprovementResult | None:
    by_name = {d.dataset_name: d for d in datasets}
    if not all(name in by_name and by_name[name].value is not None for name in DATASETS):
        logger.info("Improvement needs scores for all of %s; skipped", ", ".join(DATASETS))
        return None
    policy = config.policy()
    mode: ResolutionMode = "unconstrained" if policy and not policy.is_square else "square"
    values = tuple(
        (by_name[name].value or 0.0) * TABLE_UNITS.get(name, 1.0) for name in DATASETS
    )
    try:
        ref = find_reference(reference, builtin_eval_records())
        return relative_improvement(
            ErrorSet("evaluated", values, mode),
            ErrorSet.from_record(ref, mode),
        )
    except DepthZooError as exc:
        logger.warning("Improvement not computed: %s", exc)
        return None


def report_lines(report: EvaluationReport) -> list[str]:
    lines = [
        f"resolution  {report.resolution_policy or 'as predicted'}",
        f"degenerate  {report.degenerate_policy}",
        "",
        f"{'dataset':<10} {'metric':<13} {'value':>12} {'samples':>8} {'scored':>7} "
        f"{'degen':>6} {'skipped':>8} {'failed':>7}",
    ]
    for d in report.datasets:
        value = "-" if d.value is None else f"{d.value:.6f}"
        lines.append(
            f"{d.dataset_name:<10} {d.metric_kind:<13} {value:>12} {d.sample_count:>8} "
            f"{len(d.scores):>7} {d.degenerate_count:>6} {len(d.skipped):>8} "
            f"{len(d.failures):>7}",
        )
    if report.improvement is not None:
        lines += [
            "",
            f"I vs {report.reference} ({report.improvement.resolution_mode}): "
            f"{report.improvement.improvement_percent:.2f}",
        ]
    for d in report.datasets:
        lines += [f"failed: {f.dataset}#{f.index} {f.error}: {f.message}" for f in d.failures]
    return lines


def write_reports(report: EvaluationReport, output_dir: Path) -> None:
    """Write ``report.json``, ``report.csv`` and ``report.txt`` into *output_dir*."""
    save_msgspec(output_dir / REPORT_JSON, report)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["dataset", "metric", "value", "samples", "scored", "degenerate", "skipped", "failed"],
    )
    for d in report.datasets:
        writer.writerow(
            [
                d.dataset_name,
                d.metric_kind,
                "" if d.value is None else repr(d.value),
                d.sample_count,
                len(d.scores),
                d.degenerate_count,
                len(d.skipped),
                len(d.failures),
            ],
        )
    atomic_write_text(output_dir / REPORT_CSV, buffer.getvalue())
    atomic_write_text(output_dir / REPORT_TXT, "\n".join(report_lines(report)) + "\n")
    logger.info("Reports written to [cyan]%s[/cyan]", output_dir)


def _pick(override: bool | None, default: bool | None) -> bool | None:
    return default if override is None else override
