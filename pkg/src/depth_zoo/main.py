"""CLI entrypoint for depth-zoo."""

import contextlib
import logging
import re
from collections.abc import Iterator
from pathlib import Path

import rich_click as click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich.text import Text

from depth_zoo import __version__
from depth_zoo.config import Settings
from depth_zoo.evaluation.controllers import (
    EvaluateCliController,
    EvaluateCommand,
    EvaluationResult,
    report_lines,
)
from depth_zoo.exceptions import EXIT_VALIDATION, DepthZooError
from depth_zoo.report.controllers import CompareCliController, CompareCommand, CompareResult
from depth_zoo.report.table import first_stage_rich_table, to_rich_table
from depth_zoo.shapecheck import controllers as shapes
from depth_zoo.zoo.catalog import dump_catalog
from depth_zoo.zoo.registry import Registry, builtin_eval_records, builtin_first_stage_records

_RESOLUTION_RE = re.compile(r"^(\d+)[xX](\d+)$")


class Resolution(click.ParamType):
    """Parse ``WxH`` (e.g. ``512x384``) into a ``(width, height)`` tuple."""

    name = "WxH"

    def convert(
        self,
        value: str | tuple[int, int],
        param: click.Parameter | None,
        ctx: click.Context | None,
    ) -> tuple[int, int]:
        if isinstance(value, tuple):
            return value
        match = _RESOLUTION_RE.match(value.strip())
        if match is None:
            self.fail(f"Cannot parse '{value}' as WxH", param, ctx)
        return int(match[1]), int(match[2])


def _configure_logging(level: int = logging.INFO) -> None:
    root = logging.getLogger("depth_zoo")
    root.handlers.clear()
    root.addHandler(
        RichHandler(
            show_path=False,
            rich_tracebacks=True,
            markup=True,
            log_time_format="[%H:%M:%S]",
        ),
    )
    root.setLevel(level)


class _PlainFormatter(logging.Formatter):
    """Logging formatter that strips Rich markup tags for plain-text output."""

    def format(self, record: logging.LogRecord) -> str:
        record.msg = Text.from_markup(str(record.msg)).plain
        return super().format(record)


def _configure_plain_logging(level: int = logging.INFO) -> None:
    root = logging.getLogger("depth_zoo")
    root.handlers.clear()
    handler = logging.StreamHandler()
    handler.setFormatter(
        _PlainFormatter("%(asctime)s | %(levelname)-7s | %(message)s"),
    )
    root.addHandler(handler)
    root.setLevel(level)


_configure_logging()

click.rich_click.USE_MARKDOWN = True
EVALUATE_CONTROLLER = EvaluateCliController()
SHAPES_CONTROLLER = shapes.ShapesCliController()
COMPARE_CONTROLLER = CompareCliController()

NO_COLOR = False

_STYLES: dict[str, dict[str, object]] = {
    "ok": {"fg": "green"},
    "info": {"fg": "cyan"},
    "error": {"fg": "red", "bold": True},
    "log": {"fg": "bright_black"},
}


@click.group()
@click.version_option(version=__version__, prog_name="depth-zoo")
@click.option(
    "--no-color",
    "no_color",
    is_flag=True,
    default=False,
    help="Disable colors and rich log formatting (for log-friendly output).",
)
@click.option(
    "-v",
    "--verbose",
    is_flag=True,
    default=False,
    help="Log debug messages (cache misses, catalog shadowing).",
)
def depth_zoo(no_color: bool, verbose: bool) -> None:
    """Monocular depth model zoo: evaluation, shape checks and comparison tables."""
    global NO_COLOR  # noqa: PLW0603
    NO_COLOR = no_color
    level = logging.DEBUG if verbose else logging.INFO
    if no_color:
        _configure_plain_logging(level)
    else:
        _configure_logging(level)


@depth_zoo.command("evaluate")
@click.argument("config_path", type=click.Path(path_type=Path, dir_okay=False))
@click.option(
    "--workers",
    type=click.IntRange(min=1),
    default=None,
    help="Samples scored concurrently (default: config, then env DEPTHZOO_WORKERS).",
)
@click.option(
    "--strict",
    is_flag=True,
    default=False,
    help="Fail on the first unusable or degenerate sample instead of recording it.",
)
@click.option(
    "--output-dir",
    "output_dir",
    type=click.Path(path_type=Path, file_okay=False),
    default=None,
    help="Directory for report.json, report.csv and report.txt.",
)
@click.option(
    "--degenerate",
    type=click.Choice(["fallback", "skip"], case_sensitive=False),
    default=None,
    help="Degenerate alignment: score with zero scale (`fallback`) or drop the sample.",
)
@click.option(
    "--resolution",
    default=None,
    help="Inference resolution policy, `square:384` or `height:384`.",
)
def evaluate(  # noqa: PLR0913
    config_path: Path,
    workers: int | None,
    strict: bool,
    output_dir: Path | None,
    degenerate: str | None,
    resolution: str | None,
) -> None:
    """Score predictions of every configured dataset and write the reports."""
    with _handle_errors():
        result = EVALUATE_CONTROLLER.run(
            EvaluateCommand(
                config_path=config_path,
                workers=workers,
                strict=strict,
                output_dir=output_dir,
                degenerate=degenerate.lower() if degenerate else None,  # type: ignore[arg-type]
                resolution=resolution,
            ),
        )
    _print_evaluation(result)


@depth_zoo.command("shapes")
@click.argument("name", required=False, default=None)
@click.argument("resolution", type=Resolution(), required=False, default=None)
@click.option(
    "--all",
    "sweep",
    is_flag=True,
    default=False,
    help="Check every registered backbone at its training resolution.",
)
@click.option(
    "--catalog",
    "catalogs",
    type=click.Path(path_type=Path),
    multiple=True,
    help="Extra catalog file or directory searched before the builtin one. Can be repeated.",
)
@click.option(
    "--json",
    "as_json",
    is_flag=True,
    default=False,
    help="Print the reports as JSON.",
)
def shapes_cmd(
    name: str | None,
    resolution: tuple[int, int] | None,
    sweep: bool,
    catalogs: tuple[Path, ...],
    as_json: bool,
) -> None:
    """Propagate tensor shapes through a backbone's hooks, adapters, decoder and head.

    NAME is a registered backbone; RESOLUTION defaults to its training resolution.
    """
    if name is None and not sweep and not catalogs:
        raise click.UsageError("Give a backbone NAME, --all or --catalog.")
    with _handle_errors():
        settings = Settings.from_env()
        result = SHAPES_CONTROLLER.run(
            shapes.ShapesCommand(
                names=(name,) if name else (),
                resolution=resolution,
                sweep=sweep,
                search_path=(*catalogs, *settings.catalog.search_path),
            ),
        )
    if as_json:
        click.echo(shapes.report_to_json(result))
    else:
        _print_shapes(result)
    if not result.ok:
        raise SystemExit(max(f.error.exit_code for f in result.failures))


@depth_zoo.command("compare")
@click.option(
    "--builtin",
    is_flag=True,
    default=False,
    help="Use the published records shipped with the package (the default).",
)
@click.option(
    "--records",
    "records_csv",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Evaluation-record CSV to compare instead of the builtin records.",
)
@click.option(
    "--reference",
    default=None,
    help="Reference model for the improvement column (default: env DEPTHZOO_REFERENCE).",
)
@click.option(
    "--table",
    type=click.IntRange(1, 2),
    default=None,
    help="Published table to reproduce: 1 (backbones) or 2 (ablations).",
)
@click.option(
    "--plot",
    "plot_path",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Write improvement-versus-FPS plot data to this CSV.",
)
@click.option(
    "--csv",
    "csv_path",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Write the comparison table to this CSV.",
)
@click.option(
    "--check",
    is_flag=True,
    default=False,
    help="Compare recomputed improvements with the printed ones; exit 2 on a mismatch.",
)
@click.option(
    "--first-stage",
    "first_stage",
    is_flag=True,
    default=False,
    help="Show the first-stage validation table instead.",
)
def compare(  # noqa: PLR0913
    builtin: bool,
    records_csv: Path | None,
    reference: str | None,
    table: int | None,
    plot_path: Path | None,
    csv_path: Path | None,
    check: bool,
    first_stage: bool,
) -> None:
    """Rank models by their six dataset errors and the relative improvement."""
    if builtin and records_csv is not None:
        raise click.UsageError("--builtin and --records are mutually exclusive.")
    with _handle_errors():
        settings = Settings.from_env()
        result = COMPARE_CONTROLLER.run(
            CompareCommand(
                records_csv=records_csv,
                reference=reference or settings.report.reference,
                table=table,
                plot_path=plot_path,
                csv_path=csv_path,
                check=check,
                first_stage=first_stage,
            ),
        )
    _print_compare(result)
    if check and result.check_failures:
        raise SystemExit(EXIT_VALIDATION)


@click.group("registry")
def registry_group() -> None:
    """Inspect the backbone catalog."""


depth_zoo.add_command(registry_group)


@registry_group.command("list")
def registry_list() -> None:
    """List registered backbones and where each is defined."""
    with _handle_errors():
        registry = _load_registry()
    table = Table(show_lines=False, pad_edge=False, box=None)
    for column in ("Name", "Family", "Trained at", "Hooks", "Released", "Source"):
        table.add_column(column, style="cyan" if column == "Name" and not NO_COLOR else None)
    for entry in registry.entries():
        d = entry.descriptor
        width, height = d.training_resolution
        table.add_row(
            d.name,
            d.family,
            f"{width}x{height}",
            ",".join(map(str, d.hook_positions)),
            "yes" if d.released else "no",
            entry.source,
        )
    _console().print(table)


@registry_group.command("show")
@click.argument("name")
def registry_show(name: str) -> None:
    """Print one backbone descriptor as a catalog TOML snippet."""
    with _handle_errors():
        registry = _load_registry()
        descriptor = registry.lookup(name)
        source = registry.source(name)
    click.echo(f"# source: {source}")
    click.echo(dump_catalog([descriptor]), nl=False)


@registry_group.command("check")
def registry_check() -> None:
    """Check descriptors and builtin records for consistency."""
    with _handle_errors():
        problems = _load_registry().check_consistency(
            builtin_eval_records(),
            builtin_first_stage_records(),
        )
    if not problems:
        _emit_styled("ok", "Registry is consistent.")
        return
    _emit_styled("error", f"{len(problems)} problem(s):")
    for problem in problems:
        _emit_styled("log", problem)
    raise SystemExit(EXIT_VALIDATION)


@contextlib.contextmanager
def _handle_errors() -> Iterator[None]:
    try:
        yield
    except DepthZooError as exc:
        _emit_styled("error", f"{type(exc).__name__}: {exc}")
        raise SystemExit(exc.exit_code) from exc


def _load_registry() -> Registry:
    return Registry.load(Settings.from_env().catalog.search_path)


def _console() -> Console:
    return Console(no_color=NO_COLOR, highlight=not NO_COLOR)


def _emit_lines(lines: list[str] | Iterator[str]) -> None:
    for line in lines:
        click.echo(line)


def _emit_styled(severity: str, text: str) -> None:
    """Print a single severity-tagged line, respecting ``NO_COLOR``."""
    display = f"  {text}" if severity == "log" else text
    if NO_COLOR:
        click.echo(display)
    else:
        style = _STYLES.get(severity, {})
        click.secho(display, **style)  # type: ignore[arg-type]


def _print_evaluation(result: EvaluationResult) -> None:
    report = result.report
    console = _console()
    console.print()
    heading = "[bold]Evaluation completed[/bold]" if not NO_COLOR else "Evaluation completed"
    console.print(f"  {heading}")
    console.print()

    def _row(label: str, value: object) -> None:
        padded = f"{label:<14}"
        styled = f"[cyan]{padded}[/cyan]" if not NO_COLOR else padded
        console.print(f"    {styled} {value}")

    _row("Resolution", report.resolution_policy or "as predicted")
    _row("Degenerate", report.degenerate_policy)
    _row("Reports", result.output_dir)
    if report.improvement is not None:
        _row(f"I vs {report.reference}", f"{report.improvement.improvement_percent:.2f}")
    if report.failure_count:
        count = report.failure_count
        _row("Failed", f"[yellow]{count}[/yellow]" if not NO_COLOR else count)
    console.print()
    _emit_lines(report_lines(report)[3:])


def _print_shapes(result: shapes.ShapesResult) -> None:
    for report in result.reports:
        _emit_lines(shapes.report_lines(report))
    for failure in result.failures:
        width, height = failure.resolution
        _emit_styled(
            "error",
            f"{failure.descriptor} at {width}x{height}: "
            f"{type(failure.error).__name__}: {failure.error}",
        )
    if result.reports and not result.failures:
        _emit_styled("ok", f"{len(result.reports)} backbone(s) wired correctly.")
    if result.cache.entries:
        _emit_styled(
            "log",
            f"position-index cache: {result.cache.entries} entries, "
            f"{result.cache.hits} hits, {result.cache.misses} misses",
        )


def _print_compare(result: CompareResult) -> None:
    console = _console()
    if result.first_stage:
        console.print(first_stage_rich_table(result.first_stage, styled=not NO_COLOR))
        return
    assert result.table is not None
    console.print(to_rich_table(result.table, styled=not NO_COLOR))
    if not result.deltas:
        return
    console.print()
    failing = {id(d) for d in result.check_failures}
    for d in result.deltas:
        line = (
            f"{d.model:<28} {d.mode:<13} recomputed {d.recomputed:8.2f}"
            f"  printed {d.printed:6.2f}  delta {d.delta:+.2f}"
        )
        if d.note:
            _emit_styled("log", f"{line}  ({d.note})")
        elif id(d) in failing:
            _emit_styled("error", line)
        else:
            _emit_styled("info", line)


if __name__ == "__main__":  # pragma: no cover
    depth_zoo()
