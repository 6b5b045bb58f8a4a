"""Controller for the ``shapes`` CLI command."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import msgspec

from depth_zoo.exceptions import DepthZooError
from depth_zoo.shapecheck.cache import CacheStats, ResolutionCache, cache_stats
from depth_zoo.shapecheck.engine import ShapeReport, propagate
from depth_zoo.zoo.catalog import BUILTIN_SOURCE
from depth_zoo.zoo.registry import Registry, validate_descriptor

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class ShapesCommand:
    """CLI inputs for the shapes command.

    Without *names*, *sweep* checks every registered descriptor; otherwise the
    descriptors defined in *search_path* are checked.
    A missing *resolution* means each descriptor's training resolution.
    """

    names: tuple[str, ...] = ()
    resolution: tuple[int, int] | None = None
    sweep: bool = False
    search_path: tuple[Path, ...] = ()


@dataclass(slots=True)
class ShapeFailure:
    descriptor: str
    resolution: tuple[int, int]
    error: DepthZooError


@dataclass(slots=True)
class ShapesResult:
    reports: list[ShapeReport] = field(default_factory=list)
    failures: list[ShapeFailure] = field(default_factory=list)
    cache: CacheStats = CacheStats(0, 0, 0)

    @property
    def ok(self) -> bool:
        return not self.failures


class ShapesCliController:
    """Resolves descriptors and propagates shapes through a shared cache."""

    def __init__(self) -> None:
        self.cache = ResolutionCache()

    def run(self, command: ShapesCommand) -> ShapesResult:
        registry = Registry.load(command.search_path)
        names = command.names or _default_names(registry, command)
        result = ShapesResult()
        for name in names:
            descriptor = registry.lookup(name)
            width, height = command.resolution or descriptor.training_resolution
            try:
                report = propagate(validate_descriptor(descriptor), width, height, self.cache)
            except DepthZooError as exc:
                logger.debug("Shape check failed for %s at %dx%d: %s", name, width, height, exc)
                result.failures.append(ShapeFailure(name, (width, height), exc))
                continue
            result.reports.append(report)
        result.cache = cache_stats(self.cache)
        return result


def _default_names(registry: Registry, command: ShapesCommand) -> tuple[str, ...]:
    if command.sweep:
        return tuple(registry.names())
    return tuple(e.descriptor.name for e in registry.entries() if e.source != BUILTIN_SOURCE)


def report_to_json(result: ShapesResult) -> str:
    payload = {
        "reports": result.reports,
        "failures": [
            {
                "descriptor": f.descriptor,
                "resolution": f.resolution,
                "error": type(f.error).__name__,
                "message": str(f.error),
            }
            for f in result.failures
        ],
        "cache": result.cache._asdict(),
    }
    return msgspec.json.format(msgspec.json.encode(payload), indent=2).decode("utf-8")


def report_lines(report: ShapeReport) -> list[str]:
    """Structured text rendering of one report."""
    width, height = report.input_resolution
    lines = [
        f"{report.descriptor} ({report.family}) at {width}x{height}",
        f"  hooks      {', '.join(map(str, report.hook_positions))}",
        f"  stem       {report.stem_output}",
    ]
    for level, (hook, chain, stage) in enumerate(
        zip(report.hook_shapes, report.adapter_chains, report.decoder_stage_shapes, strict=True),
    ):
        ops = " -> ".join(map(str, chain)) or "identity"
        lines.append(f"  stage {level + 1}    {hook} | {ops} | {stage}")
    lines.append(f"  fusion     {' -> '.join(map(str, report.fusion_ops))}")
    lines.append(f"  head       {' -> '.join(map(str, report.head_trace))}")
    out_w, out_h = report.output_resolution
    lines.append(f"  output     {out_w}x{out_h}x{report.output_channels}")
    if report.position_index_size:
        lines.append(
            f"  pos-index  {report.position_index_size} entries"
            f" ({'miss' if report.cache_misses else 'hit'})",
        )
    return lines
