"""Runtime configuration: environment settings and TOML run configs."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import msgspec

from depth_zoo.depthio.resolution import ResolutionPolicy
from depth_zoo.exceptions import ConfigError, ConfigFileError

logger = logging.getLogger(__name__)

DegeneratePolicy = Literal["fallback", "skip"]

DEFAULT_OUTPUT_DIR = "depth-zoo-report"


@dataclass(slots=True)
class EvaluationSettings:
    """Defaults for evaluation runs."""

    workers: int = 4
    eps: float = 1e-8
    degenerate: DegeneratePolicy = "fallback"


@dataclass(slots=True)
class CatalogSettings:
    """Extra catalog files or directories searched before the builtin catalog."""

    search_path: tuple[Path, ...] = ()


@dataclass(slots=True)
class ReportSettings:
    reference: str = "ViT-L"


@dataclass(slots=True)
class Settings:
    """Application settings grouped by concern."""

    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    catalog: CatalogSettings = field(default_factory=CatalogSettings)
    report: ReportSettings = field(default_factory=ReportSettings)

    @classmethod
    def from_env(cls) -> Settings:
        """Load settings from ``DEPTHZOO_*`` variables."""
        degenerate = os.getenv("DEPTHZOO_DEGENERATE", "fallback").strip().lower()
        settings = cls(
            evaluation=EvaluationSettings(
                workers=_env_number("DEPTHZOO_WORKERS", "4", int),
                eps=_env_number("DEPTHZOO_EPS", "1e-8", float),
                degenerate=degenerate,  # type: ignore[arg-type]
            ),
            catalog=CatalogSettings(search_path=_collect_catalog_paths()),
            report=ReportSettings(reference=os.getenv("DEPTHZOO_REFERENCE", "ViT-L").strip()),
        )
        settings.validate()
        return settings

    def validate(self) -> None:
        """Fail fast on invalid settings, naming the variable to fix."""
        if self.evaluation.workers < 1:
            raise ConfigError("DEPTHZOO_WORKERS must be >= 1.")
        if not self.evaluation.eps > 0:
            raise ConfigError("DEPTHZOO_EPS must be > 0.")
        if self.evaluation.degenerate not in ("fallback", "skip"):
            raise ConfigError("DEPTHZOO_DEGENERATE must be 'fallback' or 'skip'.")
        if not self.report.reference:
            raise ConfigError("DEPTHZOO_REFERENCE must not be empty.")


def _env_number[N: (int, float)](name: str, default: str, kind: type[N]) -> N:
    raw = os.getenv(name, default).strip()
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a {kind.__name__}, got {raw!r}.") from None


def _collect_catalog_paths() -> tuple[Path, ...]:
    raw = os.getenv("DEPTHZOO_CATALOG", "")
    return tuple(Path(p).expanduser() for p in raw.split(os.pathsep) if p.strip())


class DatasetEntry(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    """One ``[[dataset]]`` table of a run config."""

    manifest: str
    depth_cap: float | None = None
    clamp_scale: bool | None = None


class RunConfig(msgspec.Struct, forbid_unknown_fields=True, omit_defaults=True):
    """Evaluation run read from TOML. Unset values fall back to `Settings`."""

    dataset: list[DatasetEntry]
    resolution: str | None = None
    clamp_scale: bool | None = None
    degenerate: DegeneratePolicy | None = None
    eps: float | None = None
    workers: int | None = None
    output_dir: str = DEFAULT_OUTPUT_DIR
    reference: str | None = None

    def policy(self) -> ResolutionPolicy | None:
        if self.resolution is None:
            return None
        try:
            return ResolutionPolicy.parse(self.resolution)
        except ValueError as exc:
            raise ConfigError(f"resolution: {exc}") from exc

    def validate(self) -> None:
        if not self.dataset:
            raise ConfigError("run config needs at least one [[dataset]] table")
        for entry in self.dataset:
            if entry.depth_cap is not None and entry.depth_cap <= 0:
                raise ConfigError(f"{entry.manifest}: depth_cap must be > 0")
        if self.eps is not None and not self.eps > 0:
            raise ConfigError("eps must be > 0")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.policy()


def load_run_config(path: Path) -> RunConfig:
    """Decode the TOML run config at *path*; relative paths resolve against its directory."""
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigFileError(f"{path}: {exc.strerror or exc}") from exc
    try:
        config = msgspec.toml.decode(raw, type=RunConfig)
    except msgspec.DecodeError as exc:
        raise ConfigFileError(f"{path}: {exc}") from exc

    base = path.parent
    config = msgspec.structs.replace(
        config,
        dataset=[
            msgspec.structs.replace(entry, manifest=str(base / entry.manifest))
            for entry in config.dataset
        ],
        output_dir=str(base / config.output_dir),
    )
    config.validate()
    return config
