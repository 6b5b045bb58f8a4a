"""Exception hierarchy shared by all depth-zoo modules.

Every library error derives from `DepthZooError` and carries the CLI exit code
it maps to: 1 for unreadable or malformed inputs, 2 for validation failures.
"""

from __future__ import annotations

EXIT_IO = 1
EXIT_VALIDATION = 2


class DepthZooError(Exception):
    """Base class for all depth-zoo errors."""

    exit_code: int = EXIT_VALIDATION


class DepthZooInputError(DepthZooError):
    """An input file is missing, unreadable or malformed."""

    exit_code = EXIT_IO


class DepthZooValidationError(DepthZooError):
    """Inputs were read but violate a domain rule."""

    exit_code = EXIT_VALIDATION


# --- input errors ---------------------------------------------------------


class RasterFormatError(DepthZooInputError):
    """Malformed raster header, dimension overflow or unsupported pixel mode."""


class RasterReadError(DepthZooInputError):
    """Raster file could not be read."""


class ManifestError(DepthZooInputError):
    """Sample manifest is unreadable or inconsistent."""


class CatalogError(DepthZooInputError):
    """Backbone catalog file is unreadable or does not match the schema."""


class RecordsFileError(DepthZooInputError):
    """Evaluation-record or ordinal-pair CSV is unreadable or malformed."""


class ConfigFileError(DepthZooInputError):
    """Run config file is missing or is not valid TOML."""


# --- validation errors ----------------------------------------------------


class ConfigError(DepthZooValidationError):
    """Run configuration or environment settings are invalid."""


class DegenerateSystemError(DepthZooValidationError):
    """Alignment normal equations are singular (constant prediction or < 2 pixels)."""


class EmptyOverlapError(DepthZooValidationError):
    """Prediction and ground truth share no jointly valid pixel."""


class EmptyPairsError(DepthZooValidationError):
    """Ordinal pair set is empty or has zero total weight."""


class OutOfBoundsError(DepthZooValidationError):
    """An ordinal pair endpoint lies outside the map or on a masked pixel."""


class ThresholdRequiredError(DepthZooValidationError):
    """WHDR needs an explicit tau because the pair set holds Equal annotations."""


class DescriptorInvalidError(DepthZooValidationError):
    """A backbone descriptor violates its invariants."""


class UnknownDescriptorError(DepthZooValidationError):
    """No descriptor with the requested name is registered."""


class SquareResolutionRequiredError(DepthZooValidationError):
    """The backbone accepts square inference resolutions only."""


class NotMultipleOf32Error(DepthZooValidationError):
    """Inference resolution is not a positive multiple of 32."""


class IndivisibleByStemError(DepthZooValidationError):
    """Inference resolution is not divisible by the backbone's stem or grid requirement."""


class ShapeMismatchError(DepthZooValidationError):
    """An adapter, fusion or head step received a tensor it cannot consume."""

    def __init__(self, stage: str, step: int, op: str, message: str) -> None:
        super().__init__(f"{stage} step {step} ({op}): {message}")
        self.stage = stage
        self.step = step
        self.op = op


class MissingErrorValueError(DepthZooValidationError):
    """One of the six per-dataset errors is absent or not positive."""


class MixedResolutionModeError(DepthZooValidationError):
    """Errors and reference errors come from different resolution modes."""


class ReferenceMissingError(DepthZooValidationError):
    """The reference model is absent or lacks a complete square-resolution row."""


class SampleFailuresError(DepthZooValidationError):
    """A strict evaluation run met unusable samples."""
