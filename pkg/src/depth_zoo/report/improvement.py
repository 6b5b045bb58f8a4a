"""Relative improvement of a model over a reference across the six datasets."""

from __future__ import annotations

import math

import msgspec

from depth_zoo.exceptions import MissingErrorValueError, MixedResolutionModeError
from depth_zoo.zoo.models import DATASETS, ModelEvalRecord, ResolutionMode


class ErrorSet(msgspec.Struct, frozen=True):
    """Six per-dataset errors of one model in one resolution mode."""

    model_name: str
    values: tuple[float | None, ...]
    mode: ResolutionMode = "square"

    @classmethod
    def from_record(cls, record: ModelEvalRecord, mode: ResolutionMode) -> ErrorSet:
        return cls(record.model_name, record.row(mode).values, mode)

    @property
    def complete(self) -> bool:
        return len(self.values) == len(DATASETS) and all(v is not None for v in self.values)


class ImprovementResult(msgspec.Struct, frozen=True):
    model_name: str
    reference_name: str
    improvement_percent: float
    per_dataset_ratios: tuple[float, ...]
    resolution_mode: ResolutionMode


def _checked(errors: ErrorSet) -> list[float]:
    if len(errors.values) != len(DATASETS):
        raise MissingErrorValueError(
            f"{errors.model_name}: expected {len(DATASETS)} errors, got {len(errors.values)}",
        )
    checked: list[float] = []
    for dataset, value in zip(DATASETS, errors.values, strict=True):
        if value is None:
            raise MissingErrorValueError(f"{errors.model_name}: no {errors.mode} {dataset} error")
        if not value > 0:
            raise MissingErrorValueError(
                f"{errors.model_name}: {errors.mode} {dataset} error must be > 0, got {value}",
            )
        checked.append(value)
    return checked


def relative_improvement(errors: ErrorSet, reference: ErrorSet) -> ImprovementResult:
    """``100 * (1 - mean(errors / reference))`` over the six datasets.

    >>> ref = ErrorSet("ref", (0.2, 0.1, 0.4, 10.0, 8.0, 12.0))
    >>> half = ErrorSet("half", (0.1, 0.05, 0.2, 5.0, 4.0, 6.0))
    >>> relative_improvement(half, ref).improvement_percent
    50.0
    """
    if errors.mode != reference.mode:
        raise MixedResolutionModeError(
            f"{errors.model_name} ({errors.mode}) cannot be compared with "
            f"{reference.model_name} ({reference.mode})",
        )
    ratios = tuple(
        e / r for e, r in zip(_checked(errors), _checked(reference), strict=True)
    )
    improvement = 100.0 * (1.0 - math.fsum(ratios) / len(ratios))
    return ImprovementResult(
        model_name=errors.model_name,
        reference_name=reference.model_name,
        improvement_percent=improvement,
        per_dataset_ratios=ratios,
        resolution_mode=errors.mode,
    )


def printed_decimals(printed: str) -> int:
    """Decimal places of a printed number.

    >>> printed_decimals("33.0"), printed_decimals("-6"), printed_decimals("")
    (1, 0, 1)
    """
    if not printed:
        return 1
    _, dot, fraction = printed.partition(".")
    return len(fraction) if dot else 0


def format_improvement(value: float, printed: str = "") -> str:
    """Format *value* with the precision the published column used for this row.

    The recomputed *value* is rounded half-to-even to ``printed_decimals(printed)``
    places; *printed* only sets the precision and is never copied. The display can
    therefore differ from the published cell: BEiT512-L square recomputes to 36.58
    from the rounded table errors and shows "37" where 36 was printed. Such gaps stay
    within the 0.6 tolerance of ``compare --check``. Negative zero shows as "0".

    >>> format_improvement(36.58, "36"), format_improvement(32.96, "33.0")
    ('37', '33.0')
    """
    text = f"{value:.{printed_decimals(printed)}f}"
    return text.lstrip("-") if float(text) == 0 else text
