"""Inference-resolution policies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

GRANULARITY = 32

PolicyMode = Literal["square", "height"]


@dataclass(frozen=True, slots=True)
class ResolutionPolicy:
    """``square``: fixed S x S input. ``height``: fixed height, width follows the aspect ratio."""

    mode: PolicyMode
    size: int
    round_to_multiple: bool = True

    def __post_init__(self) -> None:
        if self.mode not in ("square", "height"):
            raise ValueError(f"unknown resolution mode {self.mode!r}")
        if self.size <= 0 or self.size % GRANULARITY:
            raise ValueError(f"resolution size must be a positive multiple of 32, got {self.size}")

    @classmethod
    def square(cls, side: int) -> ResolutionPolicy:
        return cls("square", side)

    @classmethod
    def unconstrained_height(cls, height: int) -> ResolutionPolicy:
        return cls("height", height)

    @classmethod
    def parse(cls, text: str) -> ResolutionPolicy:
        """Parse ``square:384`` or ``height:384``.

        >>> ResolutionPolicy.parse("height:384")
        ResolutionPolicy(mode='height', size=384, round_to_multiple=True)
        """
        mode, sep, size = text.strip().partition(":")
        if not sep or not size.strip().isdigit():
            raise ValueError(f"resolution policy must look like 'square:384', got {text!r}")
        return cls(mode.strip().lower(), int(size))  # type: ignore[arg-type]

    @property
    def is_square(self) -> bool:
        return self.mode == "square"

    def __str__(self) -> str:
        return f"{self.mode}:{self.size}"


def round_to_multiple(value: Fraction, multiple: int = GRANULARITY) -> int:
    """Nearest multiple of *multiple*, exact halves rounding up, never below *multiple*.

    >>> round_to_multiple(Fraction(48)), round_to_multiple(Fraction(47)), round_to_multiple(0)
    (64, 32, 32)
    """
    steps = math.floor(Fraction(value) / multiple + Fraction(1, 2))
    return max(steps, 1) * multiple


def compute_inference_resolution(
    native_w: int,
    native_h: int,
    policy: ResolutionPolicy,
) -> tuple[int, int]:
    """Return ``(width, height)`` the network sees for a native image size.

    >>> compute_inference_resolution(640, 480, ResolutionPolicy.unconstrained_height(384))
    (512, 384)
    >>> compute_inference_resolution(999, 777, ResolutionPolicy.square(384))
    (384, 384)
    """
    if native_w <= 0 or native_h <= 0:
        raise ValueError(f"native size must be positive, got {native_w}x{native_h}")
    if policy.is_square:
        return policy.size, policy.size
    scaled = Fraction(native_w * policy.size, native_h)
    if policy.round_to_multiple:
        return round_to_multiple(scaled), policy.size
    return max(math.floor(scaled + Fraction(1, 2)), 1), policy.size
