from __future__ import annotations

from fractions import Fraction

import allure
import pytest

from depth_zoo.depthio.resolution import (
    ResolutionPolicy,
    compute_inference_resolution,
    round_to_multiple,
)

pytestmark = [
    allure.epic("Depth I/O"),
    allure.feature("Inference Resolution"),
]


@pytest.mark.parametrize(
    ("native", "height", "expected"),
    [
        ((640, 480), 384, (512, 384)),
        ((1242, 375), 384, (1280, 384)),
        ((1024, 436), 384, (896, 384)),
        ((480, 640), 384, (288, 384)),
    ],
)
def test_unconstrained_height_keeps_aspect(native, height, expected) -> None:
    policy = ResolutionPolicy.unconstrained_height(height)
    assert compute_inference_resolution(*native, policy) == expected


def test_square_ignores_native_size() -> None:
    assert compute_inference_resolution(1242, 375, ResolutionPolicy.square(512)) == (512, 512)


def test_exact_half_rounds_up() -> None:
    assert round_to_multiple(Fraction(80)) == 96
    assert round_to_multiple(Fraction(79)) == 64


def test_width_never_drops_below_one_step() -> None:
    assert compute_inference_resolution(10, 1000, ResolutionPolicy.unconstrained_height(384)) == (
        32,
        384,
    )


def test_rounding_can_be_disabled() -> None:
    policy = ResolutionPolicy("height", 384, round_to_multiple=False)
    assert compute_inference_resolution(1242, 375, policy) == (1272, 384)


@pytest.mark.parametrize("text", ["square", "square:100", "cube:384", "height:-32"])
def test_bad_policies(text: str) -> None:
    with pytest.raises(ValueError):
        ResolutionPolicy.parse(text)


def test_policy_text_round_trip() -> None:
    assert str(ResolutionPolicy.parse(" Square:512 ")) == "square:512"


def test_rounded_sizes_are_multiples_of_32(rng) -> None:
    for _ in range(1000):
        native_w, native_h = (int(v) for v in rng.integers(1, 4000, size=2))
        size = 32 * int(rng.integers(1, 40))
        if rng.random() < 0.5:
            policy = ResolutionPolicy.square(size)
        else:
            policy = ResolutionPolicy.unconstrained_height(size)
        width, height = compute_inference_resolution(native_w, native_h, policy)
        assert width % 32 == 0
        assert height % 32 == 0
        assert width >= 32
        assert height == size
        if not policy.is_square and width > 32:
            assert abs(Fraction(width) - Fraction(native_w * size, native_h)) <= 16
