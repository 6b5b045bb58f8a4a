from __future__ import annotations

import allure
import msgspec
import pytest

from depth_zoo.exceptions import (
    IndivisibleByStemError,
    NotMultipleOf32Error,
    ShapeMismatchError,
    SquareResolutionRequiredError,
)
from depth_zoo.shapecheck.engine import (
    DECODER_CHANNELS,
    propagate,
    stage_grids,
    validate_resolution,
)
from depth_zoo.shapecheck.shapes import (
    DownsampleBy,
    DropClassToken,
    ProjectChannels,
    Spatial,
    Tokens,
    Transpose,
    Unflatten,
    UpsampleBy,
    run_chain,
)
from depth_zoo.zoo.registry import builtin_registry

pytestmark = [
    allure.epic("Shape Checking"),
    allure.feature("Propagation"),
]


def _descriptor(name: str):
    return builtin_registry().lookup(name)


def test_every_builtin_backbone_at_training_resolution() -> None:
    for d in builtin_registry().descriptors():
        width, height = d.training_resolution
        report = propagate(d, width, height)
        assert report.output_resolution == (width, height), d.name
        assert report.output_channels == 1
        assert all(s.channels == DECODER_CHANNELS for s in report.decoder_stage_shapes)


def test_plain_tokens_double_per_stage() -> None:
    report = propagate(_descriptor("BEiT384-L"), 384, 384)
    assert report.hook_shapes == [Tokens(577, 1024)] * 4
    assert [s.grid for s in report.decoder_stage_shapes] == [
        (96, 96),
        (48, 48),
        (24, 24),
        (12, 12),
    ]
    assert report.adapter_chains[0] == [
        DropClassToken(),
        Transpose(),
        Unflatten(24, 24),
        ProjectChannels(1024, 256),
        UpsampleBy(4),
    ]
    assert report.adapter_chains[3][-1] == DownsampleBy(2)


def test_levit_grids_round_up() -> None:
    d = _descriptor("LeViT-224")
    assert stage_grids(d, 224, 224) == [(14, 14), (7, 7), (4, 4)]
    report = propagate(d, 224, 224)
    assert report.stem_output == Spatial(14, 14, 128)
    assert report.hook_shapes == [Tokens(196, 384), Tokens(49, 512), Tokens(16, 768)]
    assert report.head_trace[-1] == Spatial(224, 224, 1)


def test_next_vit_handles_non_square_input() -> None:
    report = propagate(_descriptor("Next-ViT-L-1K-6M"), 416, 384)
    assert report.hook_shapes[0] == Spatial(96, 104, 96)
    assert report.hook_shapes[3] == Spatial(12, 13, 1024)
    assert report.adapter_chains == [[], [], [], []]
    assert report.output_resolution == (416, 384)


@pytest.mark.parametrize("resolution", [(512, 384), (1280, 384)])
def test_plain_tokens_at_unconstrained_resolutions(resolution) -> None:
    report = propagate(_descriptor("BEiT384-L"), *resolution)
    assert report.output_resolution == resolution


def test_swin_rejects_non_square() -> None:
    with pytest.raises(SquareResolutionRequiredError):
        propagate(_descriptor("Swin-L"), 512, 384)


def test_resolution_divisibility() -> None:
    with pytest.raises(NotMultipleOf32Error):
        propagate(_descriptor("BEiT384-L"), 400, 400)
    with pytest.raises(NotMultipleOf32Error):
        propagate(_descriptor("LeViT-224"), 232, 232)
    coarse = msgspec.structs.replace(_descriptor("BEiT384-L"), resolution_multiple=64)
    with pytest.raises(IndivisibleByStemError):
        validate_resolution(coarse, 416, 416)
    validate_resolution(coarse, 448, 384)
    with pytest.raises(NotMultipleOf32Error):
        propagate(_descriptor("Next-ViT-L-1K-6M"), 0, 384)


def test_reversed_hooks_change_only_metadata() -> None:
    plain = propagate(_descriptor("ViT-L"), 384, 384)
    reversed_ = propagate(_descriptor("ViT-L-Reversed"), 384, 384)
    assert reversed_.hook_positions == (23, 17, 11, 5)
    assert (
        msgspec.structs.replace(
            reversed_,
            descriptor=plain.descriptor,
            hook_positions=plain.hook_positions,
        )
        == plain
    )


def test_wrong_adapter_width_is_reported_with_its_step() -> None:
    d = _descriptor("BEiT384-L")
    broken = msgspec.structs.replace(d, stage_channels=(768,) * 4)
    with pytest.raises(ShapeMismatchError) as info:
        run_chain(Tokens(577, 1024), [ProjectChannels(768, 256)], "adapter[0]")
    assert info.value.stage == "adapter[0]"
    assert info.value.step == 0
    assert info.value.op == "ProjectChannels(768->256)"
    assert propagate(broken, 384, 384).hook_shapes[0] == Tokens(577, 768)


def test_head_must_end_at_input_resolution() -> None:
    d = _descriptor("Next-ViT-L-1K-6M")
    extra = msgspec.structs.replace(d.head, deconv_channels=(128,))
    with pytest.raises(ShapeMismatchError, match="head step"):
        propagate(msgspec.structs.replace(d, head=extra), 384, 384)


def test_report_json_is_tagged() -> None:
    report = propagate(_descriptor("Swin-L"), 384, 384)
    payload = msgspec.json.decode(msgspec.json.encode(report))
    assert payload["hook_shapes"][0] == {"kind": "Tokens", "count": 9216, "embed_dim": 192}
    assert payload["adapter_chains"][0][1] == {"op": "Unflatten", "height": 96, "width": 96}
