from __future__ import annotations

from pathlib import Path

import allure
import msgspec
import pytest

from depth_zoo.exceptions import CatalogError, DescriptorInvalidError, UnknownDescriptorError
from depth_zoo.zoo.catalog import BUILTIN_SOURCE, dump_catalog, parse_catalog
from depth_zoo.zoo.registry import (
    Registry,
    ablation_variants,
    builtin_descriptors,
    builtin_eval_records,
    builtin_first_stage_records,
    builtin_registry,
    descriptor_problems,
    validate_descriptor,
)

pytestmark = [
    allure.epic("Model Zoo"),
    allure.feature("Registry"),
]

CUSTOM = """
[[backbone]]
name = "Tiny-ViT"
family = "PlainTokens"
training_resolution = [256, 256]
stem = { kind = "PatchEmbed", output_scale = 16, patch_size = 16 }
num_stages = 4
num_blocks = 12
hook_positions = [2, 5, 8, 11]
hook_addressing = "Absolute"
stage_channels = [192, 192, 192, 192]
adapter_channels = [48, 96, 192, 192]
"""


def test_builtin_registry_is_consistent() -> None:
    problems = builtin_registry().check_consistency(
        builtin_eval_records(),
        builtin_first_stage_records(),
    )
    assert problems == []


def test_every_builtin_descriptor_is_valid() -> None:
    for descriptor in builtin_registry().descriptors():
        assert validate_descriptor(descriptor) is descriptor


def test_ablation_variants_point_at_their_base() -> None:
    registry = builtin_registry()
    variants = {d.name: d.base for d in ablation_variants()}
    assert variants == {
        "ViT-L-Reversed": "ViT-L",
        "Swin-L-Equidistant": "Swin-L",
        "BEiT384-L-Wide": "BEiT384-L",
    }
    assert all(base in registry for base in variants.values())
    assert not set(variants) & {d.name for d in builtin_descriptors()}


def test_reversed_hooks_mirror_the_base() -> None:
    registry = builtin_registry()
    reversed_hooks = registry.lookup("ViT-L-Reversed").hook_positions
    assert reversed_hooks == tuple(reversed(registry.lookup("ViT-L").hook_positions))


def test_reversed_hooks_need_the_reversed_flag() -> None:
    reversed_vit = builtin_registry().lookup("ViT-L-Reversed")
    validate_descriptor(reversed_vit)
    unflagged = msgspec.structs.replace(reversed_vit, hooks_reversed=False)
    assert "Absolute hooks must be strictly increasing" in descriptor_problems(unflagged)
    with pytest.raises(DescriptorInvalidError, match="ViT-L-Reversed"):
        validate_descriptor(unflagged)


def test_reversed_flag_rejects_increasing_hooks() -> None:
    flagged = msgspec.structs.replace(builtin_registry().lookup("ViT-L"), hooks_reversed=True)
    assert "reversed Absolute hooks must be strictly decreasing" in descriptor_problems(flagged)


def test_unknown_name() -> None:
    with pytest.raises(UnknownDescriptorError, match="Nope"):
        builtin_registry().lookup("Nope")


def test_user_catalog_shadows_builtin(tmp_path: Path) -> None:
    shadow = CUSTOM.replace("Tiny-ViT", "ViT-L")
    (tmp_path / "a.toml").write_text(CUSTOM)
    (tmp_path / "b.toml").write_text(shadow)
    registry = Registry.load([tmp_path])
    assert registry.lookup("Tiny-ViT").num_blocks == 12
    assert registry.lookup("ViT-L").training_resolution == (256, 256)
    assert registry.source("ViT-L") == str(tmp_path / "b.toml")
    assert registry.source("BEiT384-L") == BUILTIN_SOURCE


def test_missing_catalog_path(tmp_path: Path) -> None:
    with pytest.raises(CatalogError, match="does not exist"):
        Registry.load([tmp_path / "absent.toml"])


def test_schema_violations_are_catalog_errors() -> None:
    with pytest.raises(CatalogError):
        parse_catalog(CUSTOM.replace('"PlainTokens"', '"Recurrent"'))
    with pytest.raises(CatalogError):
        parse_catalog(CUSTOM + "colour = 3\n")


def test_dump_parses_back_unchanged() -> None:
    descriptors = builtin_registry().descriptors()
    assert parse_catalog(dump_catalog(descriptors)) == descriptors


@pytest.mark.parametrize(
    ("change", "problem"),
    [
        ({"hook_positions": (2, 5, 8)}, "hook_positions has 3 entries"),
        ({"hook_positions": (5, 2, 8, 11)}, "strictly increasing"),
        ({"hook_positions": (2, 5, 8, 12)}, "< num_blocks"),
        ({"stage_channels": (192, 192, 384, 192)}, "one embedding width"),
        ({"num_stages": 5}, "3 or 4"),
    ],
)
def test_descriptor_invariants(change: dict, problem: str) -> None:
    base = parse_catalog(CUSTOM)[0]
    broken = msgspec.structs.replace(base, **change)
    assert any(problem in p for p in descriptor_problems(broken))
    with pytest.raises(DescriptorInvalidError, match="Tiny-ViT"):
        validate_descriptor(broken)


def test_bad_patch_stem() -> None:
    base = parse_catalog(CUSTOM)[0]
    broken = msgspec.structs.replace(
        base, stem=msgspec.structs.replace(base.stem, output_scale=8)
    )
    assert descriptor_problems(broken) == ["PatchEmbed output_scale 8 != patch_size 16"]


def test_consistency_flags_unknown_descriptors_and_zero_shot() -> None:
    registry = Registry.load()
    record = builtin_eval_records()[0]
    bad_flags = msgspec.structs.replace(
        record.square,
        zero_shot=(True,) * 6,
    )
    broken = msgspec.structs.replace(record, descriptor="Ghost", square=bad_flags)
    problems = registry.check_consistency([broken])
    assert "BEiT512-L [5+12]: unknown descriptor 'Ghost'" in problems
    assert "BEiT512-L [5+12]: square KITTI should be non-zero-shot" in problems
