"""CLI tests: exit codes, output and report files for every subcommand."""

from __future__ import annotations

import json
from collections.abc import Iterator
from pathlib import Path

import allure
import pytest
from click.testing import CliRunner

from depth_zoo import main
from depth_zoo.main import depth_zoo

pytestmark = [
    allure.epic("CLI"),
    allure.feature("Commands & Exit Codes"),
]

TINY = """
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


@pytest.fixture(autouse=True)
def _restore_logging() -> Iterator[None]:
    yield
    main.NO_COLOR = False
    main._configure_logging()


def _run(*args: str):
    return CliRunner().invoke(depth_zoo, ["--no-color", *args], env={"COLUMNS": "240"})


def test_version() -> None:
    result = CliRunner().invoke(depth_zoo, ["--version"])
    assert result.exit_code == 0
    assert "depth-zoo" in result.output


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------


def test_shapes_at_training_resolution() -> None:
    result = _run("shapes", "BEiT512-L", "512x512")
    assert result.exit_code == 0, result.output
    assert "BEiT512-L (PlainTokens) at 512x512" in result.output
    assert "output     512x512x1" in result.output


def test_shapes_square_only_backbone_rejects_non_square() -> None:
    result = _run("shapes", "Swin-L", "512x384")
    assert result.exit_code == 2
    assert "SquareResolutionRequiredError" in result.output


def test_shapes_sweep() -> None:
    result = _run("shapes", "--all")
    assert result.exit_code == 0, result.output
    assert "backbone(s) wired correctly" in result.output


def test_shapes_json() -> None:
    result = CliRunner().invoke(depth_zoo, ["shapes", "LeViT-224", "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["failures"] == []
    assert payload["reports"][0]["output_resolution"] == [224, 224]


def test_shapes_usage_errors() -> None:
    assert _run("shapes").exit_code == 2
    assert _run("shapes", "BEiT384-L", "384by384").exit_code == 2
    unknown = _run("shapes", "Nope")
    assert unknown.exit_code == 2
    assert "UnknownDescriptorError" in unknown.output


def test_shapes_catalog_only(tmp_path: Path) -> None:
    catalog = tmp_path / "tiny.toml"
    catalog.write_text(TINY)
    result = _run("shapes", "--catalog", str(catalog))
    assert result.exit_code == 0, result.output
    assert "Tiny-ViT (PlainTokens) at 256x256" in result.output
    assert "BEiT" not in result.output


def test_shapes_unreadable_catalog_is_an_io_error(tmp_path: Path) -> None:
    catalog = tmp_path / "broken.toml"
    catalog.write_text("[[backbone]]\nname = 3\n")
    result = _run("shapes", "--catalog", str(catalog))
    assert result.exit_code == 1
    assert "CatalogError" in result.output


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def test_compare_builtin_check() -> None:
    result = _run("compare", "--builtin", "--check")
    assert result.exit_code == 0, result.output
    assert "BEiT512-L" in result.output
    assert "recomputed" in result.output


def test_compare_table_two_check() -> None:
    result = _run("compare", "--table", "2", "--check")
    assert result.exit_code == 0, result.output
    assert "MobileViTv2-0.5" in result.output


def test_compare_writes_plot_and_table(tmp_path: Path) -> None:
    plot = tmp_path / "plot.csv"
    table = tmp_path / "table.csv"
    result = _run("compare", "--builtin", "--plot", str(plot), "--csv", str(table))
    assert result.exit_code == 0, result.output
    assert len(plot.read_text().splitlines()) == 15
    assert table.read_text().startswith("section,model,data_mix,params,fps,")


def test_compare_check_fails_on_misprinted_improvement(tmp_path: Path) -> None:
    records = tmp_path / "records.csv"
    header = (
        "model,data_mix,params,fps,u_DIW,u_ETH3D,u_Sintel,u_KITTI,u_NYU,u_TUM,u_I,"
        "s_DIW,s_ETH3D,s_Sintel,s_KITTI,s_NYU,s_TUM,s_I\n"
    )
    row = "Mine,3+10,10,30,-,-,-,-,-,-,-,0.112,0.091,0.286,9.173,8.557,10.16,12\n"
    records.write_text(header + row)
    result = _run("compare", "--records", str(records), "--check")
    assert result.exit_code == 2
    assert "Mine" in result.output


def test_compare_unknown_reference() -> None:
    result = _run("compare", "--reference", "Nope")
    assert result.exit_code == 2
    assert "ReferenceMissingError" in result.output


def test_compare_missing_records_file(tmp_path: Path) -> None:
    result = _run("compare", "--records", str(tmp_path / "none.csv"))
    assert result.exit_code == 1


def test_compare_first_stage() -> None:
    result = _run("compare", "--first-stage")
    assert result.exit_code == 0
    assert "**0.068**" in result.output
    assert "EfficientNet-L2" in result.output


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def test_registry_list_includes_env_catalog(
    monkeypatch: pytest.MonkeyPatch,
    tmp_path: Path,
) -> None:
    (tmp_path / "tiny.toml").write_text(TINY)
    monkeypatch.setenv("DEPTHZOO_CATALOG", str(tmp_path))
    result = _run("registry", "list")
    assert result.exit_code == 0, result.output
    assert "Tiny-ViT" in result.output
    assert "<builtin>" in result.output


def test_registry_show() -> None:
    result = _run("registry", "show", "LeViT-224")
    assert result.exit_code == 0
    assert result.output.startswith("# source: <builtin>")
    assert 'name = "LeViT-224"' in result.output


def test_registry_show_unknown() -> None:
    assert _run("registry", "show", "Nope").exit_code == 2


def test_registry_check() -> None:
    result = _run("registry", "check")
    assert result.exit_code == 0, result.output
    assert "consistent" in result.output


def test_registry_check_reports_problems(
    monkeypatch: pytest.MonkeyPatch,
    tmp_path: Path,
) -> None:
    (tmp_path / "bad.toml").write_text(TINY.replace("[2, 5, 8, 11]", "[2, 5, 8, 40]"))
    monkeypatch.setenv("DEPTHZOO_CATALOG", str(tmp_path))
    result = _run("registry", "check")
    assert result.exit_code == 2
    assert "Tiny-ViT: Absolute hooks must be < num_blocks (12)" in result.output


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _config(tmp_path: Path, manifest: Path, extra: str = "") -> Path:
    path = tmp_path / "run.toml"
    path.write_text(f"{extra}[[dataset]]\nmanifest = '{manifest}'\n")
    return path


def test_evaluate_writes_reports(synthetic_dataset, tmp_path: Path) -> None:
    config = _config(tmp_path, synthetic_dataset("NYU", "BadPixDelta1", 3))
    out = tmp_path / "out"
    result = _run("evaluate", str(config), "--output-dir", str(out))
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["datasets"][0]["dataset_name"] == "NYU"
    assert report["datasets"][0]["value"] == 0.0
    assert report["improvement"] is None
    assert (out / "report.csv").read_text().splitlines()[1].startswith("NYU,BadPixDelta1,0.0,")
    assert "NYU" in (out / "report.txt").read_text()


def test_evaluate_reports_do_not_depend_on_workers(synthetic_dataset, tmp_path: Path) -> None:
    config = _config(tmp_path, synthetic_dataset("KITTI", "BadPixDelta1", 60, noise=0.3))
    outputs = []
    for workers in ("1", "4", "16"):
        out = tmp_path / f"out-{workers}"
        result = _run("evaluate", str(config), "--workers", workers, "--output-dir", str(out))
        assert result.exit_code == 0, result.output
        outputs.append(tuple((out / n).read_bytes() for n in ("report.json", "report.csv")))
    assert outputs[0] == outputs[1] == outputs[2]


def test_evaluate_strict_fails_on_degenerate_sample(synthetic_dataset, tmp_path: Path) -> None:
    config = _config(tmp_path, synthetic_dataset("NYU", "REL", 3, constant=(1,)))
    result = _run("evaluate", str(config), "--strict", "--output-dir", str(tmp_path / "o"))
    assert result.exit_code == 2
    assert "SampleFailuresError" in result.output
    assert not (tmp_path / "o" / "report.json").exists()


def test_evaluate_skip_policy_from_flag(synthetic_dataset, tmp_path: Path) -> None:
    config = _config(tmp_path, synthetic_dataset("NYU", "REL", 3, constant=(1,)))
    out = tmp_path / "out"
    result = _run("evaluate", str(config), "--degenerate", "skip", "--output-dir", str(out))
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["degenerate_policy"] == "skip"
    assert report["datasets"][0]["skipped"] == [1]


def test_evaluate_missing_config(tmp_path: Path) -> None:
    result = _run("evaluate", str(tmp_path / "absent.toml"))
    assert result.exit_code == 1
    assert "ConfigFileError" in result.output


def test_evaluate_bad_resolution_flag(synthetic_dataset, tmp_path: Path) -> None:
    config = _config(tmp_path, synthetic_dataset("NYU", "REL", 1))
    assert _run("evaluate", str(config), "--resolution", "square:100").exit_code == 2
