from pathlib import Path

import allure
import msgspec
import pytest

from depth_zoo.storage.io import atomic_output, atomic_write_text, save_msgspec

pytestmark = [
    allure.epic("Storage"),
    allure.feature("Atomic Writes"),
]


class _Point(msgspec.Struct):
    x: int
    label: str


def test_atomic_write_creates_parent_dirs(tmp_path: Path) -> None:
    target = tmp_path / "a" / "b" / "report.txt"
    atomic_write_text(target, "one\ntwo\n")
    assert target.read_text() == "one\ntwo\n"
    assert [p.name for p in target.parent.iterdir()] == ["report.txt"]


def test_failed_write_keeps_previous_content(tmp_path: Path) -> None:
    target = tmp_path / "report.json"
    target.write_text("old")
    with pytest.raises(RuntimeError), atomic_output(target) as handle:
        handle.write(b"half")
        raise RuntimeError("boom")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_save_msgspec_is_indented_with_trailing_newline(tmp_path: Path) -> None:
    target = tmp_path / "point.json"
    save_msgspec(target, _Point(3, "a"))
    assert target.read_text() == '{\n  "x": 3,\n  "label": "a"\n}\n'
