import re
import shutil
import sys
from contextlib import contextmanager
from pathlib import Path

from invoke import Collection, Context, task

ABOUT_PATH = Path("src/depth_zoo/__about__.py")
DOCS_PATH = Path("docs")
DOCS_SRC_PATH = DOCS_PATH / "src" / "en"
VERSION_PARTS = {"release": 0, "feature": 1, "bug": 2}
_VERSION_RE = re.compile(r'__version__\s*=\s*"(\d+)\.(\d+)\.(\d+)"')


def _read_version() -> tuple[int, int, int]:
    match = _VERSION_RE.search(ABOUT_PATH.read_text())
    if match is None:
        raise SystemExit(f"No __version__ in {ABOUT_PATH}")
    return int(match[1]), int(match[2]), int(match[3])


@task
def version(_c: Context):
    """Show the current version."""
    current = ".".join(map(str, _read_version()))
    print(current)
    return current


def ver_task_factory(part: str):
    @task
    def ver(c: Context):
        """Bump the version, commit and tag it."""
        if c.run("git status --porcelain", hide=True).stdout.strip():
            raise SystemExit("Commit all changes before setting a version tag")
        numbers = list(_read_version())
        index = VERSION_PARTS[part]
        numbers[index] += 1
        numbers[index + 1 :] = [0] * (2 - index)
        new_version = ".".join(map(str, numbers))
        ABOUT_PATH.write_text(
            _VERSION_RE.sub(f'__version__ = "{new_version}"', ABOUT_PATH.read_text()),
        )
        c.run(f"git commit -am 'Version v{new_version}'")
        c.run(f"git tag v{new_version} -m 'Version v{new_version}'")

    return ver


@task
def reqs(c: Context):
    """Upgrade requirements including pre-commit."""
    c.run("pre-commit autoupdate")
    c.run("uv lock --upgrade")


@task
def check_builtin(c: Context):
    """Cross-check the shipped catalog, records and published improvements."""
    c.run("depth-zoo --no-color registry check")
    c.run("depth-zoo --no-color shapes --all")
    c.run("depth-zoo --no-color compare --table 1 --check")
    c.run("depth-zoo --no-color compare --table 2 --check")


@contextmanager
def docs_rendered():
    """Copy docs sources and config into build/docs; yield the config copy path."""
    build_docs_path = Path("build") / "docs"
    build_config_path = build_docs_path / "mkdocs.yml"
    build_docs_path.mkdir(parents=True, exist_ok=True)
    shutil.copy(DOCS_PATH / "mkdocs.yml", build_config_path)
    shutil.rmtree(build_docs_path / "src", ignore_errors=True)
    shutil.copytree(DOCS_SRC_PATH, build_docs_path / "src")
    yield build_config_path


@task
def docs(c: Context):
    """Docs preview."""
    with docs_rendered() as config_copy_path:
        c.run(f"zensical serve --config-file {config_copy_path} --dev-addr localhost:8001")


@task
def build_docs(c: Context):
    """Build docs in site/."""
    with docs_rendered() as config_copy_path:
        c.run(f"zensical build --config-file {config_copy_path}")


@task
def pre(c):
    """Run pre-commit checks"""
    c.run("pre-commit run --verbose --all-files")


namespace = Collection.from_module(sys.modules[__name__])
for part in VERSION_PARTS:
    ver_task = ver_task_factory(part)
    namespace.add_task(ver_task, name=f"ver-{part}")  # type: ignore[bad-argument-type]
