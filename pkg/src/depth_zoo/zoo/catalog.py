"""TOML backbone catalogs and the descriptor search path.

A catalog is a TOML document of ``[[backbone]]`` tables (see ``docs/src/en/catalog.md``).
The search path is: explicit paths (``--catalog``), then ``DEPTHZOO_CATALOG`` entries,
then the builtin catalog. A directory entry contributes its ``*.toml`` files in name
order. The first descriptor seen for a name wins.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

import msgspec

from depth_zoo.exceptions import CatalogError
from depth_zoo.zoo.models import BackboneDescriptor, Catalog
from depth_zoo.zoo.records import builtin_data

logger = logging.getLogger(__name__)

BUILTIN_SOURCE = "<builtin>"
BUILTIN_CATALOG = "backbones.toml"


def parse_catalog(text: str | bytes, source: str = "<string>") -> list[BackboneDescriptor]:
    """Decode catalog *text* into descriptors."""
    try:
        return msgspec.toml.decode(text, type=Catalog).backbone
    except msgspec.DecodeError as exc:
        raise CatalogError(f"{source}: {exc}") from exc


def dump_catalog(descriptors: Iterable[BackboneDescriptor]) -> str:
    """Encode *descriptors* as catalog TOML; `parse_catalog` reads it back unchanged."""
    return msgspec.toml.encode(Catalog(backbone=list(descriptors))).decode("utf-8")


def load_catalog_file(path: Path) -> list[BackboneDescriptor]:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CatalogError(f"{path}: {exc.strerror or exc}") from exc
    return parse_catalog(data, str(path))


def load_builtin_catalog() -> list[BackboneDescriptor]:
    return parse_catalog(builtin_data(BUILTIN_CATALOG).read_bytes(), BUILTIN_SOURCE)


@dataclass(frozen=True, slots=True)
class CatalogEntry:
    descriptor: BackboneDescriptor
    source: str


def _expand(entry: Path) -> Iterator[Path]:
    if entry.is_dir():
        yield from sorted(entry.glob("*.toml"))
    elif entry.exists():
        yield entry
    else:
        raise CatalogError(f"{entry}: catalog path does not exist")


def resolve_catalog(search_path: Iterable[Path] = ()) -> dict[str, CatalogEntry]:
    """Merge user catalogs and the builtin catalog; earlier entries shadow later ones."""
    merged: dict[str, CatalogEntry] = {}

    def _add(descriptors: list[BackboneDescriptor], source: str) -> None:
        for descriptor in descriptors:
            if descriptor.name in merged:
                logger.debug(
                    "Descriptor %s from %s shadowed by %s",
                    descriptor.name,
                    source,
                    merged[descriptor.name].source,
                )
                continue
            merged[descriptor.name] = CatalogEntry(descriptor, source)

    for entry in search_path:
        for file in _expand(entry):
            _add(load_catalog_file(file), str(file))
    _add(load_builtin_catalog(), BUILTIN_SOURCE)
    return merged
