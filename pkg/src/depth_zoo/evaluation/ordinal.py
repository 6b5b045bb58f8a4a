"""Ordinal point-pair annotations (DIW style) and their CSV loader.

CSV columns: ``ax, ay, bx, by, relation, weight`` with relation one of
``A`` (A is closer), ``B`` (B is closer) or ``E`` (equal depth).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from depth_zoo.exceptions import EmptyPairsError, RecordsFileError

CSV_COLUMNS = ("ax", "ay", "bx", "by", "relation", "weight")


class Relation(IntEnum):
    """Annotated ordering; the value is the sign of ``disparity(A) - disparity(B)``."""

    A_CLOSER = 1
    EQUAL = 0
    B_CLOSER = -1

    @classmethod
    def parse(cls, text: str) -> Relation:
        """
        >>> Relation.parse("a"), Relation.parse("E")
        (<Relation.A_CLOSER: 1>, <Relation.EQUAL: 0>)
        """
        try:
            return _RELATION_CODES[text.strip().upper()]
        except KeyError:
            raise ValueError(f"relation must be A, B or E, got {text!r}") from None

    @property
    def code(self) -> str:
        return {1: "A", 0: "E", -1: "B"}[self.value]


_RELATION_CODES = {"A": Relation.A_CLOSER, "B": Relation.B_CLOSER, "E": Relation.EQUAL}


@dataclass(frozen=True, slots=True)
class OrdinalPair:
    ax: int
    ay: int
    bx: int
    by: int
    relation: Relation
    weight: float = 1.0


@dataclass(frozen=True, slots=True)
class OrdinalPairSet:
    """Column-wise pair storage; construct through `from_pairs`."""

    a_xy: NDArray[np.intp]
    b_xy: NDArray[np.intp]
    relations: NDArray[np.int8]
    weights: NDArray[np.float64]

    @classmethod
    def from_pairs(cls, pairs: list[OrdinalPair]) -> OrdinalPairSet:
        if not pairs:
            raise EmptyPairsError("ordinal pair set is empty")
        weights = np.array([p.weight for p in pairs], dtype=np.float64)
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("pair weights must be finite and non-negative")
        if np.sum(weights) <= 0:
            raise EmptyPairsError("ordinal pair weights sum to zero")
        return cls(
            a_xy=np.array([(p.ax, p.ay) for p in pairs], dtype=np.intp),
            b_xy=np.array([(p.bx, p.by) for p in pairs], dtype=np.intp),
            relations=np.array([int(p.relation) for p in pairs], dtype=np.int8),
            weights=weights,
        )

    def __len__(self) -> int:
        return int(self.weights.size)

    @property
    def has_equal(self) -> bool:
        return bool(np.any(self.relations == Relation.EQUAL))


def load_ordinal_pairs(path: Path) -> OrdinalPairSet:
    """Load pairs from a CSV with columns: ax,ay,bx,by,relation,weight."""
    pairs: list[OrdinalPair] = []
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise RecordsFileError(f"{path}: missing columns {sorted(missing)}")
            for line_no, row in enumerate(reader, start=2):
                try:
                    pairs.append(
                        OrdinalPair(
                            ax=int(row["ax"]),
                            ay=int(row["ay"]),
                            bx=int(row["bx"]),
                            by=int(row["by"]),
                            relation=Relation.parse(row["relation"]),
                            weight=float(row["weight"]) if row["weight"] else 1.0,
                        ),
                    )
                except ValueError as exc:
                    raise RecordsFileError(f"{path}:{line_no}: {exc}") from exc
    except OSError as exc:
        raise RecordsFileError(f"{path}: {exc.strerror or exc}") from exc
    return OrdinalPairSet.from_pairs(pairs)


def write_ordinal_pairs(path: Path, pairs: list[OrdinalPair]) -> None:
    """Write *pairs* in the loader's CSV layout."""
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for p in pairs:
            writer.writerow((p.ax, p.ay, p.bx, p.by, p.relation.code, repr(p.weight)))
