"""Deterministic on-disk formats.

Everything is JSON with sorted keys and shortest round-trip floats, so saving
the same object twice produces identical bytes (no timestamps, no hostnames).
Cell data is stored in Morton order, matching the in-memory layout.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .checks import CheckReport
from .collection import SparseCollection
from .commutators import CommutatorReport
from .config import EIG_FLOOR
from .errors import InvalidInputError
from .grid import GridSpec, format_cube, parse_cube
from .operators import CotlarReport
from .weights import MatrixField, MatrixWeight

__all__ = [
    "dumps", "save_collection", "load_collection", "save_weight",
    "load_weight", "save_symbol", "load_symbol", "checks_to_dict",
    "checks_to_csv", "cotlar_to_dict", "commutator_to_dict", "save_json",
    "load_json",
]

_COLLECTION_TAG = "sparse-lab/collection@1"
_WEIGHT_TAG = "sparse-lab/weight@1"
_SYMBOL_TAG = "sparse-lab/symbol@1"
_CHECKS_TAG = "sparse-lab/checks@1"


def dumps(obj, *, compact: bool = False) -> str:
    """Canonical JSON text: sorted keys, no NaN/Inf, trailing newline."""
    if compact:
        return json.dumps(obj, sort_keys=True, allow_nan=False,
                          separators=(",", ":")) + "\n"
    return json.dumps(obj, sort_keys=True, allow_nan=False, indent=2) + "\n"


def save_json(path: str | Path, obj, *, compact: bool = False) -> None:
    Path(path).write_text(dumps(obj, compact=compact))


def load_json(path: str | Path):
    return json.loads(Path(path).read_text())


def _grid_header(grid: GridSpec) -> dict:
    return {"dimension": grid.dimension, "depth": grid.depth}


def _grid_from_header(doc: dict) -> GridSpec:
    return GridSpec(int(doc["dimension"]), int(doc["depth"]))


def _expect_tag(doc: dict, tag: str) -> None:
    if doc.get("format") != tag:
        raise InvalidInputError(
            f"expected format {tag!r}, found {doc.get('format')!r}")


# -- sparse collections --------------------------------------------------------


def save_collection(path: str | Path, collection: SparseCollection) -> None:
    doc = {
        "format": _COLLECTION_TAG,
        "grid": _grid_header(collection.grid),
        "cubes": [format_cube(q) for q in collection.cubes],
    }
    save_json(path, doc)


def load_collection(path: str | Path) -> SparseCollection:
    doc = load_json(path)
    _expect_tag(doc, _COLLECTION_TAG)
    grid = _grid_from_header(doc["grid"])
    return SparseCollection(grid, [parse_cube(s) for s in doc["cubes"]])


# -- matrix fields -------------------------------------------------------------


def _save_field(path: str | Path, tag: str, grid: GridSpec,
                values: np.ndarray) -> None:
    doc = {
        "format": tag,
        "grid": _grid_header(grid),
        "n": int(values.shape[1]),
        "order": "morton",
        "cells": np.asarray(values, dtype=float).tolist(),
    }
    save_json(path, doc, compact=True)


def _load_cells(doc: dict) -> tuple[GridSpec, np.ndarray]:
    grid = _grid_from_header(doc["grid"])
    n = int(doc["n"])
    cells = np.array(doc["cells"], dtype=float)
    if cells.shape != (grid.n_cells, n, n):
        raise InvalidInputError(
            f"cell data shaped {cells.shape}, expected {(grid.n_cells, n, n)}")
    return grid, cells


def save_weight(path: str | Path, weight: MatrixWeight) -> None:
    _save_field(path, _WEIGHT_TAG, weight.grid, weight.values)


def load_weight(path: str | Path, *, eig_floor: float = EIG_FLOOR) -> MatrixWeight:
    doc = load_json(path)
    _expect_tag(doc, _WEIGHT_TAG)
    grid, cells = _load_cells(doc)
    return MatrixWeight(grid, cells, eig_floor=eig_floor)


def save_symbol(path: str | Path, symbol: MatrixField) -> None:
    _save_field(path, _SYMBOL_TAG, symbol.grid, symbol.values)


def load_symbol(path: str | Path) -> MatrixField:
    doc = load_json(path)
    _expect_tag(doc, _SYMBOL_TAG)
    grid, cells = _load_cells(doc)
    return MatrixField(grid, cells)


# -- reports -------------------------------------------------------------------


def checks_to_dict(reports: Sequence[CheckReport], *, config_digest: str = "") -> dict:
    return {
        "format": _CHECKS_TAG,
        "config": config_digest,
        "passed": all(r.passed for r in reports),
        "checks": [asdict(r) for r in reports],
    }


def checks_to_csv(reports: Iterable[CheckReport], *,
                  config_digest: str = "") -> str:
    buf = io.StringIO()
    if config_digest:
        buf.write(f"# config {config_digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "digest", "lhs", "rhs", "margin", "passed",
                     "notes"])
    for r in reports:
        writer.writerow([r.name, r.digest, repr(r.lhs), repr(r.rhs),
                         repr(r.margin), int(r.passed), r.notes])
    return buf.getvalue()


def cotlar_to_dict(report: CotlarReport) -> dict:
    doc = asdict(report)
    doc["pairs"] = [asdict(p) for p in report.pairs]
    doc["case1_table"] = report.case1_table()
    alpha, beta = report.case2_tables()
    doc["case2_alpha"] = alpha
    doc["case2_beta"] = beta
    return doc


def commutator_to_dict(report: CommutatorReport) -> dict:
    doc = asdict(report)
    doc["sbmo_witness"] = format_cube(report.sbmo_witness)
    doc["wb_a2_witness"] = format_cube(report.wb_a2_witness)
    return doc
