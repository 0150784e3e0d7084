"""The pinned experiment corpus and its runners.

The standard corpus is a committed JSON data file enumerating seeded
(grid, collection, weight) and (grid, collection, symbol) instances; every
instance materializes deterministically from its stored parameters, so
results are reproducible from the package alone.  ``build_standard_corpus`` regenerates
the document programmatically and the test suite asserts byte equality with
the committed file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib.resources import files

import numpy as np

from .checks import (CheckReport, check_ainf_vs_a2, check_block_bracket_lower,
                     check_block_bracket_upper, check_block_conjugation,
                     check_block_norm_equality, check_commutator_identity,
                     check_commutator_vs_block, check_decay,
                     check_mixed_bound, check_norm_lower, check_norm_upper,
                     check_reverse_holder, check_scalar_lower)
from .collection import SparseCollection, gen_collection
from .commutators import CommutatorReport, commutator_report, gen_symbol
from .config import (DENSE_CAP, POWER_MAXITER, POWER_RESTARTS, TOL_CHECK,
                     TOL_NORM)
from .errors import InvalidInputError
from .grid import GridSpec
from .operators import sparse_op, weighted_norm
from .weights import (MatrixField, MatrixWeight, WeightConstants, gen_weight,
                      weight_constants)

__all__ = [
    "WeightInstance", "SymbolInstance", "Corpus", "build_standard_corpus",
    "load_standard_corpus", "corpus_from_dict", "WeightRun", "SymbolRun",
    "run_weight_instance", "run_symbol_instance", "SharpnessReport",
    "sharpness_sweep", "DimensionRow", "dimension_sweep",
]

_CORPUS_TAG = "sparse-lab/corpus@1"


@dataclass(frozen=True)
class WeightInstance:
    id: str
    dimension: int
    depth: int
    collection_kind: str
    collection_seed: int
    n: int
    weight_kind: str
    weight_seed: int
    weight_params: dict

    def grid(self) -> GridSpec:
        return GridSpec(self.dimension, self.depth)

    def make_collection(self) -> SparseCollection:
        return gen_collection(self.grid(), self.collection_kind,
                              seed=self.collection_seed)

    def make_weight(self) -> MatrixWeight:
        return gen_weight(self.grid(), self.n, self.weight_kind,
                          seed=self.weight_seed, **self.weight_params)

    def materialize(self) -> tuple[SparseCollection, MatrixWeight]:
        return self.make_collection(), self.make_weight()


@dataclass(frozen=True)
class SymbolInstance:
    id: str
    dimension: int
    depth: int
    collection_kind: str
    collection_seed: int
    n: int
    symbol_kind: str
    symbol_seed: int
    symbol_params: dict

    def grid(self) -> GridSpec:
        return GridSpec(self.dimension, self.depth)

    def make_collection(self) -> SparseCollection:
        return gen_collection(self.grid(), self.collection_kind,
                              seed=self.collection_seed)

    def make_symbol(self) -> MatrixField:
        return gen_symbol(self.grid(), self.n, self.symbol_kind,
                          seed=self.symbol_seed, **self.symbol_params)

    def materialize(self) -> tuple[SparseCollection, MatrixField]:
        return self.make_collection(), self.make_symbol()


@dataclass(frozen=True)
class Corpus:
    weights: tuple[WeightInstance, ...]
    symbols: tuple[SymbolInstance, ...]


# -- the pinned composition ----------------------------------------------------

_WEIGHT_MENU = (
    ("flat", 1, "constant", 0, {"value": 2.0}),
    ("pow03", 1, "power", 0, {"alpha": 0.3}),
    ("pow06", 1, "power", 0, {"alpha": 0.6}),
    ("pow09", 1, "power", 0, {"alpha": 0.9}),
    ("logsym1", 1, "random_logsym", 11, {"spread": 0.8}),
    ("rot2d", 2, "rotating2d", 0, {"alpha": 0.6, "speed": 1.0}),
    ("diag2", 2, "diag", 0, {"components": [
        {"kind": "power", "alpha": 0.3},
        {"kind": "power", "alpha": 0.7, "center": 1.0},
    ]}),
    ("logsym2", 2, "random_logsym", 12, {"spread": 0.8}),
    ("diag4", 4, "diag", 0, {"components": [
        {"kind": "constant", "value": 3.0},
        {"kind": "power", "alpha": 0.4},
        {"kind": "power", "alpha": 0.8, "center": 1.0},
        {"kind": "random_logsym", "spread": 0.8, "seed": 47},
    ]}),
    ("logsym4", 4, "random_logsym", 13, {"spread": 0.8}),
)

_WEIGHT_COLLECTIONS = (("chain", 0), ("maximal", 0), ("random", 1),
                       ("random", 2))
_WEIGHT_DEPTHS = (6, 8, 10)

_SYMBOL_MENU = (
    ("gauss1", 1, "gauss", 31, {"spread": 0.5}),
    ("step1", 1, "stepdiag", 0, {"left": [0.0], "right": [1.0]}),
    ("gauss2", 2, "gauss", 32, {"spread": 0.5}),
    ("nilp2", 2, "constant", 0, {"value": [[0.0, 1.0], [0.0, 0.0]]}),
    ("gauss4", 4, "gauss", 33, {"spread": 0.35}),
)

_SYMBOL_COLLECTIONS = (("chain", 0), ("maximal", 0), ("random", 21))
_SYMBOL_DEPTHS = (6, 8)


def build_standard_corpus() -> dict:
    """The corpus document, regenerated from the pinned menus."""
    weights = []
    for depth in _WEIGHT_DEPTHS:
        for ckind, cseed in _WEIGHT_COLLECTIONS:
            for tag, n, wkind, wseed, params in _WEIGHT_MENU:
                weights.append({
                    "id": f"L{depth}-{ckind}{cseed}-{tag}",
                    "dimension": 1, "depth": depth,
                    "collection": {"kind": ckind, "seed": cseed},
                    "n": n,
                    "weight": {"kind": wkind, "seed": wseed,
                               "params": params},
                })
    symbols = []
    for depth in _SYMBOL_DEPTHS:
        for ckind, cseed in _SYMBOL_COLLECTIONS:
            for tag, n, skind, sseed, params in _SYMBOL_MENU:
                symbols.append({
                    "id": f"L{depth}-{ckind}{cseed}-{tag}",
                    "dimension": 1, "depth": depth,
                    "collection": {"kind": ckind, "seed": cseed},
                    "n": n,
                    "symbol": {"kind": skind, "seed": sseed,
                               "params": params},
                })
    return {"format": _CORPUS_TAG, "weights": weights, "symbols": symbols}


def corpus_from_dict(doc: dict) -> Corpus:
    if doc.get("format") != _CORPUS_TAG:
        raise InvalidInputError(
            f"expected format {_CORPUS_TAG!r}, found {doc.get('format')!r}")
    weights = tuple(
        WeightInstance(
            id=row["id"], dimension=int(row["dimension"]),
            depth=int(row["depth"]),
            collection_kind=row["collection"]["kind"],
            collection_seed=int(row["collection"]["seed"]),
            n=int(row["n"]), weight_kind=row["weight"]["kind"],
            weight_seed=int(row["weight"]["seed"]),
            weight_params=dict(row["weight"]["params"]))
        for row in doc["weights"])
    symbols = tuple(
        SymbolInstance(
            id=row["id"], dimension=int(row["dimension"]),
            depth=int(row["depth"]),
            collection_kind=row["collection"]["kind"],
            collection_seed=int(row["collection"]["seed"]),
            n=int(row["n"]), symbol_kind=row["symbol"]["kind"],
            symbol_seed=int(row["symbol"]["seed"]),
            symbol_params=dict(row["symbol"]["params"]))
        for row in doc["symbols"])
    return Corpus(weights=weights, symbols=symbols)


def load_standard_corpus() -> Corpus:
    import json
    text = files("sparse_lab").joinpath("data/standard_corpus.json").read_text()
    return corpus_from_dict(json.loads(text))


# -- runners -------------------------------------------------------------------


@dataclass(frozen=True)
class WeightRun:
    instance: WeightInstance
    norm: float
    constants: WeightConstants
    checks: tuple[CheckReport, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def run_weight_instance(inst: WeightInstance, *, tol: float = TOL_CHECK,
                        norm_tol: float = TOL_NORM,
                        maxiter: int = POWER_MAXITER,
                        restarts: int = POWER_RESTARTS, directions: int = 64,
                        seed: int = 0) -> WeightRun:
    """Materialize one corpus instance, measure the sparse-operator norm and
    the weight constants, and run the standard check battery."""
    coll, weight = inst.materialize()
    norm = weighted_norm(sparse_op(coll, weight.n), weight, tol=norm_tol,
                         maxiter=maxiter, restarts=restarts, seed=seed)
    consts = weight_constants(weight, coll.cubes, directions=directions,
                              seed=seed)
    dig = inst.id
    reports = [
        check_norm_upper(coll, weight, norm=norm, a2=consts.a2, tol=tol,
                         digest=dig),
        check_norm_lower(coll, weight, norm=norm, a2=consts.a2, tol=tol,
                         digest=dig),
        check_decay(coll, digest=dig),
        check_mixed_bound(coll, weight, norm=norm, a2_tree=consts.a2_tree,
                          ainf=consts.ainf, ainf_dual=consts.ainf_dual,
                          ainf_exact=consts.ainf_exact, tol=tol, digest=dig),
    ]
    if weight.n == 1:
        reports.insert(2, check_scalar_lower(coll, weight, norm=norm,
                                             a2=consts.a2, tol=tol,
                                             digest=dig))
        reports.append(check_ainf_vs_a2(weight, digest=dig))
        reports.append(check_reverse_holder(weight, tol=tol, digest=dig))
    return WeightRun(instance=inst, norm=norm, constants=consts,
                     checks=tuple(reports))


@dataclass(frozen=True)
class SymbolRun:
    instance: SymbolInstance
    report: CommutatorReport
    checks: tuple[CheckReport, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def run_symbol_instance(inst: SymbolInstance, *, tol: float = TOL_CHECK,
                        norm_tol: float = TOL_NORM,
                        maxiter: int = POWER_MAXITER,
                        restarts: int = POWER_RESTARTS, seed: int = 0,
                        dense_cap: int = DENSE_CAP) -> SymbolRun:
    """Materialize one symbol instance and run the commutator chain checks."""
    coll, symbol = inst.materialize()
    rep = commutator_report(coll, symbol, tol=norm_tol, maxiter=maxiter,
                            restarts=restarts, seed=seed, dense_cap=dense_cap)
    dig = inst.id
    reports = (
        check_commutator_identity(rep, digest=dig),
        check_block_conjugation(rep, digest=dig),
        check_commutator_vs_block(rep, tol=tol, digest=dig),
        check_block_bracket_lower(rep, tol=tol, digest=dig),
        check_block_bracket_upper(rep, tol=tol, digest=dig),
        check_block_norm_equality(rep, digest=dig),
    )
    return SymbolRun(instance=inst, report=rep, checks=reports)


# -- parameter sweeps ----------------------------------------------------------


@dataclass(frozen=True)
class SharpnessReport:
    """Fitted growth exponent of ||T_S|| against the a2 characteristic along
    a family of increasingly singular scalar power weights."""

    alphas: tuple[float, ...]
    a2_values: tuple[float, ...]
    norms: tuple[float, ...]
    exponent: float
    intercept: float
    degenerate: bool

    def in_corridor(self, lo: float = 0.2, hi: float = 1.55) -> bool:
        return (not self.degenerate) and lo <= self.exponent <= hi


def sharpness_sweep(depth: int = 10,
                    alphas: tuple[float, ...] = (0.5, 0.7, 0.8, 0.9, 0.95), *,
                    collection_kind: str = "leftchain", collection_seed: int = 0,
                    norm_tol: float = TOL_NORM, seed: int = 0) -> SharpnessReport:
    """Norm growth along power weights |x|^alpha, alpha -> 1^- (d = 1).

    The collection is, by default, the chain into the singularity at the
    origin — the family adapted to the weight, so the norm actually feels the
    blow-up.  Fits log ||T_S|| = p log a2 + c by least squares; the fit is
    flagged degenerate when the a2 values span less than a factor 2 (the
    exponent is then meaningless).
    """
    if len(alphas) < 2:
        raise InvalidInputError("sharpness sweep needs at least two alphas")
    grid = GridSpec(1, depth)
    coll = gen_collection(grid, collection_kind, seed=collection_seed)
    a2s, norms = [], []
    for alpha in alphas:
        weight = gen_weight(grid, 1, "power", alpha=float(alpha))
        a2, _ = weight.a2_constant(coll.cubes)
        norm = weighted_norm(sparse_op(coll, 1), weight, tol=norm_tol,
                             seed=seed)
        a2s.append(a2)
        norms.append(norm)
    logs_a2 = np.log(a2s)
    logs_nm = np.log(norms)
    spread = float(logs_a2.max() - logs_a2.min())
    degenerate = (not np.isfinite(logs_a2).all()
                  or not np.isfinite(logs_nm).all()
                  or spread < math.log(2.0))
    if degenerate:
        exponent, intercept = float("nan"), float("nan")
    else:
        exponent, intercept = (float(v) for v in
                               np.polyfit(logs_a2, logs_nm, 1))
    return SharpnessReport(alphas=tuple(float(a) for a in alphas),
                           a2_values=tuple(float(v) for v in a2s),
                           norms=tuple(float(v) for v in norms),
                           exponent=exponent, intercept=intercept,
                           degenerate=degenerate)


@dataclass(frozen=True)
class DimensionRow:
    n: int
    a2: float
    a2_tree: float
    ainf: float
    ainf_dual: float
    norm: float
    lower: float
    upper: float


def dimension_sweep(depth: int = 6, ns: tuple[int, ...] = (1, 2, 4, 8), *,
                    base_kind: str = "power", base_params: dict | None = None,
                    base_seed: int = 0, collection_kind: str = "maximal",
                    collection_seed: int = 0, norm_tol: float = TOL_NORM,
                    seed: int = 0) -> tuple[DimensionRow, ...]:
    """Embed one scalar weight as w * I_n for each n and measure the constants
    and the sparse-operator norm.  All columns are n-independent in exact
    arithmetic; the sweep makes that measurable.
    """
    if base_params is None:
        base_params = {"alpha": 0.6}
    grid = GridSpec(1, depth)
    coll = gen_collection(grid, collection_kind, seed=collection_seed)
    scalar = gen_weight(grid, 1, base_kind, seed=base_seed, **base_params)
    w = scalar.values[:, 0, 0]
    rows = []
    for n in ns:
        values = w[:, None, None] * np.eye(n)[None, :, :]
        weight = MatrixWeight(grid, values, eig_floor=0.0)
        consts = weight_constants(weight, coll.cubes, directions=8, seed=seed)
        norm = weighted_norm(sparse_op(coll, n), weight, tol=norm_tol,
                             seed=seed)
        rows.append(DimensionRow(n=n, a2=consts.a2, a2_tree=consts.a2_tree,
                                 ainf=consts.ainf, ainf_dual=consts.ainf_dual,
                                 norm=norm,
                                 lower=consts.a2 ** 0.25 / math.sqrt(2.0),
                                 upper=64.0 * consts.a2 ** 1.5))
    return tuple(rows)
