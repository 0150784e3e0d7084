"""Executable inequality checks.

Every check returns a :class:`CheckReport` with the measured left/right hand
sides; ``passed`` means ``lhs <= rhs * (1 + tol)`` for inequality checks and
``relative gap <= tol`` for equality checks (there ``lhs`` is the gap and
``rhs`` the tolerance).  Exact rational facts (the generation decay) are
decided in exact arithmetic and merely reported as floats.

Failing checks never raise: callers (CLI, corpus sweeps, the acceptance
suite) decide what a failure means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .collection import SparseCollection
from .commutators import CommutatorReport
from .config import TOL_CHECK
from .decomposition import decompose
from .errors import InvalidInputError
from .grid import CubeId, common_grid, pyramid_sums_np
from .operators import (CotlarReport, averaging_norm_exact, averaging_op,
                        case1_pair_bound, cotlar_series_bound,
                        mixed_bound_constant, sparse_op, weighted_norm)
from .weights import MatrixWeight, scalar_ainf, vector_ainf_estimate

__all__ = [
    "CheckReport", "check_norm_upper", "check_norm_lower",
    "check_scalar_lower", "check_decay", "check_ainf_vs_a2",
    "check_reverse_holder", "check_portion_preserving", "check_small_portion",
    "check_mixed_bound", "check_cotlar_bound", "check_cotlar_case1",
    "check_averaging_identity", "check_commutator_identity",
    "check_block_conjugation", "check_commutator_vs_block",
    "check_block_bracket_lower", "check_block_bracket_upper",
    "check_block_norm_equality", "run_weight_checks",
]

_TINY = 1e-300


@dataclass(frozen=True)
class CheckReport:
    name: str
    digest: str
    lhs: float
    rhs: float
    margin: float          # (rhs - lhs) / max(|rhs|, tiny)
    passed: bool
    notes: str = ""

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (f"{state} {self.name} [{self.digest}] lhs={self.lhs:.6e} "
                f"rhs={self.rhs:.6e} margin={self.margin:+.3e} {self.notes}")


def _ineq(name: str, digest: str, lhs: float, rhs: float, tol: float,
          notes: str = "", passed: bool | None = None) -> CheckReport:
    if passed is None:
        passed = lhs <= rhs * (1.0 + tol)
    margin = (rhs - lhs) / max(abs(rhs), _TINY)
    return CheckReport(name, digest, float(lhs), float(rhs), float(margin),
                       bool(passed), notes)


def _equality(name: str, digest: str, value: float, target: float,
              tol: float, notes: str = "") -> CheckReport:
    gap = abs(value - target) / max(abs(target), _TINY)
    margin = (tol - gap) / max(tol, _TINY)
    note = f"value={value!r} target={target!r}; {notes}".strip("; ")
    return CheckReport(name, digest, float(gap), float(tol), float(margin),
                       bool(gap <= tol), note)


def _auto_digest(collection: SparseCollection | None,
                 weight: MatrixWeight | None) -> str:
    bits = []
    if collection is not None:
        g = collection.grid
        bits.append(f"d{g.dimension}L{g.depth}|S{len(collection)}")
    if weight is not None:
        if collection is None:
            g = weight.grid
            bits.append(f"d{g.dimension}L{g.depth}")
        bits.append(f"n{weight.n}")
    return "|".join(bits)


def _solver_kw(norm_kw: dict) -> dict:
    """``norm_tol`` names the solver tolerance in check signatures (the bare
    ``tol`` is the check tolerance); translate for ``weighted_norm``."""
    kw = dict(norm_kw)
    if "norm_tol" in kw:
        kw["tol"] = kw.pop("norm_tol")
    return kw


def _norm_ts(collection: SparseCollection, weight: MatrixWeight,
             norm: float | None, norm_kw: dict) -> float:
    if norm is not None:
        return norm
    return weighted_norm(sparse_op(collection, weight.n), weight,
                         **_solver_kw(norm_kw))


# -- norm bracket ------------------------------------------------------------


def check_norm_upper(collection: SparseCollection, weight: MatrixWeight, *,
                     norm: float | None = None, a2: float | None = None,
                     tol: float = TOL_CHECK, digest: str = "",
                     **norm_kw) -> CheckReport:
    """||T_S||_{L2(W)} <= 64 * a2(S)^(3/2)."""
    common_grid(collection.grid, weight.grid)
    if a2 is None:
        a2, _ = weight.a2_constant(collection.cubes)
    lhs = _norm_ts(collection, weight, norm, norm_kw)
    return _ineq("norm-upper", digest or _auto_digest(collection, weight),
                 lhs, 64.0 * a2 ** 1.5, tol, notes=f"a2={a2:.6g}")


def check_norm_lower(collection: SparseCollection, weight: MatrixWeight, *,
                     norm: float | None = None, a2: float | None = None,
                     tol: float = TOL_CHECK, digest: str = "",
                     **norm_kw) -> CheckReport:
    """a2(S)^(1/4) / sqrt(2) <= ||T_S||_{L2(W)}."""
    common_grid(collection.grid, weight.grid)
    if a2 is None:
        a2, _ = weight.a2_constant(collection.cubes)
    rhs = _norm_ts(collection, weight, norm, norm_kw)
    return _ineq("norm-lower", digest or _auto_digest(collection, weight),
                 a2 ** 0.25 / math.sqrt(2.0), rhs, tol, notes=f"a2={a2:.6g}")


def check_scalar_lower(collection: SparseCollection, weight: MatrixWeight, *,
                       norm: float | None = None, a2: float | None = None,
                       tol: float = TOL_CHECK, digest: str = "",
                       **norm_kw) -> CheckReport:
    """Scalar improvement: a2(S)^(1/2) <= ||T_S||_{L2(w)} for n = 1."""
    if weight.n != 1:
        raise InvalidInputError("scalar lower bound needs n = 1")
    common_grid(collection.grid, weight.grid)
    if a2 is None:
        a2, _ = weight.a2_constant(collection.cubes)
    rhs = _norm_ts(collection, weight, norm, norm_kw)
    return _ineq("scalar-lower", digest or _auto_digest(collection, weight),
                 math.sqrt(a2), rhs, tol, notes=f"a2={a2:.6g}")


# -- exact decay --------------------------------------------------------------


def check_decay(collection: SparseCollection, *, digest: str = "") -> CheckReport:
    """Generation n below any member packs at most 2^-n of it (exact)."""
    report = decompose(collection).decay_report()
    wit = ""
    if report.witness is not None:
        q, n = report.witness
        wit = f"witness=({q}, gen {n}) exact={report.worst_ratio}"
    if report.attained:
        wit += " attained"
    return _ineq("decay", digest or _auto_digest(collection, None),
                 float(report.worst_ratio), 1.0, 0.0, notes=wit.strip(),
                 passed=report.ok)


# -- scalar weight inequalities ------------------------------------------------


def check_ainf_vs_a2(weight: MatrixWeight, *, tol: float = 1e-9,
                     digest: str = "") -> CheckReport:
    """Flatness vs characteristic: ainf(w) <= e * a2(w), tree-wide, n = 1."""
    if weight.n != 1:
        raise InvalidInputError("the flatness comparison is scalar")
    ainf, wit = scalar_ainf(weight)
    a2, _ = weight.a2_constant()
    return _ineq("flatness-vs-a2", digest or _auto_digest(None, weight),
                 ainf, math.e * a2, tol,
                 notes=f"ainf={ainf:.6g} a2={a2:.6g} witness={wit}")


def check_reverse_holder(weight: MatrixWeight, *, eps: float | None = None,
                         tol: float = TOL_CHECK,
                         digest: str = "") -> CheckReport:
    """<w^(1+eps)>_Q^(1/(1+eps)) <= 2^(1/(1+eps)) <w>_Q over all tree cubes,
    with the self-improvement exponent eps = 1/(2^(d+1) ainf - 1)."""
    if weight.n != 1:
        raise InvalidInputError("reverse Hölder check is scalar")
    grid = weight.grid
    if eps is None:
        ainf, _ = scalar_ainf(weight)
        eps = 1.0 / (2.0 ** (grid.dimension + 1) * ainf - 1.0)
    w = weight.values[:, 0, 0]
    reps = np.diff(grid.level_offsets)
    inv_counts = np.repeat(grid.inv_cell_counts, reps)
    avg_w = weight.pyr_sums[:, 0, 0] * inv_counts
    avg_pow = pyramid_sums_np(grid, w ** (1.0 + eps)) * inv_counts
    lhs_all = avg_pow ** (1.0 / (1.0 + eps))
    rhs_all = 2.0 ** (1.0 / (1.0 + eps)) * avg_w
    ratios = lhs_all / rhs_all
    slot = int(ratios.argmax())
    return _ineq("reverse-holder", digest or _auto_digest(None, weight),
                 float(ratios[slot]), 1.0, tol,
                 notes=f"eps={eps:.6g} witness={grid.cube_from_pyramid(slot)}")


def _subset_cells(weight: MatrixWeight, cube: CubeId,
                  sub_cubes: Sequence[CubeId]) -> tuple[Fraction, float, float]:
    """delta = |union|/|Q| (exact), w(union) and w(Q) for disjoint sub-cubes."""
    grid = weight.grid
    grid.validate_cube(cube)
    a, b = grid.cell_range(cube)
    seen = np.zeros(b - a, dtype=bool)
    for q in sub_cubes:
        grid.validate_cube(q)
        if not grid.contains(cube, q):
            raise InvalidInputError(f"{q} is not inside {cube}")
        qa, qb = grid.cell_range(q)
        if seen[qa - a:qb - a].any():
            raise InvalidInputError("sub-cubes overlap")
        seen[qa - a:qb - a] = True
    w = weight.values[a:b, 0, 0]
    delta = Fraction(int(seen.sum()), b - a)
    return delta, float(w[seen].sum()), float(w.sum())


def check_portion_preserving(weight: MatrixWeight, cube: CubeId,
                             sub_cubes: Sequence[CubeId], *,
                             a2: float | None = None, tol: float = TOL_CHECK,
                             digest: str = "") -> CheckReport:
    """w(S') <= (1 - (1-delta)^2 / a2) * w(Q) for S' in Q of portion <= delta.

    ``a2`` is any valid characteristic bound at Q; defaults to the sharp
    single-cube value a2(Q).
    """
    if weight.n != 1:
        raise InvalidInputError("portion check is scalar")
    grid = weight.grid
    if a2 is None:
        a2 = float(weight.a2_per_cube[grid.pyramid_index(cube)])
    delta, w_sub, w_cube = _subset_cells(weight, cube, sub_cubes)
    factor = 1.0 - (1.0 - float(delta)) ** 2 / a2
    return _ineq("portion-preserving", digest or _auto_digest(None, weight),
                 w_sub, factor * w_cube, tol,
                 notes=f"delta={float(delta):.6g} a2={a2:.6g} Q={cube}")


def check_small_portion(weight: MatrixWeight, cube: CubeId,
                        sub_cubes: Sequence[CubeId], *, ainf: float | None = None,
                        tol: float = TOL_CHECK, digest: str = "") -> CheckReport:
    """For delta below 2^(-2^(d+2) ainf):  w(S') <= eta * w(Q) with
    eta = 2^(1/(1+eps)) delta^(eps/(1+eps)) < 1/2.

    Evaluated in log2 space; when no representable delta can satisfy the
    premise the check reports itself as vacuous.
    """
    if weight.n != 1:
        raise InvalidInputError("portion check is scalar")
    grid = weight.grid
    if ainf is None:
        ainf, _ = scalar_ainf(weight)
    delta, w_sub, w_cube = _subset_cells(weight, cube, sub_cubes)
    dig = digest or _auto_digest(None, weight)
    name = "small-portion"
    log2_threshold = -(2.0 ** (grid.dimension + 2)) * ainf
    if delta == 0:
        return _ineq(name, dig, 0.0, 0.0, tol, passed=True,
                     notes="empty portion (trivial)")
    log2_delta = math.log2(delta.numerator) - math.log2(delta.denominator)
    if log2_delta >= log2_threshold:
        return _ineq(name, dig, 0.0, 0.0, tol, passed=True,
                     notes=f"vacuous: delta=2^{log2_delta:.4g} is not below "
                           f"the premise 2^{log2_threshold:.4g}")
    eps = 1.0 / (2.0 ** (grid.dimension + 1) * ainf - 1.0)
    log2_eta = (1.0 + eps * log2_delta) / (1.0 + eps)
    eta = 2.0 ** log2_eta
    half = eta < 0.5 or log2_eta < -1.0
    return _ineq(name, dig, w_sub, eta * w_cube, tol,
                 passed=(w_sub <= eta * w_cube * (1 + tol)) and half,
                 notes=f"eta={eta:.6g} (<1/2: {half}) delta=2^{log2_delta:.4g}")


# -- mixed bound and almost orthogonality -------------------------------------


def check_mixed_bound(collection: SparseCollection, weight: MatrixWeight, *,
                      norm: float | None = None, a2_tree: float | None = None,
                      ainf: float | None = None, ainf_dual: float | None = None,
                      ainf_exact: bool | None = None, directions: int = 64,
                      seed: int = 0, tol: float = TOL_CHECK,
                      digest: str = "", **norm_kw) -> CheckReport:
    """||T_S|| <= c_d * a2^(1/2) * (ainf * ainf_dual)^(1/2) with ambient
    (tree-wide) constants and the proof's dimensional constant c_d."""
    common_grid(collection.grid, weight.grid)
    d = collection.grid.dimension
    if a2_tree is None:
        a2_tree, _ = weight.a2_constant()
    if ainf is None or ainf_dual is None:
        est = vector_ainf_estimate(weight, directions=directions, seed=seed)
        est_dual = vector_ainf_estimate(weight.inverse_weight(),
                                        directions=directions, seed=seed)
        ainf, ainf_dual = est.value, est_dual.value
        ainf_exact = est.exact and est_dual.exact
    lhs = _norm_ts(collection, weight, norm, norm_kw)
    c_d = mixed_bound_constant(d)
    rhs = c_d * math.sqrt(a2_tree) * math.sqrt(ainf * ainf_dual)
    series = cotlar_series_bound(a2_tree, ainf, ainf_dual, d)
    return _ineq("mixed-bound", digest or _auto_digest(collection, weight),
                 lhs, rhs, tol,
                 notes=(f"c_d={c_d:.6g} series={series:.6g} "
                        f"ainf={'exact' if ainf_exact else 'lower-estimate'}"))


def check_cotlar_bound(report: CotlarReport, *, tol: float = TOL_CHECK,
                       digest: str = "") -> CheckReport:
    """||T_S|| <= 2 sqrt(A B) with A, B from the measured pair tables."""
    return _ineq("cotlar-bound", digest, report.norm_ts,
                 report.bound_measured, tol,
                 notes=f"generations={report.n_generations}")


def check_cotlar_case1(report: CotlarReport, *, tol: float = TOL_CHECK,
                       digest: str = "") -> CheckReport:
    """Every measured pair norm obeys the decay-based per-pair bound
    (1 - 1/(4 a2))^(gap/2) * a2 with the collection's characteristic."""
    worst = -math.inf
    worst_pair = None
    for p in report.pairs:
        bound = case1_pair_bound(p.gap, report.a2_collection)
        ratio = max(p.star_first, p.star_second) / bound
        if ratio > worst:
            worst, worst_pair = ratio, p
    assert worst_pair is not None
    return _ineq("cotlar-case1", digest, worst, 1.0, tol,
                 notes=(f"worst pair=({worst_pair.first},{worst_pair.second}) "
                        f"a2={report.a2_collection:.6g}"))


# -- single-cube norm identity -------------------------------------------------


def check_averaging_identity(weight: MatrixWeight, cube: CubeId, *,
                             tol: float = 1e-8, digest: str = "",
                             **norm_kw) -> CheckReport:
    """Operational norm of the cube averaging operator on L2(W) equals the
    closed form ||<W>_Q^(1/2) <W^-1>_Q^(1/2)||."""
    exact = averaging_norm_exact(weight, cube)
    kw = _solver_kw(norm_kw)
    kw.setdefault("tol", 1e-11)
    measured = weighted_norm(averaging_op(weight.grid, cube, weight.n),
                             weight, **kw)
    return _equality("averaging-identity",
                     digest or _auto_digest(None, weight), measured, exact,
                     tol, notes=f"Q={cube}")


# -- commutator suite ----------------------------------------------------------


def check_commutator_identity(rep: CommutatorReport, *, tol: float = 1e-8,
                              digest: str = "") -> CheckReport:
    """Characteristic of the doubled weight equals 1 + sbmo^2 exactly."""
    return _equality("commutator-identity", digest, rep.wb_a2,
                     1.0 + rep.sbmo ** 2, tol,
                     notes=f"sbmo={rep.sbmo:.6g} witness={rep.sbmo_witness}")


def check_block_conjugation(rep: CommutatorReport, *, tol: float = 1e-10,
                            digest: str = "") -> CheckReport:
    """Conjugating T by the V factor equals the triangular block operator,
    entrywise on a full basis (absolute gap)."""
    return _ineq("block-conjugation", digest, rep.conjugation_gap, tol, 0.0,
                 notes="max |entry| gap vs absolute tolerance")


def check_commutator_vs_block(rep: CommutatorReport, *,
                              tol: float = TOL_CHECK,
                              digest: str = "") -> CheckReport:
    """||[T,B]|| <= ||T||_{L2(W_B)} (corner compression of the block form)."""
    return _ineq("commutator-vs-block", digest, rep.norm_commutator,
                 rep.norm_block_weighted, tol)


def check_block_bracket_lower(rep: CommutatorReport, *,
                              tol: float = TOL_CHECK,
                              digest: str = "") -> CheckReport:
    """(1 + sbmo^2)^(1/4) / sqrt(2) <= ||T||_{L2(W_B)}."""
    return _ineq("block-bracket-lower", digest, rep.lower_bound,
                 rep.norm_block_weighted, tol)


def check_block_bracket_upper(rep: CommutatorReport, *,
                              tol: float = TOL_CHECK,
                              digest: str = "") -> CheckReport:
    """||T||_{L2(W_B)} <= 64 (1 + sbmo^2)^(3/2)."""
    return _ineq("block-bracket-upper", digest, rep.norm_block_weighted,
                 rep.upper_bound, tol)


def check_block_norm_equality(rep: CommutatorReport, *, tol: float = 1e-8,
                              digest: str = "") -> CheckReport:
    """The weighted route and the assembled triangular operator agree."""
    return _equality("block-norm-equality", digest, rep.norm_block_plain,
                     rep.norm_block_weighted, tol)


# -- bundled runner ------------------------------------------------------------


def run_weight_checks(collection: SparseCollection, weight: MatrixWeight, *,
                      norm: float | None = None, directions: int = 64,
                      seed: int = 0, tol: float = TOL_CHECK,
                      digest: str = "", **norm_kw) -> list[CheckReport]:
    """The standard battery for one (collection, weight) pair.

    Shares the operator norm and the constants across the individual checks;
    scalar-only inequalities are included when n = 1.
    """
    common_grid(collection.grid, weight.grid)
    dig = digest or _auto_digest(collection, weight)
    norm = _norm_ts(collection, weight, norm, norm_kw)
    a2, _ = weight.a2_constant(collection.cubes)
    out = [
        check_norm_upper(collection, weight, norm=norm, a2=a2, tol=tol,
                         digest=dig),
        check_norm_lower(collection, weight, norm=norm, a2=a2, tol=tol,
                         digest=dig),
        check_decay(collection, digest=dig),
        check_mixed_bound(collection, weight, norm=norm,
                          directions=directions, seed=seed, tol=tol,
                          digest=dig),
    ]
    if weight.n == 1:
        out.insert(2, check_scalar_lower(collection, weight, norm=norm, a2=a2,
                                         tol=tol, digest=dig))
        out.append(check_ainf_vs_a2(weight, digest=dig))
        out.append(check_reverse_holder(weight, digest=dig))
    return out
