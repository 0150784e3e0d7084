"""Operator-valued symbols, their oscillation seminorm, and commutators.

A symbol B is an arbitrary matrix field.  Its oscillation over a collection
S is measured by the exact closed form

    sbmo(S, B)^2 = max over Q in S of
        max( lambda_max(<B^t B>_Q - <B>_Q^t <B>_Q),
             lambda_max(<B B^t>_Q - <B>_Q <B>_Q^t) ),

the largest mean quadratic oscillation of B e (right) or B^t e (left) over
unit directions e.  The doubled weight

    W_B = V_B^t V_B,   V_B = [[I, B], [0, I]]

links the commutator [T, B] to a weighted norm of T acting on 2n
components: conjugating by V_B turns T into the block-triangular operator
[[T, [T,B]], [0, T]], so ||[T,B]|| is controlled by ||T||_{L2(W_B)}, and the
characteristic of W_B over S is exactly 1 + sbmo(S, B)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collection import SparseCollection
from .config import DENSE_CAP, POWER_MAXITER, POWER_RESTARTS, TOL_NORM
from .errors import InvalidInputError
from .grid import CubeId, GridSpec, common_grid, pyramid_sums_np
from .operators import (LinearOp, _Closure, mult_op, sparse_op, weighted_norm)
from .weights import MatrixField, MatrixWeight

__all__ = [
    "gen_symbol", "sbmo", "block_weight", "block_weight_inverse",
    "v_factor_field", "v_factor_inverse_field", "block_conjugated_op",
    "block_triangular_op", "commutator_op", "CommutatorReport",
    "commutator_report",
]


# -- symbol generators --------------------------------------------------------


def gen_symbol(grid: GridSpec, n: int, kind: str, *, seed: int = 0,
               **params) -> MatrixField:
    """Seeded symbol generators.

    kinds:
      constant(value=1.0)        constant matrix cells (scalar -> value * I)
      gauss(spread=1.0)          iid Gaussian entries per cell
      stepdiag(left=0s, right=1s) diagonal jump across the first-coordinate
                                  midpoint
    """
    N = grid.n_cells
    if kind == "constant":
        value = params.pop("value", 1.0)
        _no_extra(params, kind)
        mat = np.asarray(value, dtype=np.float64)
        if mat.ndim == 0:
            mat = float(mat) * np.eye(n)
        elif mat.ndim == 1:
            mat = np.diag(mat)
        if mat.shape != (n, n):
            raise InvalidInputError("constant symbol must be n x n")
        values = np.broadcast_to(mat, (N, n, n)).copy()
    elif kind == "gauss":
        spread = float(params.pop("spread", 1.0))
        _no_extra(params, kind)
        rng = np.random.default_rng(seed)
        values = spread * rng.standard_normal((N, n, n))
    elif kind == "stepdiag":
        left = np.atleast_1d(np.asarray(params.pop("left", np.zeros(n)),
                                        dtype=np.float64))
        right = np.atleast_1d(np.asarray(params.pop("right", np.ones(n)),
                                         dtype=np.float64))
        _no_extra(params, kind)
        if left.shape != (n,) or right.shape != (n,):
            raise InvalidInputError("stepdiag needs n diagonal entries per side")
        values = np.zeros((N, n, n))
        hi = grid.cell_centers[:, 0] >= 0.5
        values[~hi] = np.diag(left)
        values[hi] = np.diag(right)
    else:
        raise InvalidInputError(f"unknown symbol kind {kind!r}")
    return MatrixField(grid, values)


def _no_extra(params: dict, kind: str) -> None:
    if params:
        raise InvalidInputError(
            f"unknown parameters for symbol kind {kind!r}: {sorted(params)}")


# -- oscillation --------------------------------------------------------------


def sbmo(collection: SparseCollection, symbol: MatrixField
         ) -> tuple[float, CubeId]:
    """Oscillation seminorm over the collection, with a witness cube."""
    common_grid(collection.grid, symbol.grid)
    grid, B = collection.grid, symbol.values
    reps = np.diff(grid.level_offsets)
    inv_counts = np.repeat(grid.inv_cell_counts, reps)[:, None, None]
    avg_b = symbol.pyr_avg
    avg_btb = pyramid_sums_np(grid, np.einsum("cji,cjk->cik", B, B)) * inv_counts
    avg_bbt = pyramid_sums_np(grid, np.einsum("cij,ckj->cik", B, B)) * inv_counts

    slots = np.fromiter((grid.pyramid_index(q) for q in collection.cubes),
                        dtype=np.int64)
    right = avg_btb[slots] - np.einsum("qji,qjk->qik", avg_b[slots],
                                       avg_b[slots])
    left = avg_bbt[slots] - np.einsum("qij,qkj->qik", avg_b[slots],
                                      avg_b[slots])
    osc = np.maximum(np.linalg.eigvalsh(right)[:, -1],
                     np.linalg.eigvalsh(left)[:, -1])
    best = int(osc.argmax())
    return math.sqrt(max(float(osc[best]), 0.0)), collection.cubes[best]


# -- the doubled weight -------------------------------------------------------


def _block_values(tl, tr, bl, br) -> np.ndarray:
    N, n = tl.shape[0], tl.shape[1]
    out = np.empty((N, 2 * n, 2 * n))
    out[:, :n, :n] = tl
    out[:, :n, n:] = tr
    out[:, n:, :n] = bl
    out[:, n:, n:] = br
    return out


def block_weight(symbol: MatrixField) -> MatrixWeight:
    """W_B = [[I, B], [B^t, B^t B + I]], SPD by construction."""
    B = symbol.values
    n = symbol.n
    eye = np.broadcast_to(np.eye(n), B.shape)
    btb = np.einsum("cji,cjk->cik", B, B)
    vals = _block_values(eye, B, B.transpose(0, 2, 1), btb + eye)
    return MatrixWeight(symbol.grid, vals, eig_floor=0.0)


def block_weight_inverse(symbol: MatrixField) -> np.ndarray:
    """Closed-form inverse [[I + B B^t, -B], [-B^t, I]] (cell values)."""
    B = symbol.values
    n = symbol.n
    eye = np.broadcast_to(np.eye(n), B.shape)
    bbt = np.einsum("cij,ckj->cik", B, B)
    return _block_values(eye + bbt, -B, -B.transpose(0, 2, 1), eye)


def v_factor_field(symbol: MatrixField) -> MatrixField:
    """V_B = [[I, B], [0, I]] with V_B^t V_B = W_B."""
    B = symbol.values
    n = symbol.n
    eye = np.broadcast_to(np.eye(n), B.shape)
    zero = np.zeros_like(B)
    return MatrixField(symbol.grid, _block_values(eye, B, zero, eye))


def v_factor_inverse_field(symbol: MatrixField) -> MatrixField:
    """V_B^-1 = [[I, -B], [0, I]]."""
    B = symbol.values
    n = symbol.n
    eye = np.broadcast_to(np.eye(n), B.shape)
    zero = np.zeros_like(B)
    return MatrixField(symbol.grid, _block_values(eye, -B, zero, eye))


# -- block operators ----------------------------------------------------------


def commutator_op(collection: SparseCollection, symbol: MatrixField) -> LinearOp:
    """[T, B] = T M_B - M_B T on n components."""
    common_grid(collection.grid, symbol.grid)
    T = sparse_op(collection, symbol.n)
    MB = mult_op(symbol, label="B")
    return (T @ MB) - (MB @ T)


def block_conjugated_op(collection: SparseCollection,
                        symbol: MatrixField) -> LinearOp:
    """M_{V_B^-1} T M_{V_B} on 2n components."""
    T2 = sparse_op(collection, 2 * symbol.n)
    return mult_op(v_factor_inverse_field(symbol), label="V^-1") @ T2 \
        @ mult_op(v_factor_field(symbol), label="V")


def block_triangular_op(collection: SparseCollection,
                        symbol: MatrixField) -> LinearOp:
    """[[T, [T,B]], [0, T]] assembled directly from its blocks."""
    common_grid(collection.grid, symbol.grid)
    n = symbol.n
    T = sparse_op(collection, n)
    C = commutator_op(collection, symbol)

    def f(x):
        top, bot = x[:, :n], x[:, n:]
        out = np.empty_like(x)
        out[:, :n] = T._apply3(top) + C._apply3(bot)
        out[:, n:] = T._apply3(bot)
        return out

    def t(x):
        top, bot = x[:, :n], x[:, n:]
        out = np.empty_like(x)
        out[:, :n] = T.t._apply3(top)
        out[:, n:] = C.t._apply3(top) + T.t._apply3(bot)
        return out

    return LinearOp(collection.grid, 2 * n, (_Closure(f, t),),
                    label="[[T,[T,B]],[0,T]]")


@dataclass(frozen=True)
class CommutatorReport:
    """Everything the commutator check suite consumes."""

    n: int
    sbmo: float
    sbmo_witness: CubeId
    wb_a2: float                 # characteristic of W_B over the collection
    wb_a2_witness: CubeId
    identity_gap: float          # |wb_a2 - (1 + sbmo^2)| / (1 + sbmo^2)
    conjugation_gap: float       # max entry gap of the two block operators
    norm_commutator: float       # ||[T,B]|| on plain L2
    norm_block_weighted: float   # ||T^(2n)||_{L2(W_B)}
    norm_block_plain: float      # ||[[T,[T,B]],[0,T]]|| on plain L2
    lower_bound: float           # (1 + sbmo^2)^(1/4) / sqrt(2)
    upper_bound: float           # 64 (1 + sbmo^2)^(3/2)


def commutator_report(collection: SparseCollection, symbol: MatrixField, *,
                      tol: float = TOL_NORM, maxiter: int = POWER_MAXITER,
                      restarts: int = POWER_RESTARTS, seed: int = 0,
                      dense_cap: int = DENSE_CAP) -> CommutatorReport:
    """Measure the full commutator chain for one (collection, symbol) pair."""
    s, witness = sbmo(collection, symbol)
    WB = block_weight(symbol)
    a2, a2_wit = WB.a2_constant(collection.cubes)
    target = 1.0 + s * s
    identity_gap = abs(a2 - target) / target

    conj = block_conjugated_op(collection, symbol)
    tri = block_triangular_op(collection, symbol)
    gap = float(np.abs(conj.dense(dense_cap) - tri.dense(dense_cap)).max())

    norm_comm = weighted_norm(commutator_op(collection, symbol), None,
                              tol=tol, maxiter=maxiter, restarts=restarts,
                              seed=seed)
    norm_block_w = weighted_norm(sparse_op(collection, 2 * symbol.n), WB,
                                 tol=tol, maxiter=maxiter, restarts=restarts,
                                 seed=seed)
    norm_block_plain = weighted_norm(tri, None, tol=tol, maxiter=maxiter,
                                     restarts=restarts, seed=seed)

    return CommutatorReport(
        n=symbol.n, sbmo=s, sbmo_witness=witness, wb_a2=a2,
        wb_a2_witness=a2_wit, identity_gap=identity_gap,
        conjugation_gap=gap, norm_commutator=norm_comm,
        norm_block_weighted=norm_block_w, norm_block_plain=norm_block_plain,
        lower_bound=target ** 0.25 / math.sqrt(2.0),
        upper_bound=64.0 * target ** 1.5)
