"""Piecewise functions, linear operators and weighted operator norms.

Operators are stored as a chain of primitive stages (cellwise matrix
multipliers, tree-mask averaging sweeps, disjoint-segment averaging sweeps,
opaque closures).  Composition concatenates stage chains and then fuses
adjacent multiplier stages, so conjugating a composed operator by W^(1/2)
costs three cellwise multiplications per apply instead of six.  The tree
stages run in the numba kernels; everything is batched over trailing
columns, which the norm machinery uses to drive several power-iteration
vectors at once.

Norms: ||T||_{L2(W)} equals the plain spectral norm of
M_{W^(1/2)} T M_{W^(-1/2)} because cells have equal measure, so the
operational route is subspace (block power) iteration on A^T A with a seeded
orthonormal start; the ``restarts`` simultaneous columns double as the
block.  The dense route (exact SVD) is available below a size cap and is
used as the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .collection import SparseCollection
from .config import (DENSE_CAP, POWER_MAXITER, POWER_RESTARTS, TOL_NORM,
                     TOL_PAIR)
from .decomposition import Decomposition, decompose
from .errors import ConvergenceError, InvalidInputError
from .grid import CubeId, GridSpec, common_grid
from .weights import (AinfEstimate, MatrixField, MatrixWeight, sqrt_psd,
                      vector_ainf_estimate)

__all__ = [
    "PiecewiseFn", "LinearOp", "mult_op", "averaging_op", "sparse_op",
    "generation_op", "weighted_conjugate", "adjoint_in_weight",
    "NormResult", "weighted_norm", "weighted_norm_result",
    "dense_weighted_norm", "averaging_norm_exact",
    "PairNorms", "CotlarReport", "cotlar_terms", "cotlar_stein_bound",
    "case1_pair_bound", "case2_epsilon", "case2_eta", "case2_alpha_table",
    "cotlar_series_bound", "mixed_bound_constant",
]


class PiecewiseFn:
    """A vector-valued step function: one n-vector per cell."""

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != grid.n_cells:
            raise InvalidInputError(
                f"function values must be (n_cells, n), got {values.shape}")
        self.grid = grid
        self.values = values

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @classmethod
    def random(cls, grid: GridSpec, n: int, seed: int = 0) -> "PiecewiseFn":
        rng = np.random.default_rng(seed)
        return cls(grid, rng.standard_normal((grid.n_cells, n)))

    @classmethod
    def indicator(cls, grid: GridSpec, cube: CubeId,
                  vector: Sequence[float] | None = None) -> "PiecewiseFn":
        """1_Q e for a cube Q and a constant vector e (default scalar 1)."""
        grid.validate_cube(cube)
        e = np.atleast_1d(np.asarray(vector if vector is not None else [1.0],
                                     dtype=np.float64))
        vals = np.zeros((grid.n_cells, e.size))
        a, b = grid.cell_range(cube)
        vals[a:b] = e
        return cls(grid, vals)

    def dot(self, other: "PiecewiseFn",
            weight: MatrixWeight | None = None) -> float:
        common_grid(self.grid, other.grid)
        if weight is None:
            s = float(np.vdot(self.values, other.values))
        else:
            s = float(np.einsum("ci,cij,cj->", self.values, weight.values,
                                other.values))
        return s / self.grid.n_cells

    def norm(self, weight: MatrixWeight | None = None) -> float:
        return math.sqrt(max(self.dot(self, weight), 0.0))

    def __add__(self, other: "PiecewiseFn") -> "PiecewiseFn":
        common_grid(self.grid, other.grid)
        return PiecewiseFn(self.grid, self.values + other.values)

    def __sub__(self, other: "PiecewiseFn") -> "PiecewiseFn":
        common_grid(self.grid, other.grid)
        return PiecewiseFn(self.grid, self.values - other.values)

    def __rmul__(self, c: float) -> "PiecewiseFn":
        return PiecewiseFn(self.grid, float(c) * self.values)


# -- primitive stages ---------------------------------------------------------


class _Stage:
    def fwd(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def transpose(self) -> "_Stage":
        raise NotImplementedError


class _Mult(_Stage):
    """Cellwise matrix multiplier."""

    def __init__(self, field: np.ndarray):
        self.field = np.ascontiguousarray(field)

    def fwd(self, x):
        return np.einsum("cij,cjr->cir", self.field, x)

    def transpose(self):
        return _Mult(self.field.transpose(0, 2, 1))

    def fuse(self, other: "_Mult") -> "_Mult":
        return _Mult(np.einsum("cij,cjk->cik", self.field, other.field))


class _Scale(_Stage):
    def __init__(self, c: float):
        self.c = float(c)

    def fwd(self, x):
        return self.c * x

    def transpose(self):
        return self


class _TreeMask(_Stage):
    """Sum of cube averages over a masked cube family (self-transpose)."""

    def __init__(self, grid: GridSpec, member: np.ndarray):
        self.grid = grid
        self.member = np.ascontiguousarray(member, dtype=np.uint8)

    def fwd(self, x):
        N, n, r = x.shape
        flat = np.ascontiguousarray(x).reshape(N, n * r)
        out = np.empty_like(flat)
        kernels.masked_average_apply(flat, self.member,
                                     self.grid.level_offsets,
                                     self.grid.branch,
                                     self.grid.inv_cell_counts, out)
        return out.reshape(N, n, r)

    def transpose(self):
        return self


class _Segments(_Stage):
    """Averages over a disjoint cube family (self-transpose)."""

    def __init__(self, starts: np.ndarray, stops: np.ndarray):
        order = np.argsort(starts, kind="stable")
        self.starts = np.ascontiguousarray(starts[order], dtype=np.int64)
        self.stops = np.ascontiguousarray(stops[order], dtype=np.int64)

    def fwd(self, x):
        N, n, r = x.shape
        flat = np.ascontiguousarray(x).reshape(N, n * r)
        out = np.empty_like(flat)
        kernels.segment_average_apply(flat, self.starts, self.stops, out)
        return out.reshape(N, n, r)

    def transpose(self):
        return self


class _Closure(_Stage):
    def __init__(self, f: Callable[[np.ndarray], np.ndarray],
                 t: Callable[[np.ndarray], np.ndarray]):
        self.f = f
        self.t = t

    def fwd(self, x):
        return self.f(x)

    def transpose(self):
        return _Closure(self.t, self.f)


def _fuse(stages: tuple[_Stage, ...]) -> tuple[_Stage, ...]:
    out: list[_Stage] = []
    scale = 1.0
    for st in stages:
        if isinstance(st, _Scale):
            scale *= st.c
        elif isinstance(st, _Mult) and out and isinstance(out[-1], _Mult):
            out[-1] = out[-1].fuse(st)
        else:
            out.append(st)
    if scale != 1.0:
        out.append(_Scale(scale))
    return tuple(out)


class LinearOp:
    """A linear map on piecewise functions, stored as a stage chain.

    ``stages[0]`` is the leftmost factor (applied last).  ``A @ B`` is the
    composition, ``A + B`` the sum, ``c * A`` the scalar multiple, ``A.t``
    the plain transpose in cell coordinates.
    """

    def __init__(self, grid: GridSpec, n: int, stages: Sequence[_Stage],
                 label: str = ""):
        self.grid = grid
        self.n = int(n)
        self.stages = tuple(stages)
        self.label = label
        self._fused: tuple[_Stage, ...] | None = None

    # -- applying ----------------------------------------------------------

    def _apply3(self, x: np.ndarray) -> np.ndarray:
        if self._fused is None:
            self._fused = _fuse(self.stages)
        for st in reversed(self._fused):
            x = st.fwd(x)
        return x

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply to (n_cells, n) or batched (n_cells, n, r) coordinates."""
        arr = np.ascontiguousarray(values, dtype=np.float64)
        squeeze = arr.ndim == 2
        if squeeze:
            arr = arr[:, :, None]
        if arr.shape[:2] != (self.grid.n_cells, self.n):
            raise InvalidInputError(
                f"operator on (N={self.grid.n_cells}, n={self.n}) got "
                f"values of shape {values.shape}")
        out = self._apply3(arr)
        return out[:, :, 0] if squeeze else out

    def __call__(self, fn: PiecewiseFn) -> PiecewiseFn:
        common_grid(self.grid, fn.grid)
        return PiecewiseFn(self.grid, self.apply(fn.values))

    # -- algebra -----------------------------------------------------------

    @property
    def t(self) -> "LinearOp":
        return LinearOp(self.grid, self.n,
                        tuple(st.transpose() for st in reversed(self.stages)),
                        label=f"({self.label})^t" if self.label else "")

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        common_grid(self.grid, other.grid)
        if self.n != other.n:
            raise InvalidInputError("composition needs equal component counts")
        return LinearOp(self.grid, self.n, self.stages + other.stages,
                        label=f"{self.label}∘{other.label}")

    def _combine(self, other: "LinearOp", sign: float) -> "LinearOp":
        common_grid(self.grid, other.grid)
        if self.n != other.n:
            raise InvalidInputError("sum needs equal component counts")
        a, b = self, other

        def f(x):
            return a._apply3(x) + sign * b._apply3(x)

        def t(x):
            return a.t._apply3(x) + sign * b.t._apply3(x)

        return LinearOp(self.grid, self.n, (_Closure(f, t),),
                        label=f"{a.label}{'+' if sign > 0 else '-'}{b.label}")

    def __add__(self, other: "LinearOp") -> "LinearOp":
        return self._combine(other, 1.0)

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        return self._combine(other, -1.0)

    def __rmul__(self, c: float) -> "LinearOp":
        return LinearOp(self.grid, self.n, (_Scale(float(c)),) + self.stages,
                        label=f"{c}*{self.label}")

    # -- dense realization ---------------------------------------------------

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        """(N n) x (N n) matrix, columns indexed cell-major then component.

        Refuses to build above ``cap`` unknowns.
        """
        N, n = self.grid.n_cells, self.n
        dim = N * n
        if dim > cap:
            raise InvalidInputError(
                f"dense realization of dimension {dim} exceeds cap {cap}")
        out = np.empty((dim, dim))
        chunk = max(1, min(dim, 256))
        for lo in range(0, dim, chunk):
            hi = min(dim, lo + chunk)
            basis = np.zeros((dim, hi - lo))
            basis[np.arange(lo, hi), np.arange(hi - lo)] = 1.0
            cols = self._apply3(basis.reshape(N, n, hi - lo))
            out[:, lo:hi] = cols.reshape(dim, hi - lo)
        return out

    @staticmethod
    def identity(grid: GridSpec, n: int) -> "LinearOp":
        return LinearOp(grid, n, (), label="id")

    def __repr__(self) -> str:
        return f"LinearOp({self.label or 'unnamed'}, n={self.n}, {self.grid})"


# -- constructors -------------------------------------------------------------


def mult_op(field: MatrixField | np.ndarray, grid: GridSpec | None = None,
            label: str = "mult") -> LinearOp:
    """Cellwise multiplication by a matrix field."""
    if isinstance(field, MatrixField):
        grid, values = field.grid, field.values
    else:
        if grid is None:
            raise InvalidInputError("mult_op from a raw array needs the grid")
        values = np.asarray(field, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None, None]
    return LinearOp(grid, values.shape[1], (_Mult(values),), label=label)


def averaging_op(grid: GridSpec, cube: CubeId, n: int = 1) -> LinearOp:
    """f -> 1_Q <f>_Q, componentwise."""
    grid.validate_cube(cube)
    a, b = grid.cell_range(cube)
    st = _Segments(np.array([a], dtype=np.int64), np.array([b], dtype=np.int64))
    return LinearOp(grid, n, (st,), label=f"avg[{cube}]")


def sparse_op(collection: SparseCollection, n: int = 1) -> LinearOp:
    """T f = sum over member cubes Q of 1_Q <f>_Q, componentwise."""
    st = _TreeMask(collection.grid, collection.member_mask)
    return LinearOp(collection.grid, n, (st,),
                    label=f"T[{len(collection)} cubes]")


def generation_op(decomp: Decomposition, gen: int, n: int = 1) -> LinearOp:
    """The single-generation part of the sparse operator (disjoint cubes)."""
    if not 0 <= gen < decomp.n_generations:
        raise InvalidInputError(
            f"generation {gen} out of range 0..{decomp.n_generations - 1}")
    cubes = decomp.generations[gen]
    grid = decomp.grid
    ranges = np.array([grid.cell_range(q) for q in cubes], dtype=np.int64)
    st = _Segments(ranges[:, 0], ranges[:, 1])
    return LinearOp(grid, n, (st,), label=f"T_gen{gen}")


def weighted_conjugate(op: LinearOp, weight: MatrixWeight) -> LinearOp:
    """M_{W^(1/2)} T M_{W^(-1/2)} — same plain norm as T in L2(W)."""
    common_grid(op.grid, weight.grid)
    if weight.n != op.n:
        raise InvalidInputError("weight and operator have different n")
    return LinearOp(op.grid, op.n,
                    (_Mult(weight.cell_sqrt),) + op.stages
                    + (_Mult(weight.cell_inv_sqrt),),
                    label=f"conj[{op.label}]")


def adjoint_in_weight(op: LinearOp, weight: MatrixWeight) -> LinearOp:
    """The L2(W) adjoint M_{W^-1} T^t M_W."""
    common_grid(op.grid, weight.grid)
    if weight.n != op.n:
        raise InvalidInputError("weight and operator have different n")
    return LinearOp(op.grid, op.n,
                    (_Mult(weight.cell_inv),) + op.t.stages
                    + (_Mult(weight.values),),
                    label=f"adj[{op.label}]")


# -- norms --------------------------------------------------------------------


@dataclass(frozen=True)
class NormResult:
    value: float
    iterations: int
    residual: float          # relative residual of the top Ritz pair of A^T A
    converged: bool
    method: str


def _subspace_top_singular(A: LinearOp, *, tol: float, maxiter: int,
                           restarts: int, seed: int) -> NormResult:
    """Top singular value of A by orthogonal iteration on A^T A."""
    N, n = A.grid.n_cells, A.n
    dim = N * n
    r = max(1, min(restarts, dim))
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((dim, r)))
    At = A.t
    lam_top, resid_rel, it = 0.0, np.inf, 0
    for it in range(1, maxiter + 1):
        W = At._apply3(A._apply3(V.reshape(N, n, r))).reshape(dim, r)
        H = V.T @ W
        H = (H + H.T) / 2.0
        lam, Y = np.linalg.eigh(H)
        lam_top = float(lam[-1])
        y = Y[:, -1]
        resid = float(np.linalg.norm(W @ y - lam_top * (V @ y)))
        wnorm = float(np.linalg.norm(W))
        if wnorm == 0.0:          # operator vanishes on the subspace
            return NormResult(0.0, it, 0.0, True, f"subspace(r={r})")
        resid_rel = resid / max(lam_top, 1e-300)
        if resid_rel <= tol:
            return NormResult(math.sqrt(max(lam_top, 0.0)), it, resid_rel,
                              True, f"subspace(r={r})")
        V, R = np.linalg.qr(W)
        V = V * np.sign(np.where(np.diag(R) == 0.0, 1.0, np.diag(R)))
    return NormResult(math.sqrt(max(lam_top, 0.0)), it, resid_rel, False,
                      f"subspace(r={r})")


def weighted_norm_result(op: LinearOp, weight: MatrixWeight | None = None, *,
                         tol: float = TOL_NORM, maxiter: int = POWER_MAXITER,
                         restarts: int = POWER_RESTARTS,
                         seed: int = 0) -> NormResult:
    """Operator norm on L2(W) (plain L2 when weight is None), with
    convergence metadata; does not raise on a hit iteration cap."""
    A = weighted_conjugate(op, weight) if weight is not None else op
    return _subspace_top_singular(A, tol=tol, maxiter=maxiter,
                                  restarts=restarts, seed=seed)


def weighted_norm(op: LinearOp, weight: MatrixWeight | None = None, *,
                  tol: float = TOL_NORM, maxiter: int = POWER_MAXITER,
                  restarts: int = POWER_RESTARTS, seed: int = 0) -> float:
    """Operator norm on L2(W); raises ConvergenceError at the iteration cap."""
    res = weighted_norm_result(op, weight, tol=tol, maxiter=maxiter,
                               restarts=restarts, seed=seed)
    if not res.converged:
        raise ConvergenceError(
            f"operator norm did not reach tol={tol} in {res.iterations} "
            f"iterations (residual {res.residual:.3e})",
            estimate=res.value, residual=res.residual,
            iterations=res.iterations)
    return res.value


def dense_weighted_norm(op: LinearOp, weight: MatrixWeight | None = None, *,
                        cap: int = DENSE_CAP) -> float:
    """Exact norm via dense SVD of the conjugated matrix (small sizes)."""
    A = weighted_conjugate(op, weight) if weight is not None else op
    return float(np.linalg.svd(A.dense(cap), compute_uv=False)[0])


def averaging_norm_exact(weight: MatrixWeight, cube: CubeId) -> float:
    """Closed form ||<W>_Q^(1/2) <W^-1>_Q^(1/2)||_2 for the norm of the
    single-cube averaging operator on L2(W)."""
    s1 = sqrt_psd(weight.average(cube))
    s2 = sqrt_psd(weight.average_inv(cube))
    return float(np.linalg.svd(s1 @ s2, compute_uv=False)[0])


# -- almost-orthogonality of the generations ---------------------------------


@dataclass(frozen=True)
class PairNorms:
    first: int
    second: int
    gap: int
    star_first: float        # ||T_first^* T_second|| on L2(W)
    star_second: float       # ||T_first T_second^*|| on L2(W)


@dataclass(frozen=True)
class CotlarReport:
    n_generations: int
    pairs: tuple[PairNorms, ...]
    alpha_measured: dict[int, float]     # gap -> max ||T_i^* T_j||
    beta_measured: dict[int, float]      # gap -> max ||T_i T_j^*||
    a2_collection: float                 # characteristic over the collection
    a2_tree: float                       # characteristic over all tree cubes
    ainf: float
    ainf_dual: float
    ainf_exact: bool
    norm_ts: float
    bound_measured: float                # 2 sqrt(A B) from measured tables
    bound_case1: float                   # same, tables from the decay bound
    bound_case2: float                   # same, tables from the flatness bound
    dimension: int

    def case1_table(self) -> dict[int, float]:
        """Decay-based reference table; uses the collection characteristic."""
        return {k: case1_pair_bound(k, self.a2_collection)
                for k in sorted(self.alpha_measured)}

    def case2_tables(self) -> tuple[dict[int, float], dict[int, float]]:
        """Flatness-based reference tables; use the tree-wide characteristic."""
        gaps = sorted(self.alpha_measured)
        return (case2_alpha_table(gaps, self.a2_tree, self.ainf,
                                  self.dimension),
                case2_alpha_table(gaps, self.a2_tree, self.ainf_dual,
                                  self.dimension))


def cotlar_stein_bound(alpha: Mapping[int, float],
                       beta: Mapping[int, float]) -> tuple[float, float, float]:
    """A = sum over gaps of sqrt(alpha) (gap 0 once, others twice), same for
    beta; the almost-orthogonality bound is 2 sqrt(A B)."""
    if not alpha or not beta:
        raise InvalidInputError("empty almost-orthogonality tables")

    def side(table: Mapping[int, float]) -> float:
        total = 0.0
        for gap, val in sorted(table.items()):
            if gap < 0 or val < 0:
                raise InvalidInputError("bad almost-orthogonality table entry")
            total += (1.0 if gap == 0 else 2.0) * math.sqrt(val)
        return total

    a, b = side(alpha), side(beta)
    return a, b, 2.0 * math.sqrt(a * b)


def case1_pair_bound(gap: int, a2: float) -> float:
    """Decay-only bound (1 - 1/(4 a2))^(gap/2) * a2 for one generation pair."""
    return (1.0 - 1.0 / (4.0 * a2)) ** (gap / 2.0) * a2


def case2_epsilon(ainf: float, dimension: int) -> float:
    """Self-improvement exponent 1 / (2^(d+1) * ainf - 1)."""
    return 1.0 / (2.0 ** (dimension + 1) * ainf - 1.0)


def case2_eta(gap: float, eps: float) -> float:
    """Mass decay factor 2^((1 - gap*eps) / (1 + eps)) for large gaps."""
    return 2.0 ** ((1.0 - gap * eps) / (1.0 + eps))


def case2_alpha_table(gaps: Sequence[int], a2: float, ainf: float,
                      dimension: int) -> dict[int, float]:
    """Flatness-based pair-norm table: a2 below the threshold gap
    2^(d+2) * ainf, then a2 * eta(gap)^(1/2)."""
    eps = case2_epsilon(ainf, dimension)
    threshold = 2.0 ** (dimension + 2) * ainf
    out: dict[int, float] = {}
    for gap in gaps:
        if gap < threshold:
            out[gap] = a2
        else:
            out[gap] = a2 * math.sqrt(case2_eta(gap, eps))
    return out


def cotlar_series_bound(a2: float, ainf: float, ainf_dual: float,
                        dimension: int) -> float:
    """Closed form of 2 sqrt(sum sqrt(alpha) * sum sqrt(beta)) with the
    case-2 tables summed over all integer gaps (exact geometric tail)."""

    def side(flat: float) -> float:
        eps = case2_epsilon(flat, dimension)
        threshold = 2.0 ** (dimension + 2) * flat
        k_small = math.ceil(threshold) - 1          # largest gap below
        count_small = 2 * k_small + 1               # gaps -k_small..k_small
        q = 2.0 ** (-eps / (4.0 * (1.0 + eps)))
        head = 2.0 ** (1.0 / (4.0 * (1.0 + eps)))
        tail = 2.0 * head * q ** (k_small + 1) / (1.0 - q)
        return math.sqrt(a2) * (count_small + tail)

    return 2.0 * math.sqrt(side(ainf) * side(ainf_dual))


def mixed_bound_constant(dimension: int) -> float:
    """Dimensional constant of the flatness-corrected norm bound:
    2 * (2^(d+3) + (8 * 2^(1/4) / ln 2) * 2^(d+1))."""
    return 2.0 * (2.0 ** (dimension + 3)
                  + (8.0 * 2.0 ** 0.25 / math.log(2.0)) * 2.0 ** (dimension + 1))


def cotlar_terms(collection: SparseCollection, weight: MatrixWeight, *,
                 tol: float = TOL_NORM, pair_tol: float = TOL_PAIR,
                 maxiter: int = POWER_MAXITER,
                 restarts: int = POWER_RESTARTS, seed: int = 0,
                 directions: int = 64) -> CotlarReport:
    """Measure every generation-pair composition norm and assemble the
    almost-orthogonality tables and bounds.

    The decomposition's generations T_0, T_1, ... sum to the full operator;
    for every unordered pair the report records ||T_i^* T_j|| and
    ||T_i T_j^*|| on L2(W) (both symmetric in (i, j)).  Tables keep the max
    per gap.  The decay-based reference table uses the characteristic over
    the collection; the flatness-based tables use the tree-wide constants,
    exact for n = 1 and certified lower estimates otherwise (see
    ``ainf_exact``).

    The pair compositions use the looser ``pair_tol`` residual target: a
    diagonal pair over m disjoint cubes has a top eigenvalue cluster of
    multiplicity up to m, where the subspace residual plateaus at the cluster
    width although the Ritz value (monotone from below) already carries that
    accuracy; the full-operator norm keeps the strict ``tol``.
    """
    common_grid(collection.grid, weight.grid)
    n = weight.n
    decomp = decompose(collection)
    gens = [generation_op(decomp, k, n) for k in range(decomp.n_generations)]
    adjs = [adjoint_in_weight(T, weight) for T in gens]

    pairs: list[PairNorms] = []
    alpha: dict[int, float] = {}
    beta: dict[int, float] = {}
    for i in range(len(gens)):
        for j in range(i, len(gens)):
            gap = j - i
            sf = weighted_norm(adjs[i] @ gens[j], weight, tol=pair_tol,
                               maxiter=maxiter, restarts=restarts, seed=seed)
            ss = weighted_norm(gens[i] @ adjs[j], weight, tol=pair_tol,
                               maxiter=maxiter, restarts=restarts, seed=seed)
            pairs.append(PairNorms(i, j, gap, sf, ss))
            alpha[gap] = max(alpha.get(gap, 0.0), sf)
            beta[gap] = max(beta.get(gap, 0.0), ss)

    a2_tree, _ = weight.a2_constant()
    a2_coll, _ = weight.a2_constant(collection.cubes)
    est = vector_ainf_estimate(weight, directions=directions, seed=seed)
    est_dual = vector_ainf_estimate(weight.inverse_weight(),
                                    directions=directions, seed=seed)

    norm_ts = weighted_norm(sparse_op(collection, n), weight, tol=tol,
                            maxiter=maxiter, restarts=restarts, seed=seed)

    _, _, bound_measured = cotlar_stein_bound(alpha, beta)
    gaps = sorted(alpha)
    c1 = {k: case1_pair_bound(k, a2_coll) for k in gaps}
    _, _, bound_case1 = cotlar_stein_bound(c1, c1)
    c2a = case2_alpha_table(gaps, a2_tree, est.value, collection.grid.dimension)
    c2b = case2_alpha_table(gaps, a2_tree, est_dual.value,
                            collection.grid.dimension)
    _, _, bound_case2 = cotlar_stein_bound(c2a, c2b)

    return CotlarReport(
        n_generations=decomp.n_generations, pairs=tuple(pairs),
        alpha_measured=alpha, beta_measured=beta, a2_collection=a2_coll,
        a2_tree=a2_tree, ainf=est.value, ainf_dual=est_dual.value,
        ainf_exact=est.exact and est_dual.exact, norm_ts=norm_ts,
        bound_measured=bound_measured, bound_case1=bound_case1,
        bound_case2=bound_case2, dimension=collection.grid.dimension)
