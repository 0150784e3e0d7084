"""Matrix weights on the tree and their characteristic constants.

A weight is a symmetric positive definite n x n matrix per cell.  Averages
over cubes come from one pyramid of sums; the two-sided characteristic

    a2(Q) = lambda_max( <W>_Q^(1/2) <W^-1>_Q <W>_Q^(1/2) )

is cached for every cube at once, so the constant of any cube family is a
masked maximum.  The flatness constant (Fujii-Wilson style) is exact for
scalar weights via a maximal-function sweep; for matrix weights the module
reports a certified lower estimate obtained by sweeping scalar traces
(W e, e) over a structured family of directions.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .config import EIG_FLOOR
from .errors import InvalidInputError
from .grid import CubeId, GridSpec, pyramid_sums_np

__all__ = [
    "MatrixField", "MatrixWeight", "AinfEstimate", "WeightConstants",
    "scalar_ainf", "vector_ainf_estimate", "weight_constants", "gen_weight",
    "sqrt_psd", "expm_sym",
]


def sqrt_psd(mats: np.ndarray) -> np.ndarray:
    """Batched symmetric PSD square root via eigh (negative dust clipped)."""
    vals, vecs = np.linalg.eigh(mats)
    root = np.sqrt(np.clip(vals, 0.0, None))
    return np.einsum("...ij,...j,...kj->...ik", vecs, root, vecs)


def expm_sym(mats: np.ndarray) -> np.ndarray:
    """Batched matrix exponential of symmetric matrices."""
    vals, vecs = np.linalg.eigh(mats)
    return np.einsum("...ij,...j,...kj->...ik", vecs, np.exp(vals), vecs)


class MatrixField:
    """A matrix-valued step function: one n x n matrix per cell."""

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None, None]
        if values.ndim != 3 or values.shape[0] != grid.n_cells \
                or values.shape[1] != values.shape[2]:
            raise InvalidInputError(
                f"field values must be (n_cells, n, n), got {values.shape}")
        if not np.isfinite(values).all():
            raise InvalidInputError("field contains non-finite entries")
        self.grid = grid
        self.values = values

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @functools.cached_property
    def pyr_sums(self) -> np.ndarray:
        """(n_cubes, n, n) cell sums over every cube."""
        return pyramid_sums_np(self.grid, self.values)

    @functools.cached_property
    def pyr_avg(self) -> np.ndarray:
        """(n_cubes, n, n) averages over every cube."""
        inv = self._per_cube_inv_counts
        return self.pyr_sums * inv[:, None, None]

    @property
    def _per_cube_inv_counts(self) -> np.ndarray:
        grid = self.grid
        reps = np.diff(grid.level_offsets)
        return np.repeat(grid.inv_cell_counts, reps)

    def average(self, cube: CubeId) -> np.ndarray:
        return self.pyr_avg[self.grid.pyramid_index(cube)]

    def transpose_field(self) -> "MatrixField":
        return MatrixField(self.grid, self.values.transpose(0, 2, 1).copy())


class MatrixWeight(MatrixField):
    """SPD matrix field with averaging caches and characteristic constants.

    ``eig_floor`` is a validation threshold: construction fails if any cell
    has an eigenvalue below it.  Pass 0 to require mere positivity (used for
    inverses of already-validated weights).
    """

    def __init__(self, grid: GridSpec, values: np.ndarray, *,
                 eig_floor: float = EIG_FLOOR):
        super().__init__(grid, values)
        asym = np.abs(self.values - self.values.transpose(0, 2, 1)).max()
        scale = max(1.0, np.abs(self.values).max())
        if asym > 1e-10 * scale:
            raise InvalidInputError(
                f"weight cells not symmetric (max asymmetry {asym:.3e})")
        self.values = np.ascontiguousarray(
            (self.values + self.values.transpose(0, 2, 1)) / 2.0)
        self.eig_floor = float(eig_floor)
        eigs = np.linalg.eigvalsh(self.values)
        self.min_eig = float(eigs.min())
        if self.min_eig < self.eig_floor or self.min_eig <= 0.0:
            worst = int(np.unravel_index(eigs.argmin(), eigs.shape)[0])
            raise InvalidInputError(
                f"weight not uniformly positive: min eigenvalue "
                f"{self.min_eig:.3e} at cell {worst} is below the floor "
                f"{self.eig_floor:.3e}")

    # -- cell caches -------------------------------------------------------

    @functools.cached_property
    def cell_inv(self) -> np.ndarray:
        return np.linalg.inv(self.values)

    @functools.cached_property
    def cell_sqrt(self) -> np.ndarray:
        return sqrt_psd(self.values)

    @functools.cached_property
    def cell_inv_sqrt(self) -> np.ndarray:
        return np.linalg.inv(self.cell_sqrt)

    # -- cube caches -------------------------------------------------------

    @functools.cached_property
    def pyr_inv_sums(self) -> np.ndarray:
        return pyramid_sums_np(self.grid, self.cell_inv)

    @functools.cached_property
    def pyr_inv_avg(self) -> np.ndarray:
        return self.pyr_inv_sums * self._per_cube_inv_counts[:, None, None]

    def average_inv(self, cube: CubeId) -> np.ndarray:
        """<W^-1>_Q (not the inverse of <W>_Q)."""
        return self.pyr_inv_avg[self.grid.pyramid_index(cube)]

    @functools.cached_property
    def a2_per_cube(self) -> np.ndarray:
        """(n_cubes,) two-sided characteristic of every cube."""
        roots = sqrt_psd(self.pyr_avg)
        inner = np.einsum("qij,qjk,qkl->qil", roots, self.pyr_inv_avg, roots)
        return np.linalg.eigvalsh(inner)[:, -1]

    def a2_constant(self, cubes=None) -> tuple[float, CubeId]:
        """Max of a2(Q) over a cube family (default: all tree cubes)."""
        grid = self.grid
        if cubes is None:
            slot = int(self.a2_per_cube.argmax())
            return float(self.a2_per_cube[slot]), grid.cube_from_pyramid(slot)
        slots = np.fromiter((grid.pyramid_index(q) for q in cubes),
                            dtype=np.int64)
        if slots.size == 0:
            raise InvalidInputError("a2_constant of an empty family")
        local = self.a2_per_cube[slots]
        best = int(local.argmax())
        return float(local[best]), grid.cube_from_pyramid(int(slots[best]))

    def inverse_weight(self) -> "MatrixWeight":
        return MatrixWeight(self.grid, self.cell_inv, eig_floor=0.0)

    def direction_weight(self, e: np.ndarray) -> "MatrixWeight":
        """Scalar weight x -> (W(x) e, e) for a unit direction e."""
        e = np.asarray(e, dtype=np.float64).reshape(self.n)
        w = np.einsum("cij,i,j->c", self.values, e, e)
        return MatrixWeight(self.grid, w, eig_floor=0.0)


# -- flatness constants ------------------------------------------------------


def _ainf_sweep(grid: GridSpec, avg: np.ndarray, sums: np.ndarray
                ) -> tuple[np.ndarray, np.ndarray]:
    """Fujii-Wilson sweep for K scalar weights at once.

    ``avg``/``sums`` are (n_cubes, K) pyramid averages and sums.  For every
    start cube Q the maximal function of 1_Q w inside Q is the running max
    of the ancestor-chain averages from Q's level down; its integral over Q
    is a block sum at the leaf level.  Returns per-weight maxima (K,) and
    the pyramid slot of a witness cube (K,).
    """
    offs, branch, L = grid.level_offsets, grid.branch, grid.depth
    best = np.full(avg.shape[1], -np.inf)
    witness = np.zeros(avg.shape[1], dtype=np.int64)
    for s in range(L + 1):
        m = avg[offs[s]:offs[s + 1]].copy()
        for l in range(s + 1, L + 1):
            m = np.repeat(m, branch, axis=0)
            np.maximum(m, avg[offs[l]:offs[l + 1]], out=m)
        n_start = offs[s + 1] - offs[s]
        integral = m.reshape(n_start, -1, m.shape[1]).sum(axis=1)
        ratios = integral / sums[offs[s]:offs[s + 1]]
        level_best = ratios.max(axis=0)
        level_arg = ratios.argmax(axis=0)
        improved = level_best > best
        best = np.where(improved, level_best, best)
        witness = np.where(improved, offs[s] + level_arg, witness)
    return best, witness


def scalar_ainf(weight: MatrixWeight) -> tuple[float, CubeId]:
    """Exact flatness constant of a scalar weight:
    max over cubes Q of (1/w(Q)) * integral over Q of the maximal function
    of 1_Q w.  Always >= 1."""
    if weight.n != 1:
        raise InvalidInputError("scalar_ainf needs n = 1; use "
                                "vector_ainf_estimate for matrix weights")
    avg = weight.pyr_avg[:, :, 0]
    sums = weight.pyr_sums[:, :, 0]
    vals, slots = _ainf_sweep(weight.grid, avg, sums)
    return float(vals[0]), weight.grid.cube_from_pyramid(int(slots[0]))


@dataclass(frozen=True)
class AinfEstimate:
    value: float
    exact: bool
    method: str
    witness: CubeId | None = None


_BANK_CUBES = 64


def _direction_bank(weight: MatrixWeight, directions: int,
                    seed: int) -> np.ndarray:
    """(K, n) unit directions: coordinate axes, eigenvectors of the cube
    averages of W and W^-1 on the shallowest levels, then ``directions``
    seeded random unit vectors.  The bank is prefix-stable in ``directions``
    for a fixed seed.  The eigenvector harvest is capped at the first
    ``_BANK_CUBES`` pyramid slots to keep the sweep linear in the grid."""
    n = weight.n
    banks = [np.eye(n)]
    for mats in (weight.pyr_avg, weight.pyr_inv_avg):
        _, vecs = np.linalg.eigh(mats[:_BANK_CUBES])
        banks.append(vecs.transpose(0, 2, 1).reshape(-1, n))
    if directions > 0:
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((directions, n))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        banks.append(raw)
    return np.concatenate(banks, axis=0)


def vector_ainf_estimate(weight: MatrixWeight, *, directions: int = 64,
                         seed: int = 0, chunk: int = 256) -> AinfEstimate:
    """Certified lower estimate of the matrix flatness constant.

    Every direction e gives the scalar weight (W e, e) whose exact constant
    is a lower bound for the matrix constant; the estimate is the max over
    the direction bank.  Exact (and flagged so) for n = 1.
    """
    if weight.n == 1:
        value, witness = scalar_ainf(weight)
        return AinfEstimate(value, True, "scalar-exact", witness)
    bank = _direction_bank(weight, directions, seed)
    grid = weight.grid
    reps = np.diff(grid.level_offsets)
    inv_counts = np.repeat(grid.inv_cell_counts, reps)
    best, best_slot = -np.inf, 0
    for lo in range(0, bank.shape[0], chunk):
        E = bank[lo:lo + chunk]
        traces = np.einsum("cij,ki,kj->ck", weight.values, E, E)
        sums = pyramid_sums_np(grid, traces)
        avg = sums * inv_counts[:, None]
        vals, slots = _ainf_sweep(grid, avg, sums)
        k = int(vals.argmax())
        if vals[k] > best:
            best, best_slot = float(vals[k]), int(slots[k])
    return AinfEstimate(best, False,
                        f"directions(bank={bank.shape[0]}, seed={seed})",
                        grid.cube_from_pyramid(best_slot))


@dataclass(frozen=True)
class WeightConstants:
    """Characteristic constants of one weight, with exactness flags."""

    n: int
    a2: float                      # over the given collection
    a2_witness: CubeId
    a2_tree: float                 # over all tree cubes
    a2_tree_witness: CubeId
    ainf: float
    ainf_dual: float
    ainf_exact: bool
    ainf_method: str


def weight_constants(weight: MatrixWeight, cubes=None, *,
                     directions: int = 64, seed: int = 0) -> WeightConstants:
    """Bundle the constants used by the operator-norm bounds."""
    a2_tree, wit_tree = weight.a2_constant()
    if cubes is None:
        a2, wit = a2_tree, wit_tree
    else:
        a2, wit = weight.a2_constant(cubes)
    est = vector_ainf_estimate(weight, directions=directions, seed=seed)
    est_dual = vector_ainf_estimate(weight.inverse_weight(),
                                    directions=directions, seed=seed)
    return WeightConstants(n=weight.n, a2=a2, a2_witness=wit,
                           a2_tree=a2_tree, a2_tree_witness=wit_tree,
                           ainf=est.value, ainf_dual=est_dual.value,
                           ainf_exact=est.exact and est_dual.exact,
                           ainf_method=est.method)


# -- generators ---------------------------------------------------------------


def _power_cell_averages(grid: GridSpec, alpha: float,
                         center: tuple[float, ...]) -> np.ndarray:
    """Cell averages of |x - c|^alpha: exact in d = 1, midpoint rule else."""
    if alpha <= -1.0:
        raise InvalidInputError(f"power weight needs alpha > -1, got {alpha}")
    if grid.dimension == 1:
        c = center[0]
        h = 2.0 ** (-grid.depth)
        edges = np.arange(grid.n_cells + 1) * h - c

        def F(t):
            return np.sign(t) * np.abs(t) ** (alpha + 1.0) / (alpha + 1.0)

        prim = F(edges)
        return (prim[1:] - prim[:-1]) / h
    dist = np.linalg.norm(grid.cell_centers - np.asarray(center), axis=1)
    return dist ** alpha


def gen_weight(grid: GridSpec, n: int, kind: str, *, seed: int = 0,
               eig_floor: float = EIG_FLOOR, **params) -> MatrixWeight:
    """Seeded weight generators.

    kinds:
      constant(value=1.0)            scalar, diagonal list, or full matrix
      power(alpha, center=0...)      scalar |x-c|^alpha, exact cells in d=1
      diag(components=[{...}, ...])  diagonal of n scalar weights
      rotating2d(alpha=0.6, speed=1.0)  rotating eigenframe, n = 2
      random_logsym(spread=0.8)      exp of seeded symmetric Gaussian cells
    """
    N = grid.n_cells
    if kind == "constant":
        value = params.pop("value", 1.0)
        _no_extra(params, kind)
        mat = np.asarray(value, dtype=np.float64)
        if mat.ndim == 0:
            mat = float(mat) * np.eye(n)
        elif mat.ndim == 1:
            if mat.shape != (n,):
                raise InvalidInputError("constant diagonal needs n entries")
            mat = np.diag(mat)
        elif mat.shape != (n, n):
            raise InvalidInputError("constant matrix must be n x n")
        values = np.broadcast_to(mat, (N, n, n)).copy()
    elif kind == "power":
        if n != 1:
            raise InvalidInputError("power weight is scalar; wrap in diag")
        alpha = float(params.pop("alpha"))
        center = params.pop("center", (0.0,) * grid.dimension)
        if np.ndim(center) == 0:
            center = (float(center),) * grid.dimension
        _no_extra(params, kind)
        values = _power_cell_averages(grid, alpha, tuple(center))
    elif kind == "diag":
        components = params.pop("components")
        _no_extra(params, kind)
        if len(components) != n:
            raise InvalidInputError(f"diag needs {n} component entries")
        values = np.zeros((N, n, n))
        for i, comp in enumerate(components):
            comp = dict(comp)
            comp_kind = comp.pop("kind")
            comp_seed = comp.pop("seed", seed + 17 * i)
            scalar = gen_weight(grid, 1, comp_kind, seed=comp_seed,
                                eig_floor=0.0, **comp)
            values[:, i, i] = scalar.values[:, 0, 0]
    elif kind == "rotating2d":
        if n != 2:
            raise InvalidInputError("rotating2d needs n = 2")
        alpha = float(params.pop("alpha", 0.6))
        speed = float(params.pop("speed", 1.0))
        _no_extra(params, kind)
        t = grid.cell_centers[:, 0]
        theta = 2.0 * np.pi * speed * t
        c, s = np.cos(theta), np.sin(theta)
        lam_hi, lam_lo = t ** (-alpha), t ** alpha
        values = np.empty((N, 2, 2))
        values[:, 0, 0] = c * c * lam_hi + s * s * lam_lo
        values[:, 1, 1] = s * s * lam_hi + c * c * lam_lo
        values[:, 0, 1] = values[:, 1, 0] = c * s * (lam_hi - lam_lo)
    elif kind == "random_logsym":
        spread = float(params.pop("spread", 0.8))
        _no_extra(params, kind)
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((N, n, n))
        values = expm_sym(spread * (g + g.transpose(0, 2, 1)) / 2.0)
    else:
        raise InvalidInputError(f"unknown weight kind {kind!r}")
    return MatrixWeight(grid, values, eig_floor=eig_floor)


def _no_extra(params: dict, kind: str) -> None:
    if params:
        raise InvalidInputError(
            f"unknown parameters for weight kind {kind!r}: {sorted(params)}")
