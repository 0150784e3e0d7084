"""Finite dyadic tree over the unit cube.

A grid is determined by a dimension ``d`` and a depth ``L``.  Its cubes are

    Q(level, k) = prod_j [ k_j * 2^-level, (k_j + 1) * 2^-level ),
    0 <= level <= L,  0 <= k_j < 2^level,

and the *cells* are the 2^(L*d) cubes of the finest level.  Cells are indexed
by Morton (Z-order) code, which makes the cells of any cube one contiguous
range and a cube's children the ``2^d`` consecutive code blocks inside it.
All per-cell data in this package is stored in Morton order.

Measures are exact: :func:`GridSpec.measure` returns a `fractions.Fraction`.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .config import MAX_CELLS
from .errors import InvalidInputError


@dataclass(frozen=True, order=True)
class CubeId:
    """A dyadic cube: level plus one index per coordinate."""

    level: int
    index: tuple[int, ...]

    def __str__(self) -> str:
        return format_cube(self)


def format_cube(cube: CubeId) -> str:
    """Serialize as ``"level:k1,...,kd"``, e.g. ``"3:5,1"``."""
    return f"{cube.level}:{','.join(str(k) for k in cube.index)}"


def parse_cube(text: str) -> CubeId:
    """Inverse of :func:`format_cube`; raises InvalidInputError on junk."""
    try:
        level_part, _, index_part = text.strip().partition(":")
        level = int(level_part)
        index = tuple(int(tok) for tok in index_part.split(","))
    except (ValueError, AttributeError) as exc:
        raise InvalidInputError(f"bad cube literal {text!r}") from exc
    if level < 0 or any(k < 0 for k in index):
        raise InvalidInputError(f"bad cube literal {text!r}")
    return CubeId(level, index)


@dataclass(frozen=True)
class GridSpec:
    """Dyadic tree over [0,1)^dimension with ``depth`` refinement levels."""

    dimension: int
    depth: int

    def __post_init__(self):
        if not 1 <= self.dimension <= 3:
            raise InvalidInputError(f"dimension must be 1..3, got {self.dimension}")
        if self.depth < 1:
            raise InvalidInputError(f"depth must be >= 1, got {self.depth}")
        if 1 << (self.depth * self.dimension) > MAX_CELLS:
            raise InvalidInputError(
                f"grid with 2^{self.depth * self.dimension} cells exceeds the "
                f"cap of {MAX_CELLS}")

    # -- sizes ------------------------------------------------------------

    @property
    def branch(self) -> int:
        """Children per cube, 2^dimension."""
        return 1 << self.dimension

    @property
    def n_cells(self) -> int:
        return 1 << (self.depth * self.dimension)

    @property
    def n_cubes(self) -> int:
        """Cubes over all levels: (branch^(depth+1) - 1) / (branch - 1)."""
        return ((self.branch ** (self.depth + 1)) - 1) // (self.branch - 1)

    def level_size(self, level: int) -> int:
        return 1 << (level * self.dimension)

    @functools.cached_property
    def level_offsets(self) -> np.ndarray:
        """Start of each level in the pyramid layout; length depth+2."""
        sizes = [self.level_size(l) for l in range(self.depth + 1)]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    # -- cubes ------------------------------------------------------------

    def root(self) -> CubeId:
        return CubeId(0, (0,) * self.dimension)

    def validate_cube(self, cube: CubeId) -> CubeId:
        if not (0 <= cube.level <= self.depth) or len(cube.index) != self.dimension \
                or any(not 0 <= k < (1 << cube.level) for k in cube.index):
            raise InvalidInputError(f"cube {cube} not in {self}")
        return cube

    def measure(self, cube: CubeId) -> Fraction:
        """Lebesgue measure, exact."""
        return Fraction(1, 1 << (cube.level * self.dimension))

    def parent(self, cube: CubeId) -> CubeId | None:
        if cube.level == 0:
            return None
        return CubeId(cube.level - 1, tuple(k >> 1 for k in cube.index))

    def children(self, cube: CubeId) -> list[CubeId]:
        """The 2^d children in Morton order of their sub-index."""
        if cube.level >= self.depth:
            return []
        d = self.dimension
        out = []
        for j in range(self.branch):
            idx = tuple(2 * cube.index[i] + ((j >> i) & 1) for i in range(d))
            out.append(CubeId(cube.level + 1, idx))
        return out

    def contains(self, outer: CubeId, inner: CubeId) -> bool:
        """outer ⊇ inner (dyadic cubes are nested or disjoint)."""
        if outer.level > inner.level:
            return False
        shift = inner.level - outer.level
        return all((ki >> shift) == ko
                   for ki, ko in zip(inner.index, outer.index))

    def ancestors(self, cube: CubeId) -> list[CubeId]:
        """Strict ancestors, root first."""
        chain = []
        for level in range(cube.level):
            shift = cube.level - level
            chain.append(CubeId(level, tuple(k >> shift for k in cube.index)))
        return chain

    def iter_cubes(self) -> Iterator[CubeId]:
        """All cubes, by level then Morton code."""
        for level in range(self.depth + 1):
            for code in range(self.level_size(level)):
                yield self.cube_from_morton(level, code)

    # -- Morton indexing ---------------------------------------------------

    def morton(self, cube: CubeId) -> int:
        """Interleaved code at the cube's own level: bit b of k_i goes to
        bit b*d + i."""
        d = self.dimension
        if d == 1:
            return cube.index[0]
        code = 0
        for i, k in enumerate(cube.index):
            b = 0
            while k:
                code |= (k & 1) << (b * d + i)
                k >>= 1
                b += 1
        return code

    def cube_from_morton(self, level: int, code: int) -> CubeId:
        d = self.dimension
        if d == 1:
            return CubeId(level, (code,))
        index = [0] * d
        for b in range(level):
            for i in range(d):
                index[i] |= ((code >> (b * d + i)) & 1) << b
        return CubeId(level, tuple(index))

    def pyramid_index(self, cube: CubeId) -> int:
        """Slot of the cube in the level-packed pyramid layout."""
        return int(self.level_offsets[cube.level]) + self.morton(cube)

    def cube_from_pyramid(self, slot: int) -> CubeId:
        """Inverse of :meth:`pyramid_index`."""
        if not 0 <= slot < self.n_cubes:
            raise InvalidInputError(f"pyramid slot {slot} out of range")
        level = int(np.searchsorted(self.level_offsets, slot, side="right")) - 1
        return self.cube_from_morton(level, slot - int(self.level_offsets[level]))

    def cell_range(self, cube: CubeId) -> tuple[int, int]:
        """Half-open range of leaf Morton codes covered by the cube."""
        span = (self.depth - cube.level) * self.dimension
        start = self.morton(cube) << span
        return start, start + (1 << span)

    def cell_count(self, cube: CubeId) -> int:
        return 1 << ((self.depth - cube.level) * self.dimension)

    @functools.cached_property
    def cell_centers(self) -> np.ndarray:
        """(n_cells, dimension) midpoints of the cells, Morton order."""
        d, L = self.dimension, self.depth
        codes = np.arange(self.n_cells, dtype=np.int64)
        coords = np.empty((self.n_cells, d))
        h = 2.0 ** (-L)
        for i in range(d):
            k = np.zeros_like(codes)
            for b in range(L):
                k |= ((codes >> (b * d + i)) & 1) << b
            coords[:, i] = (k + 0.5) * h
        return coords

    @functools.cached_property
    def inv_cell_counts(self) -> np.ndarray:
        """1 / cells-per-cube for each level, length depth+1."""
        return np.array([2.0 ** (-(self.depth - l) * self.dimension)
                         for l in range(self.depth + 1)])

    def __str__(self) -> str:
        return f"grid(d={self.dimension}, L={self.depth})"


def common_grid(*specs: GridSpec) -> GridSpec:
    """Assert all arguments share one grid and return it."""
    first = specs[0]
    for other in specs[1:]:
        if other != first:
            raise InvalidInputError(f"incompatible grids: {first} vs {other}")
    return first


def pyramid_sums_np(grid: GridSpec, cell_values: np.ndarray) -> np.ndarray:
    """Sum per-cell data over every cube of the tree.

    ``cell_values`` has shape (n_cells, ...); the result has the pyramid
    layout (n_cubes, ...): level l occupies ``level_offsets[l]:level_offsets[l+1]``
    in Morton order.  Plain numpy — used for caches built once per object,
    the hot per-apply path lives in :mod:`sparse_lab.kernels`.
    """
    offs = grid.level_offsets
    out = np.empty((grid.n_cubes,) + cell_values.shape[1:],
                   dtype=cell_values.dtype)
    out[offs[grid.depth]:offs[grid.depth + 1]] = cell_values
    level = cell_values
    for l in range(grid.depth - 1, -1, -1):
        level = level.reshape((grid.level_size(l), grid.branch)
                              + level.shape[1:]).sum(axis=1)
        out[offs[l]:offs[l + 1]] = level
    return out


def cube_slice(grid: GridSpec, cube: CubeId, arr: np.ndarray) -> np.ndarray:
    """View of per-cell data restricted to a cube."""
    a, b = grid.cell_range(cube)
    return arr[a:b]


def as_cube_list(grid: GridSpec, cubes: Sequence[CubeId]) -> tuple[CubeId, ...]:
    """Validate, dedupe and sort cubes into canonical order."""
    seen = set()
    for q in cubes:
        grid.validate_cube(q)
        if q in seen:
            raise InvalidInputError(f"duplicate cube {q}")
        seen.add(q)
    return tuple(sorted(seen, key=lambda q: (q.level, grid.morton(q))))
