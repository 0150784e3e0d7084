"""Sparse cube collections.

A collection S of dyadic cubes is *sparse* when for every Q in S the maximal
S-cubes strictly inside Q (its S-children) pack at most half of Q:

    sum_{Q' in Ch_S(Q)} |Q'|  <=  |Q| / 2.

The check is exact rational arithmetic.  ``weak_report`` measures the weaker
property that the uncovered parts E_Q = Q \\ union(Ch_S(Q)) are large and
pairwise disjoint; sparseness implies the weak property at gamma = 1/2.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError
from .grid import CubeId, GridSpec, as_cube_list


@dataclass(frozen=True)
class PackingReport:
    """Result of the exact packing check."""

    ok: bool
    worst_ratio: Fraction          # max over Q of sum|Ch_S(Q)| / |Q|
    witness: CubeId | None         # cube attaining worst_ratio
    threshold: Fraction = Fraction(1, 2)


@dataclass(frozen=True)
class WeakSparseReport:
    """E_Q sizes and disjointness for a candidate gamma."""

    gamma: Fraction
    ok: bool
    min_ratio: Fraction            # min over Q of |E_Q| / |Q|
    witness: CubeId | None         # cube attaining min_ratio
    disjoint: bool                 # the E_Q are pairwise disjoint


class SparseCollection:
    """An ordered set of cubes with its induced child/parent structure.

    ``cubes`` is canonically ordered (level, then Morton).  ``children(Q)``
    are the maximal S-cubes strictly inside Q; ``parent(Q)`` is the minimal
    S-cube strictly containing Q, or None.  Construction does not require
    sparseness — call :meth:`packing_report` / :meth:`is_sparse` to check it.
    """

    def __init__(self, grid: GridSpec, cubes: Iterable[CubeId]):
        self.grid = grid
        self.cubes: tuple[CubeId, ...] = as_cube_list(grid, list(cubes))
        if not self.cubes:
            raise InvalidInputError("a sparse collection needs at least one cube")
        self._children: dict[CubeId, tuple[CubeId, ...]] = {}
        self._parent: dict[CubeId, CubeId | None] = {}
        self._build_links()

    # -- structure ---------------------------------------------------------

    def _build_links(self) -> None:
        # One pass in DFS order (range start, then level): every cube is
        # preceded by all its strict supercubes, so a stack of currently
        # open cubes yields minimal parents in O(|S|).
        grid = self.grid
        ranged = sorted(((grid.cell_range(q), q) for q in self.cubes),
                        key=lambda item: (item[0][0], item[1].level))
        kids: dict[CubeId, list[CubeId]] = {q: [] for q in self.cubes}
        stack: list[tuple[tuple[int, int], CubeId]] = []
        for (a, b), q in ranged:
            while stack and stack[-1][0][1] <= a:
                stack.pop()
            if stack:
                self._parent[q] = stack[-1][1]
                kids[stack[-1][1]].append(q)
            else:
                self._parent[q] = None
            stack.append(((a, b), q))
        self._children = {q: tuple(kids[q]) for q in self.cubes}

    def __len__(self) -> int:
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __contains__(self, cube: CubeId) -> bool:
        return cube in self._children

    def children(self, cube: CubeId) -> tuple[CubeId, ...]:
        return self._children[cube]

    def parent(self, cube: CubeId) -> CubeId | None:
        return self._parent[cube]

    @functools.cached_property
    def maximal_cubes(self) -> tuple[CubeId, ...]:
        """Cubes with no strict S-supercube; pairwise disjoint."""
        return tuple(q for q in self.cubes if self._parent[q] is None)

    @functools.cached_property
    def member_mask(self) -> np.ndarray:
        """uint8 mask over the grid's pyramid layout."""
        mask = np.zeros(self.grid.n_cubes, dtype=np.uint8)
        for q in self.cubes:
            mask[self.grid.pyramid_index(q)] = 1
        return mask

    def restricted_to(self, cube: CubeId) -> tuple[CubeId, ...]:
        """Members contained in ``cube`` (including itself if a member)."""
        return tuple(q for q in self.cubes if self.grid.contains(cube, q))

    # -- sparseness --------------------------------------------------------

    def packing_report(self) -> PackingReport:
        grid = self.grid
        worst: Fraction = Fraction(0)
        witness: CubeId | None = None
        for q in self.cubes:
            covered = sum((grid.measure(c) for c in self._children[q]),
                          Fraction(0))
            ratio = covered / grid.measure(q)
            if witness is None or ratio > worst:
                worst, witness = ratio, q
        return PackingReport(ok=worst <= Fraction(1, 2), worst_ratio=worst,
                             witness=witness)

    def is_sparse(self) -> bool:
        return self.packing_report().ok

    def weak_report(self, gamma: Fraction | float = Fraction(1, 2)) -> WeakSparseReport:
        gamma = Fraction(gamma)
        grid = self.grid
        # Coverage counts of the union of E_Q, built from one difference
        # array: each Q adds +1 on its range, -1 on each S-child range.
        diff = np.zeros(grid.n_cells + 1, dtype=np.int64)
        min_ratio: Fraction | None = None
        witness: CubeId | None = None
        for q in self.cubes:
            a, b = grid.cell_range(q)
            diff[a] += 1
            diff[b] -= 1
            cells_e = b - a
            for c in self._children[q]:
                ca, cb = grid.cell_range(c)
                diff[ca] -= 1
                diff[cb] += 1
                cells_e -= cb - ca
            ratio = Fraction(cells_e, b - a)
            if min_ratio is None or ratio < min_ratio:
                min_ratio, witness = ratio, q
        coverage = np.cumsum(diff[:-1])
        disjoint = bool(coverage.max(initial=0) <= 1)
        assert min_ratio is not None
        return WeakSparseReport(gamma=gamma, ok=disjoint and min_ratio >= gamma,
                                min_ratio=min_ratio, witness=witness,
                                disjoint=disjoint)


# -- generators -------------------------------------------------------------


def chain_collection(grid: GridSpec, seed: int = 0) -> SparseCollection:
    """A nested chain root = Q_0 ⊃ Q_1 ⊃ ... ⊃ Q_depth, one seeded child per
    level.  Each step halves the measure exactly in d = 1; in higher
    dimension the packing ratio is 2^-d per step."""
    rng = np.random.default_rng(seed)
    cubes = [grid.root()]
    for _ in range(grid.depth):
        kids = grid.children(cubes[-1])
        cubes.append(kids[int(rng.integers(len(kids)))])
    return SparseCollection(grid, cubes)


def leftmost_chain(grid: GridSpec, seed: int = 0) -> SparseCollection:
    """The deterministic chain into the origin corner: [0, 2^-l)^d for every
    level l.  The adapted family for weights singular at 0 (``seed`` is
    accepted for interface uniformity and ignored)."""
    del seed
    return SparseCollection(
        grid, [CubeId(l, (0,) * grid.dimension) for l in range(grid.depth + 1)])


def maximal_collection(grid: GridSpec, seed: int = 0) -> SparseCollection:
    """The grandchild packing that attains the 1/2 threshold with equality.

    Starting from the root, every member cube recruits exactly half of its
    4^d grandchildren (seeded choice), so sum |Ch_S(Q)| = |Q|/2 for every
    member with descendants.  Stops when grandchildren would exceed depth.
    """
    rng = np.random.default_rng(seed)
    cubes: list[CubeId] = []
    frontier = [grid.root()]
    while frontier:
        cubes.extend(frontier)
        nxt: list[CubeId] = []
        if frontier[0].level + 2 <= grid.depth:
            for q in frontier:
                grand = [g for c in grid.children(q) for g in grid.children(c)]
                take = len(grand) // 2
                picked = rng.choice(len(grand), size=take, replace=False)
                nxt.extend(grand[i] for i in sorted(picked))
        frontier = nxt
    return SparseCollection(grid, cubes)


def random_collection(grid: GridSpec, seed: int = 0,
                      accept: float = 0.7) -> SparseCollection:
    """Seeded greedy sampler: visit cubes level by level in shuffled order,
    keep a candidate with probability ``accept`` whenever adding it leaves
    the packing condition intact.  The root is always included."""
    if not 0.0 < accept <= 1.0:
        raise InvalidInputError(f"accept probability out of (0,1]: {accept}")
    rng = np.random.default_rng(seed)
    grid_measure = grid.measure

    taken: list[CubeId] = [grid.root()]
    # child load per member, as exact fractions of the member's measure
    load: dict[CubeId, Fraction] = {grid.root(): Fraction(0)}
    by_range: list[tuple[tuple[int, int], CubeId]] = [(grid.cell_range(grid.root()),
                                                       grid.root())]

    def deepest_member_containing(q: CubeId) -> CubeId:
        best = taken[0]
        for (a, b), m in by_range:
            qa, qb = grid.cell_range(q)
            if a <= qa and qb <= b and m.level > best.level:
                best = m
        return best

    for level in range(1, grid.depth + 1):
        codes = rng.permutation(grid.level_size(level))
        for code in codes:
            if rng.random() > accept:
                continue
            q = grid.cube_from_morton(level, int(code))
            host = deepest_member_containing(q)
            added = grid_measure(q) / grid_measure(host)
            if load[host] + added > Fraction(1, 2):
                continue
            load[host] += added
            load[q] = Fraction(0)
            taken.append(q)
            by_range.append((grid.cell_range(q), q))
    return SparseCollection(grid, taken)


_GENERATORS = {
    "chain": chain_collection,
    "leftchain": leftmost_chain,
    "maximal": maximal_collection,
    "random": random_collection,
}


def gen_collection(grid: GridSpec, kind: str, seed: int = 0,
                   **params) -> SparseCollection:
    """Build a named collection kind; see the individual generators."""
    try:
        fn = _GENERATORS[kind]
    except KeyError:
        raise InvalidInputError(
            f"unknown collection kind {kind!r}; have {sorted(_GENERATORS)}")
    return fn(grid, seed=seed, **params)
