"""Stopping-time decomposition of a sparse collection.

The collection's nesting graph (edges Q -> Ch_S(Q)) is a forest: every
connected component has a unique maximal cube.  Generation 0 consists of
those component roots, and generation n+1 gathers the S-children of
generation n, so generation n is exactly the set of members at S-tree depth
n.  Members of one generation are pairwise disjoint.

For a single member Q, ``generation_of(Q, n)`` is the n-fold S-children
iterate below Q, with the strict convention that n = 0 gives the empty
family (the statement "generation n packs at most 2^-n of Q" is then
non-trivial from n = 1 on).  The packing is checked in exact arithmetic by
:meth:`Decomposition.decay_report`.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

from .collection import SparseCollection
from .errors import InvalidInputError
from .grid import CubeId


@dataclass(frozen=True)
class DecayReport:
    """Worst case of  sum_{Q' in gen_n(Q)} |Q'|  vs  2^-n |Q|, exact."""

    ok: bool
    worst_ratio: Fraction            # max over (Q, n) of lhs / (2^-n |Q|)
    witness: tuple[CubeId, int] | None
    attained: bool                   # worst_ratio == 1 somewhere


class Decomposition:
    """Generations, depths and the generation distance of a collection."""

    def __init__(self, collection: SparseCollection):
        self.collection = collection
        self.grid = collection.grid
        depth: dict[CubeId, int] = {}
        for q in collection.cubes:           # parents precede children
            p = collection.parent(q)
            depth[q] = 0 if p is None else depth[p] + 1
        self.depth_of: dict[CubeId, int] = depth
        n_gen = max(depth.values()) + 1
        gens: list[list[CubeId]] = [[] for _ in range(n_gen)]
        for q in collection.cubes:
            gens[depth[q]].append(q)
        #: generations[n] lists the members at S-tree depth n, canonical order
        self.generations: tuple[tuple[CubeId, ...], ...] = tuple(
            tuple(g) for g in gens)

    @property
    def roots(self) -> tuple[CubeId, ...]:
        return self.generations[0]

    @property
    def n_generations(self) -> int:
        return len(self.generations)

    def distance(self, outer: CubeId, inner: CubeId) -> int:
        """Generation distance for nested members: inner in gen_dist(outer)."""
        s = self.collection
        if outer not in s or inner not in s:
            raise InvalidInputError("distance is defined for members only")
        if not self.grid.contains(outer, inner):
            raise InvalidInputError(
                f"distance needs nested cubes, got {outer} vs {inner}")
        return self.depth_of[inner] - self.depth_of[outer]

    def generation_of(self, cube: CubeId, n: int) -> tuple[CubeId, ...]:
        """n-fold S-children iterate below ``cube``; empty for n = 0."""
        if n < 0:
            raise InvalidInputError(f"generation index must be >= 0, got {n}")
        if n == 0:
            return ()
        frontier = self.collection.children(cube)
        for _ in range(n - 1):
            frontier = tuple(c for q in frontier
                             for c in self.collection.children(q))
        return frontier

    @functools.cached_property
    def _subtree_order(self) -> tuple[CubeId, ...]:
        """Members ordered so children come before parents."""
        return tuple(sorted(self.collection.cubes,
                            key=lambda q: -self.depth_of[q]))

    def decay_report(self) -> DecayReport:
        """Exact check of the generation packing below every member.

        For each member Q and each n >= 1 with a non-empty generation, the
        measures of gen_n(Q) must sum to at most 2^-n |Q|.  Computed in one
        child-to-parent sweep: the per-generation mass vectors of Q are the
        shifted sums of its S-children's vectors.
        """
        grid, s = self.grid, self.collection
        mass: dict[CubeId, list[Fraction]] = {}
        worst = Fraction(0)
        witness: tuple[CubeId, int] | None = None
        attained = False
        for q in self._subtree_order:
            vec: list[Fraction] = []
            for c in s.children(q):
                sub = mass[c]
                if len(vec) < len(sub) + 1:
                    vec.extend([Fraction(0)] * (len(sub) + 1 - len(vec)))
                vec[0] += grid.measure(c)
                for i, m in enumerate(sub):
                    vec[i + 1] += m
            mass[q] = vec
            mq = grid.measure(q)
            for i, m in enumerate(vec):
                ratio = m * (1 << (i + 1)) / mq      # lhs / (2^-(i+1) |Q|)
                if witness is None or ratio > worst:
                    worst, witness = ratio, (q, i + 1)
                if ratio == 1:
                    attained = True
        return DecayReport(ok=worst <= 1, worst_ratio=worst,
                           witness=witness, attained=attained)


def decompose(collection: SparseCollection) -> Decomposition:
    return Decomposition(collection)
