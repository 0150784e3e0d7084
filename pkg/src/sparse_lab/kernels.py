"""Numba kernels for the tree passes.

These are the only hot loops in the package: summing cell data up the tree,
scattering masked cube averages back down (the sparse operator), and segment
means over a disjoint family (one stopping generation).  Data is laid out as
(n_cells, k) with cells in Morton order, where k flattens whatever trails the
cell axis (vector components, restart columns).

The pyramid layout packs all cubes level by level, each level in Morton
order; ``offsets[l]`` is the first slot of level l (see GridSpec.level_offsets).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def pyramid_fill(cells, offsets, branch, out):
    """Fill ``out`` (n_cubes, k) with per-cube sums of ``cells`` (n_cells, k)."""
    n_levels = offsets.shape[0] - 1          # depth + 1
    depth = n_levels - 1
    n_cells, k = cells.shape
    base = offsets[depth]
    for c in range(n_cells):
        for j in range(k):
            out[base + c, j] = cells[c, j]
    for l in range(depth - 1, -1, -1):
        lo = offsets[l]
        size = offsets[l + 1] - lo
        child = offsets[l + 1]
        for q in range(size):
            s = child + q * branch
            for j in range(k):
                acc = 0.0
                for b in range(branch):
                    acc += out[s + b, j]
                out[lo + q, j] = acc


@njit(cache=True)
def masked_average_apply(cells, member, offsets, branch, inv_counts, out):
    """g(x) = sum over member cubes Q containing x of <f>_Q.

    ``member`` is a uint8 mask over the pyramid layout; ``inv_counts[l]`` is
    1 / (cells per level-l cube).  ``out`` must be (n_cells, k).
    """
    n_levels = offsets.shape[0] - 1
    depth = n_levels - 1
    n_cells, k = cells.shape
    n_cubes = offsets[n_levels]
    sums = np.empty((n_cubes, k))
    pyramid_fill(cells, offsets, branch, sums)

    acc = np.empty((n_cubes, k))
    if member[0]:
        for j in range(k):
            acc[0, j] = sums[0, j] * inv_counts[0]
    else:
        for j in range(k):
            acc[0, j] = 0.0
    for l in range(1, n_levels):
        lo = offsets[l]
        size = offsets[l + 1] - lo
        par = offsets[l - 1]
        for q in range(size):
            p = par + q // branch
            slot = lo + q
            if member[slot]:
                for j in range(k):
                    acc[slot, j] = acc[p, j] + sums[slot, j] * inv_counts[l]
            else:
                for j in range(k):
                    acc[slot, j] = acc[p, j]
    base = offsets[depth]
    for c in range(n_cells):
        for j in range(k):
            out[c, j] = acc[base + c, j]


@njit(cache=True)
def segment_average_apply(cells, starts, stops, out):
    """Scatter segment means of a disjoint cube family; zero off the family.

    ``starts``/``stops`` are the half-open cell ranges of the cubes.
    """
    n_cells, k = cells.shape
    for c in range(n_cells):
        for j in range(k):
            out[c, j] = 0.0
    for s in range(starts.shape[0]):
        a = starts[s]
        b = stops[s]
        inv = 1.0 / (b - a)
        for j in range(k):
            acc = 0.0
            for c in range(a, b):
                acc += cells[c, j]
            mean = acc * inv
            for c in range(a, b):
                out[c, j] = mean


def warmup() -> None:
    """Trigger JIT compilation on toy inputs (used before benchmarking)."""
    offsets = np.array([0, 1, 3], dtype=np.int64)
    cells = np.ones((2, 1))
    member = np.ones(3, dtype=np.uint8)
    inv_counts = np.array([0.5, 1.0])
    out = np.empty_like(cells)
    masked_average_apply(cells, member, offsets, 2, inv_counts, out)
    segment_average_apply(cells, np.array([0], dtype=np.int64),
                          np.array([2], dtype=np.int64), out)
