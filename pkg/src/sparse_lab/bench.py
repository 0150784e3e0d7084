"""Timing probes for the apply kernels.

Separated from the tests so the CLI can expose them; the numbers these
produce gate the scaling acceptance checks (absolute apply time at the
deepest standard grid and the fitted log-log slope across depths).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .collection import gen_collection
from .grid import GridSpec
from .kernels import warmup
from .operators import sparse_op

__all__ = ["ApplyTiming", "time_apply", "ScalingFit", "scaling_fit"]


@dataclass(frozen=True)
class ApplyTiming:
    dimension: int
    depth: int
    n: int
    n_cells: int
    seconds: float          # best-of-repeat wall time for one apply
    repeat: int


def time_apply(dimension: int = 1, depth: int = 14, n: int = 1, *,
               collection_kind: str = "maximal", seed: int = 0,
               repeat: int = 5) -> ApplyTiming:
    """Best-of-``repeat`` wall time of one sparse-operator apply.

    Kernels are warmed up (JIT-compiled) before the clock starts, and one
    untimed apply primes the caches.
    """
    warmup()
    grid = GridSpec(dimension, depth)
    coll = gen_collection(grid, collection_kind, seed=seed)
    op = sparse_op(coll, n)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((grid.n_cells, n))
    op.apply(f)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        op.apply(f)
        best = min(best, time.perf_counter() - t0)
    return ApplyTiming(dimension=dimension, depth=depth, n=n,
                       n_cells=grid.n_cells, seconds=best, repeat=repeat)


@dataclass(frozen=True)
class ScalingFit:
    timings: tuple[ApplyTiming, ...]
    slope: float            # d log(time) / d log(cells)
    intercept: float

    def in_corridor(self, lo: float = 0.8, hi: float = 1.3) -> bool:
        return lo <= self.slope <= hi


def scaling_fit(depths: tuple[int, ...] = (10, 12, 14, 16), dimension: int = 1,
                n: int = 1, *, collection_kind: str = "maximal", seed: int = 0,
                repeat: int = 9) -> ScalingFit:
    """Least-squares slope of log apply-time against log cell count."""
    rows = [time_apply(dimension, L, n, collection_kind=collection_kind,
                       seed=seed, repeat=repeat) for L in depths]
    xs = np.log([r.n_cells for r in rows])
    ys = np.log([r.seconds for r in rows])
    slope, intercept = np.polyfit(xs, ys, 1)
    return ScalingFit(timings=tuple(rows), slope=float(slope),
                      intercept=float(intercept))
