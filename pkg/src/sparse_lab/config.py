"""Run configuration: tolerances, caps and determinism knobs.

Every tolerance used by the library has a single authoritative default here.
An :class:`ExperimentConfig` bundles the knobs that affect numerical output;
its digest is embedded in serialized reports so a report identifies the
configuration that produced it.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, asdict

#: relative slack for inequality checks: pass iff lhs <= rhs * (1 + TOL_CHECK)
TOL_CHECK = 1e-6

#: relative residual target for power iteration
TOL_NORM = 1e-9

#: residual target for generation-pair composition norms.  Diagonal pairs
#: T_k^* T_k over many disjoint cubes carry near-degenerate top clusters
#: (one nearly identical local characteristic per cube), where the subspace
#: residual plateaus at the cluster width while the Ritz value — monotone
#: from below — is already accurate to that width.
TOL_PAIR = 1e-4

#: smallest admissible eigenvalue for a matrix weight cell
EIG_FLOOR = 1e-8

#: largest N*n for which dense realizations of operators are built
DENSE_CAP = 4096

#: hard cap on leaf cell count of a grid (memory guard)
MAX_CELLS = 1 << 20

#: power iteration iteration cap and number of simultaneous restarts
POWER_MAXITER = 20_000
POWER_RESTARTS = 3

THREADS_ENV = "SPARSE_LAB_THREADS"


def thread_count() -> int:
    """Worker count for corpus runs; from SPARSE_LAB_THREADS, default 1."""
    raw = os.environ.get(THREADS_ENV, "")
    try:
        k = int(raw)
    except ValueError:
        return 1
    return max(1, k)


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs that influence numerical results.

    Two runs with equal configs and equal inputs produce byte-identical
    serialized outputs; the digest is the stable fingerprint of the config.
    """

    seed: int = 0
    tol_norm: float = TOL_NORM
    tol_check: float = TOL_CHECK
    tol_pair: float = TOL_PAIR
    eig_floor: float = EIG_FLOOR
    dense_cap: int = DENSE_CAP
    maxiter: int = POWER_MAXITER
    restarts: int = POWER_RESTARTS
    directions: int = 64
    threads: int = field(default_factory=thread_count)

    def digest(self) -> str:
        payload = asdict(self)
        payload.pop("threads")  # worker count must not affect results
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                          default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


DEFAULT_CONFIG = ExperimentConfig()
