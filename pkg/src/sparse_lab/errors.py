"""Exception taxonomy.

The CLI maps these onto exit codes: invalid input -> 4, non-convergence -> 3.
Failed inequality checks are not exceptions (they are reported), the CLI turns
them into exit code 2.
"""

from __future__ import annotations


class SparseLabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SparseLabError):
    """Malformed or out-of-range input: bad cube ids, incompatible grids,
    non-SPD weights, resource caps exceeded, unknown generator kinds."""


class ConvergenceError(SparseLabError):
    """Power iteration hit its iteration cap before meeting the tolerance.

    Carries the best available estimate so callers can decide whether the
    partial answer is still useful.
    """

    def __init__(self, message: str, *, estimate: float, residual: float,
                 iterations: int, last_vector=None):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual
        self.iterations = iterations
        self.last_vector = last_vector
