"""Sparse dyadic averaging operators with matrix weights.

Finite dyadic trees, sparse cube collections and their stopping-time
generations, matrix A2 weights with exact characteristic constants, weighted
operator norms by subspace iteration, almost-orthogonality measurements of
the generation pieces, and block-form commutator estimates — all with
executable, explicit-constant inequality checks.
"""

from .bench import ApplyTiming, ScalingFit, scaling_fit, time_apply
from .checks import (CheckReport, check_ainf_vs_a2, check_averaging_identity,
                     check_block_bracket_lower, check_block_bracket_upper,
                     check_block_conjugation, check_block_norm_equality,
                     check_commutator_identity, check_commutator_vs_block,
                     check_cotlar_bound, check_cotlar_case1, check_decay,
                     check_mixed_bound, check_norm_lower, check_norm_upper,
                     check_portion_preserving, check_reverse_holder,
                     check_scalar_lower, check_small_portion,
                     run_weight_checks)
from .collection import (PackingReport, SparseCollection, WeakSparseReport,
                         chain_collection, gen_collection, leftmost_chain,
                         maximal_collection, random_collection)
from .commutators import (CommutatorReport, block_conjugated_op,
                          block_triangular_op, block_weight,
                          block_weight_inverse, commutator_op,
                          commutator_report, gen_symbol, sbmo, v_factor_field,
                          v_factor_inverse_field)
from .config import DEFAULT_CONFIG, ExperimentConfig
from .corpus import (Corpus, DimensionRow, SharpnessReport, SymbolInstance,
                     SymbolRun, WeightInstance, WeightRun,
                     build_standard_corpus, dimension_sweep,
                     load_standard_corpus, run_symbol_instance,
                     run_weight_instance, sharpness_sweep)
from .decomposition import DecayReport, Decomposition, decompose
from .errors import ConvergenceError, InvalidInputError, SparseLabError
from .grid import CubeId, GridSpec, format_cube, parse_cube
from .operators import (CotlarReport, LinearOp, NormResult, PairNorms,
                        PiecewiseFn, adjoint_in_weight, averaging_norm_exact,
                        averaging_op, case1_pair_bound, case2_alpha_table,
                        case2_epsilon, case2_eta, cotlar_series_bound,
                        cotlar_stein_bound, cotlar_terms, dense_weighted_norm,
                        generation_op, mixed_bound_constant, mult_op,
                        sparse_op, weighted_conjugate, weighted_norm,
                        weighted_norm_result)
from .weights import (AinfEstimate, MatrixField, MatrixWeight,
                      WeightConstants, gen_weight, scalar_ainf,
                      vector_ainf_estimate, weight_constants)

__version__ = "0.1.0"

__all__ = [
    "ApplyTiming", "ScalingFit", "scaling_fit", "time_apply",
    "CheckReport", "check_ainf_vs_a2", "check_averaging_identity",
    "check_block_bracket_lower", "check_block_bracket_upper",
    "check_block_conjugation", "check_block_norm_equality",
    "check_commutator_identity", "check_commutator_vs_block",
    "check_cotlar_bound", "check_cotlar_case1", "check_decay",
    "check_mixed_bound", "check_norm_lower", "check_norm_upper",
    "check_portion_preserving", "check_reverse_holder", "check_scalar_lower",
    "check_small_portion", "run_weight_checks",
    "PackingReport", "SparseCollection", "WeakSparseReport",
    "chain_collection", "gen_collection", "leftmost_chain",
    "maximal_collection", "random_collection",
    "CommutatorReport", "block_conjugated_op", "block_triangular_op",
    "block_weight", "block_weight_inverse", "commutator_op",
    "commutator_report", "gen_symbol", "sbmo", "v_factor_field",
    "v_factor_inverse_field",
    "DEFAULT_CONFIG", "ExperimentConfig",
    "Corpus", "DimensionRow", "SharpnessReport", "SymbolInstance",
    "SymbolRun", "WeightInstance", "WeightRun", "build_standard_corpus",
    "dimension_sweep", "load_standard_corpus", "run_symbol_instance",
    "run_weight_instance", "sharpness_sweep",
    "DecayReport", "Decomposition", "decompose",
    "ConvergenceError", "InvalidInputError", "SparseLabError",
    "CubeId", "GridSpec", "format_cube", "parse_cube",
    "CotlarReport", "LinearOp", "NormResult", "PairNorms", "PiecewiseFn",
    "adjoint_in_weight", "averaging_norm_exact", "averaging_op",
    "case1_pair_bound", "case2_alpha_table", "case2_epsilon", "case2_eta",
    "cotlar_series_bound", "cotlar_stein_bound", "cotlar_terms",
    "dense_weighted_norm", "generation_op", "mixed_bound_constant", "mult_op",
    "sparse_op", "weighted_conjugate", "weighted_norm",
    "weighted_norm_result",
    "AinfEstimate", "MatrixField", "MatrixWeight", "WeightConstants",
    "gen_weight", "scalar_ainf", "vector_ainf_estimate", "weight_constants",
    "__version__",
]
