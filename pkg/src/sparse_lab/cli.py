"""Command line interface.

Exit codes: 0 success, 2 at least one check failed, 3 an iterative norm did
not converge, 4 invalid input (including usage errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import storage
from .bench import scaling_fit, time_apply
from .checks import check_averaging_identity, run_weight_checks
from .collection import gen_collection
from .commutators import commutator_report, gen_symbol
from .config import (DENSE_CAP, POWER_MAXITER, POWER_RESTARTS, TOL_CHECK,
                     TOL_NORM, TOL_PAIR, ExperimentConfig)
from .corpus import (dimension_sweep, load_standard_corpus,
                     run_symbol_instance, run_weight_instance, sharpness_sweep)
from .decomposition import decompose
from .errors import ConvergenceError, InvalidInputError, SparseLabError
from .grid import GridSpec, format_cube, parse_cube
from .operators import cotlar_terms, sparse_op, weighted_norm_result
from .weights import gen_weight, weight_constants

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_NO_CONVERGENCE = 3
EXIT_INVALID_INPUT = 4


class _Parser(argparse.ArgumentParser):
    """Argparse with usage errors mapped to the invalid-input exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidInputError(message)


def _kv(text: str):
    if "=" not in text:
        raise InvalidInputError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def _params(pairs) -> dict:
    return dict(_kv(p) for p in pairs or [])


def _grid_args(p: _Parser) -> None:
    p.add_argument("--dimension", "-d", type=int, default=1)
    p.add_argument("--depth", "-L", type=int, required=True)


def _norm_args(p: _Parser) -> None:
    p.add_argument("--tol", type=float, default=TOL_NORM)
    p.add_argument("--maxiter", type=int, default=POWER_MAXITER)
    p.add_argument("--restarts", type=int, default=POWER_RESTARTS)
    p.add_argument("--seed", type=int, default=0)


def _norm_kw(args) -> dict:
    return {"tol": args.tol, "maxiter": args.maxiter,
            "restarts": args.restarts, "seed": args.seed}


def build_parser() -> _Parser:
    parser = _Parser(prog="sparse-lab",
                     description="Sparse dyadic operators with matrix weights")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sparse", parents=[], help="generate a collection")
    _grid_args(p)
    p.add_argument("--kind", default="random",
                   choices=["chain", "maximal", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--accept", type=float, default=None,
                   help="acceptance probability (random kind only)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-weight", help="generate a matrix weight")
    _grid_args(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--kind", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-symbol", help="generate a symbol field")
    _grid_args(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--kind", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", required=True)

    p = sub.add_parser("decompose",
                       help="stopping-time generations of a collection")
    p.add_argument("--sparse", required=True)
    p.add_argument("--json", dest="json_out", default=None)

    p = sub.add_parser("constants", help="characteristic constants of a weight")
    p.add_argument("--weight", required=True)
    p.add_argument("--sparse", default=None)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("norm", help="operator norm on L2(W)")
    p.add_argument("--weight", required=True)
    p.add_argument("--sparse", required=True)
    _norm_args(p)

    p = sub.add_parser("cotlar", help="generation pair norms and bounds")
    p.add_argument("--weight", required=True)
    p.add_argument("--sparse", required=True)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--pair-tol", type=float, default=TOL_PAIR,
                   help="residual target for the pair composition norms")
    p.add_argument("--json", dest="json_out", default=None)
    _norm_args(p)

    p = sub.add_parser("check", help="inequality battery for one pair")
    p.add_argument("--weight", required=True)
    p.add_argument("--sparse", required=True)
    p.add_argument("--cube", default=None,
                   help="also check the averaging-norm identity on this cube")
    p.add_argument("--tol-check", type=float, default=TOL_CHECK)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--csv", dest="csv_out", default=None)
    p.add_argument("--json", dest="json_out", default=None)
    _norm_args(p)

    p = sub.add_parser("commutator", help="commutator chain for one symbol")
    p.add_argument("--symbol", required=True)
    p.add_argument("--sparse", required=True)
    p.add_argument("--dense-cap", type=int, default=DENSE_CAP)
    p.add_argument("--json", dest="json_out", default=None)
    _norm_args(p)

    p = sub.add_parser("corpus", help="run the pinned corpus")
    p.add_argument("--what", choices=["weights", "symbols", "both"],
                   default="both")
    p.add_argument("--limit", type=int, default=None,
                   help="run only the first N instances of each kind")
    p.add_argument("--tol-check", type=float, default=TOL_CHECK)
    p.add_argument("--csv", dest="csv_out", default=None)
    _norm_args(p)

    p = sub.add_parser("sweep", help="sharpness / dimension sweeps")
    p.add_argument("--mode", choices=["sharpness", "dimension"],
                   required=True)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="apply timing and scaling slope")
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--dimension", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--fit", action="store_true",
                   help="fit the log-log slope over a depth ladder")
    p.add_argument("--repeat", type=int, default=5)
    return parser


def _emit(doc, path: str | None) -> None:
    text = storage.dumps(doc)
    if path:
        storage.save_json(path, doc)
    sys.stdout.write(text)


def _config_digest(args) -> str:
    """Fingerprint of the knobs in effect, stamped into saved reports."""
    cfg = ExperimentConfig(seed=args.seed, tol_norm=args.tol,
                           tol_check=args.tol_check, maxiter=args.maxiter,
                           restarts=args.restarts,
                           directions=getattr(args, "directions", 64))
    return cfg.digest()


def _print_checks(reports, csv_out=None, json_out=None, *,
                  config_digest: str = "") -> bool:
    for rep in reports:
        print(rep.line())
    if csv_out:
        with open(csv_out, "w") as fh:
            fh.write(storage.checks_to_csv(reports,
                                           config_digest=config_digest))
    if json_out:
        storage.save_json(json_out, storage.checks_to_dict(
            reports, config_digest=config_digest))
    return all(r.passed for r in reports)


def _cmd_gen_sparse(args) -> int:
    grid = GridSpec(args.dimension, args.depth)
    kw = {}
    if args.accept is not None:
        if args.kind != "random":
            raise InvalidInputError("--accept only applies to --kind random")
        kw["accept"] = args.accept
    coll = gen_collection(grid, args.kind, seed=args.seed, **kw)
    storage.save_collection(args.out, coll)
    print(f"wrote {args.out}: {len(coll)} cubes on d={grid.dimension} "
          f"L={grid.depth}")
    return EXIT_OK


def _cmd_gen_weight(args) -> int:
    grid = GridSpec(args.dimension, args.depth)
    weight = gen_weight(grid, args.n, args.kind, seed=args.seed,
                        **_params(args.param))
    storage.save_weight(args.out, weight)
    print(f"wrote {args.out}: n={weight.n} weight on d={grid.dimension} "
          f"L={grid.depth}")
    return EXIT_OK


def _cmd_gen_symbol(args) -> int:
    grid = GridSpec(args.dimension, args.depth)
    symbol = gen_symbol(grid, args.n, args.kind, seed=args.seed,
                        **_params(args.param))
    storage.save_symbol(args.out, symbol)
    print(f"wrote {args.out}: n={symbol.n} symbol on d={grid.dimension} "
          f"L={grid.depth}")
    return EXIT_OK


def _cmd_decompose(args) -> int:
    coll = storage.load_collection(args.sparse)
    decomp = decompose(coll)
    decay = decomp.decay_report()
    doc = {
        "n_cubes": len(coll),
        "n_roots": len(decomp.roots),
        "n_generations": decomp.n_generations,
        "generation_sizes": [len(g) for g in decomp.generations],
        "decay_ok": decay.ok,
        "decay_worst": float(decay.worst_ratio),
        "decay_attained": decay.attained,
    }
    _emit(doc, args.json_out)
    return EXIT_OK


def _cmd_constants(args) -> int:
    weight = storage.load_weight(args.weight)
    cubes = None
    if args.sparse:
        cubes = storage.load_collection(args.sparse).cubes
    consts = weight_constants(weight, cubes, directions=args.directions,
                              seed=args.seed)
    doc = {
        "n": consts.n,
        "a2": consts.a2,
        "a2_witness": format_cube(consts.a2_witness),
        "a2_tree": consts.a2_tree,
        "a2_tree_witness": format_cube(consts.a2_tree_witness),
        "ainf": consts.ainf,
        "ainf_dual": consts.ainf_dual,
        "ainf_exact": consts.ainf_exact,
        "ainf_method": consts.ainf_method,
    }
    _emit(doc, None)
    return EXIT_OK


def _cmd_norm(args) -> int:
    weight = storage.load_weight(args.weight)
    coll = storage.load_collection(args.sparse)
    res = weighted_norm_result(sparse_op(coll, weight.n), weight,
                               **_norm_kw(args))
    doc = {"norm": res.value, "iterations": res.iterations,
           "residual": res.residual, "converged": res.converged}
    _emit(doc, None)
    if not res.converged:
        raise ConvergenceError(
            f"norm iteration hit the cap ({res.iterations})",
            estimate=res.value, residual=res.residual,
            iterations=res.iterations)
    return EXIT_OK


def _cmd_cotlar(args) -> int:
    weight = storage.load_weight(args.weight)
    coll = storage.load_collection(args.sparse)
    rep = cotlar_terms(coll, weight, directions=args.directions,
                       pair_tol=args.pair_tol, **_norm_kw(args))
    _emit(storage.cotlar_to_dict(rep), args.json_out)
    return EXIT_OK


def _cmd_check(args) -> int:
    weight = storage.load_weight(args.weight)
    coll = storage.load_collection(args.sparse)
    kw = _norm_kw(args)
    kw["norm_tol"] = kw.pop("tol")
    reports = run_weight_checks(coll, weight, tol=args.tol_check,
                                directions=args.directions, **kw)
    if args.cube:
        reports.append(check_averaging_identity(
            weight, parse_cube(args.cube), seed=args.seed))
    ok = _print_checks(reports, args.csv_out, args.json_out,
                       config_digest=_config_digest(args))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_commutator(args) -> int:
    symbol = storage.load_symbol(args.symbol)
    coll = storage.load_collection(args.sparse)
    rep = commutator_report(coll, symbol, dense_cap=args.dense_cap,
                            **_norm_kw(args))
    _emit(storage.commutator_to_dict(rep), args.json_out)
    return EXIT_OK


def _cmd_corpus(args) -> int:
    corpus = load_standard_corpus()
    kw = {"tol": args.tol_check, "norm_tol": args.tol,
          "maxiter": args.maxiter, "restarts": args.restarts,
          "seed": args.seed}
    reports = []
    if args.what in ("weights", "both"):
        for inst in corpus.weights[:args.limit]:
            reports.extend(run_weight_instance(inst, **kw).checks)
    if args.what in ("symbols", "both"):
        for inst in corpus.symbols[:args.limit]:
            reports.extend(run_symbol_instance(inst, **kw).checks)
    ok = _print_checks(reports, args.csv_out,
                       config_digest=_config_digest(args))
    print(f"{sum(r.passed for r in reports)}/{len(reports)} checks passed")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_sweep(args) -> int:
    if args.mode == "sharpness":
        rep = sharpness_sweep(depth=args.depth or 10, seed=args.seed)
        doc = {
            "alphas": list(rep.alphas),
            "a2": list(rep.a2_values),
            "norms": list(rep.norms),
            "exponent": rep.exponent,
            "intercept": rep.intercept,
            "degenerate": rep.degenerate,
        }
    else:
        rows = dimension_sweep(depth=args.depth or 6, seed=args.seed)
        doc = {"rows": [asdict(r) for r in rows]}
    _emit(doc, None)
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.fit:
        depths = tuple(range(max(6, args.depth - 6), args.depth + 1, 2))
        fit = scaling_fit(depths, args.dimension, args.n, repeat=args.repeat)
        for t in fit.timings:
            print(f"L={t.depth:2d} cells={t.n_cells:9d} "
                  f"apply={t.seconds * 1e6:10.1f} us")
        print(f"slope={fit.slope:.3f}")
    else:
        t = time_apply(args.dimension, args.depth, args.n,
                       repeat=args.repeat)
        print(f"L={t.depth} cells={t.n_cells} apply={t.seconds * 1e6:.1f} us")
    return EXIT_OK


_COMMANDS = {
    "gen-sparse": _cmd_gen_sparse,
    "gen-weight": _cmd_gen_weight,
    "gen-symbol": _cmd_gen_symbol,
    "decompose": _cmd_decompose,
    "constants": _cmd_constants,
    "norm": _cmd_norm,
    "cotlar": _cmd_cotlar,
    "check": _cmd_check,
    "commutator": _cmd_commutator,
    "corpus": _cmd_corpus,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"error: {exc} (estimate={exc.estimate:.6g}, "
              f"residual={exc.residual:.3e})", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (InvalidInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except SparseLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
