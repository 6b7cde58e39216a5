"""Command-line harness: ``adjmm estimate``, ``adjmm adjoint-check``, ``adjmm bench``.

Matrix files are CSV: a first line ``m,d`` followed by m rows of d values.
A ``--v`` file holds V itself (m x d); its adjoint is applied as V^T u.

Exit codes: 0 success (including a detected adjoint pair), 2 bad
configuration, 3 dimension mismatch.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from .diagnostics import TRACE_COLUMNS, EstimateReport, trace_to_csv
from .estimator_one import run_one
from .estimator_two import run_two
from .operator import BlackBoxPair, DimensionError, dense_pair, wrap_counting
from .oracle import adjointness_test, jacobi_svd
from .runner import ConfigError, RunConfig
from .sampling import MATRIX_STREAM, make_rng, sample_unit_sphere
from .tomo import parallel_geometry, tomo_pair

__all__ = [
    "read_matrix",
    "write_matrix",
    "gaussian_pair",
    "parse_sizes",
    "estimate_repeats",
    "bench_rows",
    "main",
]

EXIT_OK, EXIT_CONFIG, EXIT_DIMENSION = 0, 2, 3
BENCH_COLUMNS = ("size", "algo", "repeat", "iter", "rel_error")


def read_matrix(path: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ConfigError(f"{path}: empty matrix file")
    try:
        m, d = (int(x) for x in rows[0])
        data = [[float(x) for x in r] for r in rows[1:]]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if m < 1 or d < 1:
        raise ConfigError(f"{path}: bad header {m},{d}")
    if len(data) != m or any(len(r) != d for r in data):
        raise DimensionError(f"{path}: header says {m}x{d} but the body does not match")
    M = np.array(data, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise ConfigError(f"{path}: non-finite entries")
    return M


def write_matrix(path: str, M) -> None:
    M = np.asarray(M, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(M.shape)
        w.writerows([[repr(float(x)) for x in row] for row in M])


def gaussian_pair(m: int, d: int, seed: int, zero_v: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Standard normal A and (independent) V, both m x d, from the matrix stream of ``seed``."""
    rng = make_rng(seed, MATRIX_STREAM)
    A = rng.standard_normal((m, d))
    V = np.zeros((m, d)) if zero_v else rng.standard_normal((m, d))
    return A, V


def parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for item in text.split(","):
        try:
            m, d = item.lower().split("x")
            sizes.append((int(m), int(d)))
        except ValueError:
            raise ConfigError(f"bad size {item!r}, expected MxD") from None
    if any(m < 2 or d < 2 for m, d in sizes):
        raise ConfigError("sizes need m >= 2 and d >= 2")
    return sizes


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ADJMM_THREADS", "1")))
    except ValueError:
        return 1


def _runner(algorithm: str):
    return run_one if algorithm == "one-step" else run_two


def estimate_repeats(pair: BlackBoxPair, config: RunConfig) -> list[EstimateReport]:
    """One run per repeat with seed ``config.seed ^ r``, in repeat order."""
    config.validate()
    run = _runner(config.algorithm)

    def one(r: int) -> EstimateReport:
        return run(wrap_counting(pair), replace(config, seed=config.seed ^ r))

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(one, range(config.repeats)))


def _pair_from_args(args, seed: int) -> BlackBoxPair:
    if args.tomo:
        geom = parallel_geometry(args.image_size, args.angles, args.bins)
        return tomo_pair(geom, matched=args.tomo == "matched")
    if args.gaussian:
        m, d = args.gaussian
        if m < 1 or d < 1:
            raise ConfigError("--gaussian sizes must be positive")
        return dense_pair(*gaussian_pair(m, d, seed, zero_v=args.zero_v))
    if args.a is None or args.v is None:
        raise ConfigError("give --a and --v, --gaussian M D, or --tomo")
    return dense_pair(read_matrix(args.a), read_matrix(args.v))


def _config_from_args(args, **overrides) -> RunConfig:
    cfg = RunConfig(
        algorithm=args.algorithm,
        max_iters=args.max_iters,
        eps=args.eps,
        patience=args.patience,
        seed=args.seed,
        repeats=getattr(args, "repeats", 1),
        null_tol=args.null_tol,
        trace_path=getattr(args, "trace", None),
        diag_mode=getattr(args, "diag", "black-box"),
    )
    return replace(cfg, **overrides).validate()


def cmd_estimate(args) -> int:
    config = _config_from_args(args)
    pair = _pair_from_args(args, config.seed)
    if pair.m < 2 or pair.d < 2:
        raise DimensionError(f"need m >= 2 and d >= 2, got {pair.m}x{pair.d}")
    reports = estimate_repeats(pair, config)
    for rep in reports:
        print(json.dumps(rep.summary()))
    if config.trace_path:
        with open(config.trace_path, "w", newline="") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for rep in reports:
                trace_to_csv(rep.trace, fh, header=False)
    return EXIT_OK


def operator_scale(pair: BlackBoxPair, rng, trials: int = 20) -> float:
    """sigma_1(A) when A is dense, otherwise the largest ||Av|| over random unit v."""
    if pair.dense_a is not None:
        return jacobi_svd(pair.dense_a).sigma1
    return max(float(np.linalg.norm(pair.fwd(sample_unit_sphere(rng, pair.d)))) for _ in range(trials))


def cmd_adjoint_check(args) -> int:
    config = _config_from_args(args, algorithm="two-step")
    pair = _pair_from_args(args, config.seed)
    rep = run_two(wrap_counting(pair), config)
    rng = make_rng(config.seed, stream=2)
    defect = adjointness_test(pair.fwd, pair.adj, args.trials, rng)
    scale = operator_scale(pair, rng)
    relative = rep.estimate / scale if scale > 0 else float("inf")
    verdict = "ADJOINT" if rep.estimate <= args.adjoint_threshold * scale else "MISMATCH"
    print(json.dumps({
        "estimate": rep.estimate,
        "scale": scale,
        "relative": relative,
        "dot_defect": defect,
        "iterations": rep.iterations,
        "stop_reason": rep.stop_reason,
        "verdict": verdict,
    }))
    return EXIT_OK


def bench_rows(pair: BlackBoxPair, sigma1: float, config: RunConfig, label: str, repeat: int):
    for algo in ("one-step", "two-step"):
        rep = _runner(algo)(wrap_counting(pair), replace(config, algorithm=algo))
        for r in rep.trace:
            yield (label, algo, repeat, r.iter, (sigma1 - r.objective) / sigma1)


def cmd_bench(args) -> int:
    config = _config_from_args(args)
    if args.a or args.v:
        if not (args.a and args.v):
            raise ConfigError("--a and --v go together")
        A, V = read_matrix(args.a), read_matrix(args.v)
        cases = [(f"{A.shape[0]}x{A.shape[1]}", lambda seed, A=A, V=V: (A, V))]
    else:
        cases = [
            (f"{m}x{d}", lambda seed, m=m, d=d: gaussian_pair(m, d, seed, zero_v=args.zero_v))
            for m, d in parse_sizes(args.sizes)
        ]

    def job(item):
        (label, make), r = item
        seed = config.seed ^ r
        A, V = make(seed)
        pair = dense_pair(A, V)
        sigma1 = jacobi_svd(A - V).sigma1
        if sigma1 == 0:
            raise ConfigError(f"{label}: A - V is zero, relative error undefined")
        return list(bench_rows(pair, sigma1, replace(config, seed=seed), label, r))

    work = [(case, r) for case in cases for r in range(config.repeats)]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(job, work))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(BENCH_COLUMNS)
        for rows in results:
            w.writerows([(s, a, r, i, repr(float(e))) for s, a, r, i, e in rows])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def _add_run_options(p: argparse.ArgumentParser, max_iters: int = 5000) -> None:
    p.add_argument("--algorithm", choices=("one-step", "two-step"), default="two-step")
    p.add_argument("--max-iters", type=int, default=max_iters)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--null-tol", type=float, default=1e-12)


def _add_sources(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", help="CSV file with A (m x d)")
    p.add_argument("--v", help="CSV file with V (m x d); its adjoint is V^T")
    p.add_argument("--gaussian", nargs=2, type=int, metavar=("M", "D"),
                   help="draw A and V with standard normal entries")
    p.add_argument("--zero-v", action="store_true", help="with --gaussian or bench: V = 0")
    p.add_argument("--tomo", choices=("matched", "mismatched"),
                   help="line-model projector with exact or pixel-driven backprojector")
    p.add_argument("--image-size", type=int, default=32)
    p.add_argument("--angles", type=int, default=10)
    p.add_argument("--bins", type=int, default=32)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adjmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate ||A - V||")
    _add_sources(p)
    _add_run_options(p)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--trace", help="write the per-iteration trace CSV here")
    p.add_argument("--diag", choices=("black-box", "dense-test"), default="black-box")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("adjoint-check", help="decide whether V* is the adjoint of A")
    _add_sources(p)
    _add_run_options(p, max_iters=1000)
    p.add_argument("--adjoint-threshold", type=float, default=1e-7)
    p.add_argument("--trials", type=int, default=20, help="dot-product test trials")
    p.set_defaults(func=cmd_adjoint_check)

    p = sub.add_parser("bench", help="relative-error traces of both algorithms on Gaussian pairs")
    p.add_argument("--sizes", default="10x50,50x50,100x50")
    p.add_argument("--a")
    p.add_argument("--v")
    p.add_argument("--zero-v", action="store_true")
    _add_run_options(p)
    p.add_argument("--repeats", type=int, default=50)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"adjmm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionError as exc:
        print(f"adjmm: dimension error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (ValueError, OSError) as exc:
        print(f"adjmm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
