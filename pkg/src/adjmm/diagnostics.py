"""Per-iteration records and convergence diagnostics.

The eigen-equation residual and the angle defects need (A - V) and its
transpose explicitly, which the two oracles cannot provide. They are only
computed for dense-test pairs; black-box runs report the stopping statistics
in the trace instead.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from typing import NamedTuple, Optional

import numpy as np

from .operator import BlackBoxPair
from .sampling import IteratePair

__all__ = [
    "TRACE_COLUMNS",
    "TraceRecord",
    "EstimateReport",
    "eigen_residual",
    "AngleDefect",
    "angle_defect",
    "lambda_bracket",
    "min_so_far",
    "summarize_min_so_far",
    "loglog_slope",
    "trace_to_csv",
]


@dataclass
class TraceRecord:
    iter: int
    objective: float
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    d: Optional[float] = None
    tau: Optional[float] = None
    xi: Optional[float] = None
    residual: Optional[float] = None
    n_forward: int = 0
    n_adjoint: int = 0


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRecord))


@dataclass
class EstimateReport:
    estimate: float
    iterations: int
    stop_reason: str  # "tolerance" | "max_iters" | "adjoint_pair"
    final_pair: IteratePair
    trace: list[TraceRecord] = field(default_factory=list)
    n_forward: int = 0
    n_adjoint: int = 0
    seed: Optional[int] = None

    def summary(self) -> dict:
        return {
            "estimate": self.estimate,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "n_forward": self.n_forward,
            "n_adjoint": self.n_adjoint,
            "seed": self.seed,
        }


def eigen_residual(pair: BlackBoxPair, it: IteratePair) -> float:
    """||(A-V)^T (A-V) v - a^2 v|| with a the iterate's objective (dense-test only)."""
    M = pair.difference()
    v = it.v
    return float(np.linalg.norm(M.T @ (M @ v) - it.objective**2 * v))


class AngleDefect(NamedTuple):
    left: float  # 1 - <u, Mv/||Mv||>^2
    right: float  # 1 - <v, M*u/||M*u||>^2
    kernel: bool = False

    @property
    def total(self) -> float:
        return self.left + self.right


def angle_defect(pair: BlackBoxPair, it: IteratePair) -> AngleDefect:
    M = pair.difference()
    Mv = M @ it.v
    Mu = M.T @ it.u
    nv = np.linalg.norm(Mv)
    nu = np.linalg.norm(Mu)
    if nv == 0.0 or nu == 0.0:
        return AngleDefect(math.nan, math.nan, kernel=True)
    left = 1.0 - (np.dot(it.u, Mv) / nv) ** 2
    right = 1.0 - (np.dot(it.v, Mu) / nu) ** 2
    # clamp rounding just outside [0, 1]
    return AngleDefect(float(min(max(left, 0.0), 1.0)), float(min(max(right, 0.0), 1.0)))


def lambda_bracket(pair: BlackBoxPair, it: IteratePair) -> float:
    """||(A-V)^T u|| * ||(A-V) v||, which lies between a^2 and sigma_1^2."""
    M = pair.difference()
    return float(np.linalg.norm(M.T @ it.u) * np.linalg.norm(M @ it.v))


def min_so_far(values) -> np.ndarray:
    return np.minimum.accumulate(np.asarray(values, dtype=np.float64))


def summarize_min_so_far(trace: list[TraceRecord], field_name: str) -> list[tuple[int, float]]:
    if not trace:
        raise ValueError("empty trace")
    if field_name not in TRACE_COLUMNS:
        raise KeyError(f"unknown trace field {field_name!r}")
    rows = [(r.iter, getattr(r, field_name)) for r in trace if getattr(r, field_name) is not None]
    if not rows:
        raise ValueError(f"trace has no values for {field_name!r}")
    iters, vals = zip(*rows)
    return list(zip(iters, min_so_far(vals).tolist()))


def loglog_slope(n, values) -> float:
    """Least-squares slope of log(values) against log(n)."""
    n = np.asarray(n, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    slope, _ = np.polyfit(np.log(n), np.log(values), 1)
    return float(slope)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def trace_to_csv(trace: list[TraceRecord], out: Optional[io.TextIOBase] = None, header: bool = True) -> str:
    buf = io.StringIO() if out is None else out
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(TRACE_COLUMNS)
    for r in trace:
        writer.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])
    return buf.getvalue() if out is None else ""
