"""Black-box operator access: a forward oracle for A and an adjoint oracle for V.

Only two products are ever available to the estimators, ``A @ v`` and
``V.T @ u``. A :class:`BlackBoxPair` bundles both oracles and counts every
call. Dense adapters exist for tests and for the CLI; they may additionally
expose the materialized matrices so diagnostics can be computed exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DimensionError",
    "OracleError",
    "BlackBoxOnly",
    "ForwardOracle",
    "AdjointOracle",
    "BlackBoxPair",
    "as_dense",
    "dense_forward",
    "dense_adjoint",
    "dense_pair",
    "scale_forward",
    "compose_forward",
    "wrap_counting",
]


class DimensionError(ValueError):
    """A vector or matrix has the wrong shape for the operator it meets."""


class OracleError(RuntimeError):
    """An oracle returned something unusable (wrong shape, NaN, inf)."""


class BlackBoxOnly(RuntimeError):
    """A dense-only quantity was requested from a pure black-box pair."""


def as_dense(M) -> np.ndarray:
    M = np.array(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _vector(x, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise DimensionError(f"{what}: expected length {n}, got shape {x.shape}")
    return x


def dense_forward(M: np.ndarray, v) -> np.ndarray:
    m, d = M.shape
    v = _vector(v, d, "dense_forward")
    if not np.all(np.isfinite(v)):
        raise ValueError("dense_forward: input has non-finite entries")
    return M @ v


def dense_adjoint(M: np.ndarray, u) -> np.ndarray:
    m, d = M.shape
    u = _vector(u, m, "dense_adjoint")
    return M.T @ u


@dataclass(frozen=True)
class ForwardOracle:
    """``apply`` maps R^d -> R^m."""

    apply: Callable[[np.ndarray], np.ndarray]
    m: int
    d: int

    @property
    def dims(self) -> tuple[int, int]:
        return self.m, self.d

    def __call__(self, v) -> np.ndarray:
        v = _vector(v, self.d, "forward oracle input")
        out = np.asarray(self.apply(v), dtype=np.float64)
        if out.shape != (self.m,):
            raise OracleError(f"forward oracle returned shape {out.shape}, expected ({self.m},)")
        if not np.all(np.isfinite(out)):
            raise OracleError("forward oracle returned non-finite values")
        return out


@dataclass(frozen=True)
class AdjointOracle:
    """``apply`` maps R^m -> R^d; it is V* for the (unseen) V."""

    apply: Callable[[np.ndarray], np.ndarray]
    m: int
    d: int

    @property
    def dims(self) -> tuple[int, int]:
        return self.m, self.d

    def __call__(self, u) -> np.ndarray:
        u = _vector(u, self.m, "adjoint oracle input")
        out = np.asarray(self.apply(u), dtype=np.float64)
        if out.shape != (self.d,):
            raise OracleError(f"adjoint oracle returned shape {out.shape}, expected ({self.d},)")
        if not np.all(np.isfinite(out)):
            raise OracleError("adjoint oracle returned non-finite values")
        return out


@dataclass
class BlackBoxPair:
    """The pair (A, V) seen only through ``A v`` and ``V* u``.

    ``dense_a`` / ``dense_v`` are optional materializations (both m x d) used
    by dense-test diagnostics; estimators never touch them.
    """

    fwd: ForwardOracle
    adj: AdjointOracle
    dense_a: Optional[np.ndarray] = None
    dense_v: Optional[np.ndarray] = None
    n_forward: int = field(default=0, init=False)
    n_adjoint: int = field(default=0, init=False)

    def __post_init__(self):
        if self.fwd.dims != self.adj.dims:
            raise DimensionError(
                f"forward oracle is {self.fwd.dims} but adjoint oracle is {self.adj.dims}"
            )

    @property
    def m(self) -> int:
        return self.fwd.m

    @property
    def d(self) -> int:
        return self.fwd.d

    @property
    def call_counts(self) -> tuple[int, int]:
        return self.n_forward, self.n_adjoint

    def forward(self, v) -> np.ndarray:
        self.n_forward += 1
        return self.fwd(v)

    def adjoint(self, u) -> np.ndarray:
        self.n_adjoint += 1
        return self.adj(u)

    @property
    def is_dense(self) -> bool:
        return self.dense_a is not None and self.dense_v is not None

    def difference(self) -> np.ndarray:
        """Materialized A - V; only for dense-test pairs."""
        if not self.is_dense:
            raise BlackBoxOnly("A - V is not available for a black-box pair")
        return self.dense_a - self.dense_v


def dense_pair(A, V) -> BlackBoxPair:
    """Pair with forward ``A @ v`` and adjoint ``V.T @ u``; A and V are both m x d."""
    A = as_dense(A)
    V = as_dense(V)
    if A.shape != V.shape:
        raise DimensionError(f"A is {A.shape} but V is {V.shape}")
    m, d = A.shape
    fwd = ForwardOracle(lambda v: A @ v, m, d)
    adj = AdjointOracle(lambda u: V.T @ u, m, d)
    return BlackBoxPair(fwd, adj, dense_a=A, dense_v=V)


def scale_forward(oracle: ForwardOracle, alpha: float) -> ForwardOracle:
    return ForwardOracle(lambda v: alpha * oracle.apply(v), oracle.m, oracle.d)


def compose_forward(outer: ForwardOracle, inner: ForwardOracle) -> ForwardOracle:
    """``outer(inner(v))``."""
    if inner.m != outer.d:
        raise DimensionError(f"cannot compose {outer.dims} after {inner.dims}")
    return ForwardOracle(lambda v: outer.apply(inner.apply(v)), outer.m, inner.d)


def wrap_counting(pair: BlackBoxPair) -> BlackBoxPair:
    """Fresh pair over the same oracles with both counters at zero."""
    return BlackBoxPair(pair.fwd, pair.adj, dense_a=pair.dense_a, dense_v=pair.dense_v)
