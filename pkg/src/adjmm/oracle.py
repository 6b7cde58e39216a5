"""Brute-force references used to check the closed-form steps and estimates.

Nothing here shares code with the estimators: step sizes are checked against
grid search on the directly evaluated quotient, and estimates against a
self-contained one-sided Jacobi SVD.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from .operator import AdjointOracle, ForwardOracle, BlackBoxPair
from .sampling import DirectionPair, IteratePair, sample_unit_sphere

__all__ = [
    "SpectralSummary",
    "jacobi_svd",
    "golden_section_max",
    "GridMax1D",
    "GridMax2D",
    "grid_maximize",
    "grid_maximize_2d",
    "grid_maximize_s",
    "grid_maximize_q",
    "adjointness_test",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SpectralSummary:
    sigma: np.ndarray  # descending
    left_vectors: np.ndarray  # m x k, orthonormal columns
    right_vectors: np.ndarray  # d x k, orthonormal columns
    sweeps: int = 0

    @property
    def sigma1(self) -> float:
        return float(self.sigma[0])


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """n-1 rounds of disjoint index pairs covering every pair once (circle method)."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = [(players[i], players[k - 1 - i]) for i in range(k // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        if pairs:
            I, J = zip(*pairs)
            rounds.append((np.array(I), np.array(J)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _complete_basis(Q: np.ndarray, k: int) -> np.ndarray:
    """Extend the orthonormal columns of Q (n x r) to n x k by Gram-Schmidt on e_i."""
    n, r = Q.shape
    cols = [Q[:, j] for j in range(r)]
    for i in range(n):
        if len(cols) == k:
            break
        e = np.zeros(n)
        e[i] = 1.0
        for _ in range(2):
            for q in cols:
                e -= np.dot(q, e) * q
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            cols.append(e / nrm)
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def _hestenes(X: np.ndarray, tol: float, max_sweeps: int):
    """One-sided Jacobi on the q columns of X (p x q, p >= q).

    Returns (sigma, U, V, sweeps) with X = U diag(sigma) V^T, sigma descending.
    """
    # columns are stored as contiguous rows of C, rotations accumulate in R
    C = np.ascontiguousarray(X.T)
    q = C.shape[0]
    R = np.eye(q)
    rounds = _round_robin(q)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        rotated = False
        for I, J in rounds:
            x, y = C[I], C[J]
            alpha = np.einsum("ij,ij->i", x, x)
            beta = np.einsum("ij,ij->i", y, y)
            gamma = np.einsum("ij,ij->i", x, y)
            act = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not act.any():
                continue
            rotated = True
            if not act.all():
                I, J = I[act], J[act]
                x, y = x[act], y[act]
                alpha, beta, gamma = alpha[act], beta[act], gamma[act]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = c * t[:, None]
            C[I], C[J] = c * x - s * y, s * x + c * y
            x, y = R[I], R[J]
            R[I], R[J] = c * x - s * y, s * x + c * y
        if not rotated:
            break
    sigma = np.linalg.norm(C, axis=1)
    order = np.argsort(-sigma, kind="stable")
    sigma, W, V = sigma[order], C[order].T, R[order].T
    cutoff = sigma[0] * 1e-13 if sigma.size and sigma[0] > 0 else 0.0
    keep = sigma > cutoff
    U = _complete_basis(W[:, keep] / sigma[keep], q)
    return np.where(keep, sigma, 0.0), U, V, sweeps


def jacobi_svd(M, tol: float = 1e-15, max_sweeps: int = 80) -> SpectralSummary:
    """Thin SVD by one-sided (Hestenes) Jacobi with round-robin pair ordering.

    Column pairs are rotated until every pair is orthogonal to ``tol``
    relative to the product of their norms. Wide inputs are transposed so at
    most min(m, d) columns rotate; strictly tall inputs are first reduced by a
    column-pivoted QR and the Jacobi sweeps run on the transposed triangular
    factor, which needs fewer and cheaper sweeps.
    """
    M = np.array(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError("jacobi_svd expects a 2-D matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("jacobi_svd: matrix has non-finite entries")
    m, d = M.shape
    wide = d > m
    T = M.T if wide else M
    p, q = T.shape
    if p > q:
        # T[:, piv] = Q Rq and Rq^T = U1 S V1^T, so T = (Q V1) S (U1 permuted)^T
        Q, Rq, piv = scipy.linalg.qr(T, mode="economic", pivoting=True)
        sigma, U1, V1, sweeps = _hestenes(Rq.T, tol, max_sweeps)
        left = Q @ V1
        right = np.empty_like(U1)
        right[piv] = U1
    else:
        sigma, left, right, sweeps = _hestenes(T, tol, max_sweeps)
    if wide:
        left, right = right, left
    return SpectralSummary(sigma=sigma, left_vectors=left, right_vectors=right, sweeps=sweeps)


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Maximize a unimodal f on [lo, hi] down to a bracket of width ``tol``."""
    a, b = min(lo, hi), max(lo, hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    best = max((fx, x), (fc, c), (fd, d))
    return best[1], best[0]


class GridMax1D(NamedTuple):
    tau: float
    value: float
    flat: bool


class GridMax2D(NamedTuple):
    tau: float
    xi: float
    value: float
    flat: bool


def _is_flat(values: np.ndarray) -> bool:
    top = np.max(values)
    return bool(top - np.min(values) <= 1e-14 * (1.0 + abs(top)))


def _refine_stationary(f, t: float, iters: int = 60) -> float:
    """Bisect on the sign of a central difference of f near t.

    Golden section only sees value differences, so near a smooth maximum it
    stalls at roughly sqrt(machine eps) in the argument. The slope stays
    resolvable much closer to the stationary point.
    """
    h = 1e-5 * max(1.0, abs(t))
    slope = lambda x: f(x + h) - f(x - h)
    width = 1e-6 * max(1.0, abs(t))
    lo, hi = t - width, t + width
    if not (slope(lo) > 0 > slope(hi)):
        return t
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    return x if f(x) >= f(t) - 1e-15 * max(1.0, abs(f(t))) else t


def grid_maximize(f_vec, lo: float, hi: float, n_points: int, tol: float = 1e-10) -> GridMax1D:
    """Grid search with a vectorized ``f_vec``, then golden-section polish."""
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    grid = np.linspace(lo, hi, n_points)
    vals = np.asarray(f_vec(grid), dtype=np.float64)
    if _is_flat(vals):
        return GridMax1D(0.0, float(vals[0]), True)
    i = int(np.argmax(vals))
    h = grid[1] - grid[0]
    f = lambda t: float(f_vec(np.array([t]))[0])
    t, v = golden_section_max(f, max(lo, grid[i] - h), min(hi, grid[i] + h), tol)
    if v < vals[i]:
        t, v = grid[i], vals[i]
    t = _refine_stationary(f, t)
    return GridMax1D(float(t), float(f(t)), False)


def grid_maximize_2d(f_grid, lo: float, hi: float, n_points: int, zoom_points: int = 21,
                     tol: float = 1e-12, max_rounds: int = 10_000) -> GridMax2D:
    """2-D grid search, then repeated finer grids centred on the best point.

    ``f_grid(taus, xis)`` returns the matrix of values f(taus[i], xis[j]).
    Each zoom grid spans one coarse step either way; the window follows the
    best point while it sits on the window edge and otherwise shrinks
    fivefold, until the half-width falls below ``tol``.
    """
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    grid = np.linspace(lo, hi, n_points)
    vals = np.asarray(f_grid(grid, grid), dtype=np.float64)
    if _is_flat(vals):
        return GridMax2D(0.0, 0.0, float(vals[0, 0]), True)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    t, s, best = float(grid[i]), float(grid[j]), float(vals[i, j])
    width = grid[1] - grid[0]
    offsets = np.linspace(-1.0, 1.0, zoom_points)
    edge = (0, zoom_points - 1)
    for _ in range(max_rounds):
        if width <= tol:
            break
        ts = np.clip(t + width * offsets, lo, hi)
        ss = np.clip(s + width * offsets, lo, hi)
        vals = np.asarray(f_grid(ts, ss), dtype=np.float64)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        moved = False
        if vals[i, j] > best:
            t, s, best = float(ts[i]), float(ss[j]), float(vals[i, j])
            # a maximum on the window edge may lie further out (long ridges)
            moved = (i in edge and lo < t < hi) or (j in edge and lo < s < hi)
        if not moved:
            width /= 5.0
    return GridMax2D(t, s, best, False)


def _along(pair: BlackBoxPair, it: IteratePair, dirs: DirectionPair, taus, xis):
    """Matrix of <u_t, A v_s> - <V* u_t, v_s> / (|u_t| |v_s|) evaluated through the oracles."""
    U = it.u[None, :] + np.asarray(taus)[:, None] * dirs.w[None, :]
    Vs = it.v[None, :] + np.asarray(xis)[:, None] * dirs.x[None, :]
    AV = np.array([pair.forward(v) for v in Vs])
    VU = np.array([pair.adjoint(u) for u in U])
    num = U @ AV.T - VU @ Vs.T
    return num / np.outer(np.linalg.norm(U, axis=1), np.linalg.norm(Vs, axis=1))


def grid_maximize_s(pair, it, dirs, range_=(-100.0, 100.0), n_points: int = 10001) -> GridMax1D:
    """Maximize s(t) = <u+tw, (A-V)(v+tx)> / (|u+tw| |v+tx|) by brute force."""
    return grid_maximize(lambda ts: _diag_along(pair, it, dirs, ts), range_[0], range_[1], n_points)


def _diag_along(pair, it, dirs, ts):
    U = it.u[None, :] + ts[:, None] * dirs.w[None, :]
    Vs = it.v[None, :] + ts[:, None] * dirs.x[None, :]
    num = np.array([np.dot(u, pair.forward(v)) - np.dot(pair.adjoint(u), v) for u, v in zip(U, Vs)])
    return num / (np.linalg.norm(U, axis=1) * np.linalg.norm(Vs, axis=1))


def grid_maximize_q(pair, it, dirs, range_=(-50.0, 50.0), n_points: int = 200) -> GridMax2D:
    """Maximize q(t, s)^2 over a 2-D grid with directly evaluated quotients."""
    f = lambda taus, xis: _along(pair, it, dirs, taus, xis) ** 2
    return grid_maximize_2d(f, range_[0], range_[1], n_points)


def adjointness_test(forward: ForwardOracle, adjoint: AdjointOracle, trials: int, rng) -> float:
    """Largest relative defect |<Av,u> - <v,V*u>| / (|Av||u| + |v||V*u| + eps) over random unit u, v."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if forward.dims != adjoint.dims:
        raise ValueError(f"oracle dims differ: {forward.dims} vs {adjoint.dims}")
    m, d = forward.dims
    worst = 0.0
    for _ in range(trials):
        v = sample_unit_sphere(rng, d)
        u = sample_unit_sphere(rng, m)
        Av = forward(v)
        Vu = adjoint(u)
        defect = abs(np.dot(Av, u) - np.dot(v, Vu))
        scale = np.linalg.norm(Av) + np.linalg.norm(Vu) + np.finfo(float).eps
        worst = max(worst, defect / scale)
    return float(worst)
