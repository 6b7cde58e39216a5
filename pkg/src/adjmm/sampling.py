"""Random starting points on spheres and tangent search directions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operator import BlackBoxPair

__all__ = [
    "ESTIMATE_STREAM",
    "MATRIX_STREAM",
    "make_rng",
    "IteratePair",
    "DirectionPair",
    "PossibleAdjointPair",
    "sample_unit_sphere",
    "project_tangent",
    "sample_tangent_direction",
    "sample_directions",
    "initialize",
]

ESTIMATE_STREAM = 0
MATRIX_STREAM = 1

_MAX_REDRAWS = 100


def make_rng(seed: int, stream: int = ESTIMATE_STREAM) -> np.random.Generator:
    """Philox (counter-based) generator keyed by a 64-bit seed and a stream id."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass
class IteratePair:
    u: np.ndarray
    v: np.ndarray
    objective: float


@dataclass
class DirectionPair:
    w: np.ndarray  # tangent to u
    x: np.ndarray  # tangent to v


class PossibleAdjointPair(Exception):
    """The starting objective is numerically zero: A may equal V."""

    def __init__(self, iterate: IteratePair, threshold: float):
        super().__init__(
            f"initial objective {iterate.objective:.3e} within null threshold {threshold:.3e}"
        )
        self.iterate = iterate
        self.threshold = threshold


def sample_unit_sphere(rng: np.random.Generator, dim: int) -> np.ndarray:
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    for _ in range(_MAX_REDRAWS):
        y = rng.standard_normal(dim)
        nrm = np.linalg.norm(y)
        if nrm >= 1e-300:
            return y / nrm
    raise RuntimeError("could not draw a nonzero Gaussian vector")


def project_tangent(y, anchor) -> np.ndarray | None:
    """Normalized component of ``y`` orthogonal to the unit vector ``anchor``.

    Returns None when that component is too small to normalize.
    """
    y = np.asarray(y, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    z = y - np.dot(y, anchor) * anchor
    nrm = np.linalg.norm(z)
    if nrm < 1e-12 * max(1.0, np.linalg.norm(y)):
        return None
    return z / nrm


def sample_tangent_direction(rng: np.random.Generator, anchor) -> np.ndarray:
    anchor = np.asarray(anchor, dtype=np.float64)
    if anchor.ndim != 1 or anchor.shape[0] < 2:
        raise ValueError("no tangent sphere: anchor must have length >= 2")
    if abs(np.linalg.norm(anchor) - 1.0) > 1e-9:
        raise ValueError("anchor must be a unit vector")
    for _ in range(_MAX_REDRAWS):
        x = project_tangent(rng.standard_normal(anchor.shape[0]), anchor)
        if x is not None:
            return x
    raise RuntimeError("could not draw a tangent direction")


def sample_directions(rng: np.random.Generator, it: IteratePair) -> DirectionPair:
    # x (for v) is drawn before w (for u); the order is part of the seeded stream.
    x = sample_tangent_direction(rng, it.v)
    w = sample_tangent_direction(rng, it.u)
    return DirectionPair(w=w, x=x)


def initialize(
    pair: BlackBoxPair,
    rng: np.random.Generator,
    *,
    null_tol: float = 1e-12,
    u0=None,
    v0=None,
) -> IteratePair:
    """Random unit start with nonnegative objective <u, Av> - <V*u, v>.

    ``u0``/``v0`` override the random draws (used to construct edge cases).
    Raises :class:`PossibleAdjointPair` when |objective| is at most
    ``null_tol * (||Av|| + ||V*u||)``.
    """
    if pair.m < 2 or pair.d < 2:
        raise ValueError(f"need m >= 2 and d >= 2, got m={pair.m}, d={pair.d}")
    u = sample_unit_sphere(rng, pair.m) if u0 is None else np.array(u0, dtype=np.float64)
    v = sample_unit_sphere(rng, pair.d) if v0 is None else np.array(v0, dtype=np.float64)
    Av = pair.forward(v)
    Vu = pair.adjoint(u)
    objective = float(np.dot(u, Av) - np.dot(Vu, v))
    if objective < 0:
        u = -u
        objective = -objective
    it = IteratePair(u=u, v=v, objective=objective)
    threshold = null_tol * (np.linalg.norm(Av) + np.linalg.norm(Vu))
    if objective <= threshold:
        raise PossibleAdjointPair(it, threshold)
    return it
