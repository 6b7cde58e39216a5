"""Desk-scale parallel-beam projector pair for adjointness experiments.

Geometry conventions
--------------------
* The image has n x n unit pixels covering the square [-n/2, n/2]^2.
  Pixel (i, j) (row i, column j, flat index i*n + j) spans
  x in [-n/2 + j, -n/2 + j + 1] and y in [n/2 - i - 1, n/2 - i]; row 0 is at
  the top.
* For angle theta the detector axis is (cos theta, sin theta) and rays run
  along (-sin theta, cos theta). Bin b sits at detector coordinate
  s_b = (b - (bins - 1)/2) * spacing and its ray passes through s_b times
  the detector axis.
* Sinograms are stored angle-major: index = angle_index * bins + b.

The line model weights each (ray, pixel) by the length of the ray inside the
pixel, found by Siddon's traversal of the grid-line crossings. The
mismatched backprojector is pixel-driven: every pixel centre is projected onto
the detector and picks up the nearest bin, weighted by pixel area / spacing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .operator import AdjointOracle, BlackBoxPair, DimensionError, ForwardOracle

__all__ = [
    "ProjectorGeometry",
    "parallel_geometry",
    "SparseProjectionWeights",
    "ray_bounds",
    "chord_length",
    "build_line_model",
    "mismatched_matrix",
    "project",
    "backproject_exact",
    "backproject_mismatched",
    "tomo_pair",
]


@dataclass(frozen=True)
class ProjectorGeometry:
    image_size: int
    angles: tuple[float, ...]
    detector_bins: int
    detector_spacing: float = 1.0

    def __post_init__(self):
        if self.image_size < 2:
            raise ValueError(f"image_size must be >= 2, got {self.image_size}")
        if len(self.angles) == 0:
            raise ValueError("at least one angle is required")
        if self.detector_bins < 2:
            raise ValueError(f"detector_bins must be >= 2, got {self.detector_bins}")
        if not self.detector_spacing > 0:
            raise ValueError("detector_spacing must be positive")

    @property
    def n_pixels(self) -> int:
        return self.image_size**2

    @property
    def n_rays(self) -> int:
        return len(self.angles) * self.detector_bins

    def bin_positions(self) -> np.ndarray:
        return (np.arange(self.detector_bins) - (self.detector_bins - 1) / 2.0) * self.detector_spacing


def parallel_geometry(image_size: int, n_angles: int, bins: int, spacing: float = 1.0) -> ProjectorGeometry:
    """Angles uniform over [0, pi)."""
    angles = tuple(float(k * math.pi / n_angles) for k in range(n_angles))
    return ProjectorGeometry(image_size, angles, bins, spacing)


@dataclass(frozen=True)
class SparseProjectionWeights:
    geometry: ProjectorGeometry
    matrix: sp.csr_matrix  # n_rays x n_pixels

    def ray(self, angle_index: int, b: int) -> list[tuple[int, float]]:
        row = angle_index * self.geometry.detector_bins + b
        lo, hi = self.matrix.indptr[row], self.matrix.indptr[row + 1]
        return list(zip(self.matrix.indices[lo:hi].tolist(), self.matrix.data[lo:hi].tolist()))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def ray_bounds(n: int, theta: float, s: float) -> tuple[float, float] | None:
    """Parameter interval of the ray inside the image square (slab clipping), or None."""
    half = n / 2.0
    c, sn = math.cos(theta), math.sin(theta)
    # point(t) = s*(c, sn) + t*(-sn, c)
    lo, hi = -math.inf, math.inf
    for origin, direction in ((s * c, -sn), (s * sn, c)):
        if abs(direction) < 1e-15:
            if not -half <= origin <= half:
                return None
            continue
        t1 = (-half - origin) / direction
        t2 = (half - origin) / direction
        lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    if hi <= lo:
        return None
    return lo, hi


def chord_length(n: int, theta: float, s: float) -> float:
    bounds = ray_bounds(n, theta, s)
    return 0.0 if bounds is None else bounds[1] - bounds[0]


def _siddon_ray(n: int, theta: float, s: float) -> tuple[np.ndarray, np.ndarray]:
    bounds = ray_bounds(n, theta, s)
    if bounds is None:
        return np.empty(0, dtype=np.int64), np.empty(0)
    t0, t1 = bounds
    half = n / 2.0
    c, sn = math.cos(theta), math.sin(theta)
    ox, oy, dx, dy = s * c, s * sn, -sn, c
    planes = np.arange(n + 1) - half
    ts = [np.array([t0, t1])]
    if abs(dx) >= 1e-15:
        ts.append((planes - ox) / dx)
    if abs(dy) >= 1e-15:
        ts.append((planes - oy) / dy)
    t = np.unique(np.concatenate(ts))
    t = t[(t >= t0) & (t <= t1)]
    seg = np.diff(t)
    mid = 0.5 * (t[:-1] + t[1:])
    keep = seg > 1e-12
    seg, mid = seg[keep], mid[keep]
    col = np.floor(ox + mid * dx + half).astype(np.int64)
    row = n - 1 - np.floor(oy + mid * dy + half).astype(np.int64)
    np.clip(col, 0, n - 1, out=col)
    np.clip(row, 0, n - 1, out=row)
    idx = row * n + col
    # a ray running exactly along a grid line can revisit a pixel; merge
    uniq, inv = np.unique(idx, return_inverse=True)
    return uniq, np.bincount(inv, weights=seg)


@lru_cache(maxsize=16)
def build_line_model(geom: ProjectorGeometry) -> SparseProjectionWeights:
    n = geom.image_size
    rows, cols, vals = [], [], []
    for k, theta in enumerate(geom.angles):
        for b, s in enumerate(geom.bin_positions()):
            idx, w = _siddon_ray(n, theta, float(s))
            rows.append(np.full(idx.shape, k * geom.detector_bins + b))
            cols.append(idx)
            vals.append(w)
    W = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(geom.n_rays, geom.n_pixels),
    )
    W.sort_indices()
    return SparseProjectionWeights(geom, W)


@lru_cache(maxsize=16)
def mismatched_matrix(geom: ProjectorGeometry) -> sp.csr_matrix:
    """Pixel-driven nearest-bin backprojector as an n_pixels x n_rays matrix."""
    n = geom.image_size
    centers = np.arange(n) - (n - 1) / 2.0
    xc = np.tile(centers, n)
    yc = np.repeat(centers[::-1], n)
    weight = 1.0 / geom.detector_spacing
    rows, cols = [], []
    for k, theta in enumerate(geom.angles):
        s = xc * math.cos(theta) + yc * math.sin(theta)
        b = np.rint(s / geom.detector_spacing + (geom.detector_bins - 1) / 2.0).astype(np.int64)
        ok = (b >= 0) & (b < geom.detector_bins)
        rows.append(np.nonzero(ok)[0])
        cols.append(k * geom.detector_bins + b[ok])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sp.csr_matrix(
        (np.full(rows.shape, weight), (rows, cols)), shape=(geom.n_pixels, geom.n_rays)
    )


def _check(x, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != n:
        raise DimensionError(f"{what}: expected {n} values, got {x.shape[0]}")
    return x


def project(weights: SparseProjectionWeights, image) -> np.ndarray:
    image = _check(image, weights.geometry.n_pixels, "project")
    return weights.matrix @ image


def backproject_exact(weights: SparseProjectionWeights, sino) -> np.ndarray:
    sino = _check(sino, weights.geometry.n_rays, "backproject_exact")
    return weights.matrix.T @ sino


def backproject_mismatched(geom: ProjectorGeometry, sino) -> np.ndarray:
    sino = _check(sino, geom.n_rays, "backproject_mismatched")
    return mismatched_matrix(geom) @ sino


def tomo_pair(geom: ProjectorGeometry, matched: bool = True, dense: bool = True) -> BlackBoxPair:
    """A = line-model projector; V* = exact or mismatched backprojector.

    With ``dense=True`` the matrices are also materialized for dense-test
    diagnostics and relative error reporting.
    """
    weights = build_line_model(geom)
    m, d = geom.n_rays, geom.n_pixels
    fwd = ForwardOracle(lambda v: project(weights, v), m, d)
    if matched:
        adj = AdjointOracle(lambda u: backproject_exact(weights, u), m, d)
    else:
        adj = AdjointOracle(lambda u: backproject_mismatched(geom, u), m, d)
    if not dense:
        return BlackBoxPair(fwd, adj)
    A = weights.dense()
    V = A if matched else mismatched_matrix(geom).T.toarray()
    return BlackBoxPair(fwd, adj, dense_a=A, dense_v=V)
