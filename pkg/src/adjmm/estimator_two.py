"""Stochastic ascent with separate step sizes for u and v.

With a = <u,Mv>, b = <w,Mv>, c = <u,Mx>, d = <w,Mx> (M = A - V) the objective
along the directions is

    q(t, s) = (a + b t + c s + d t s) / sqrt((1 + t^2)(1 + s^2)).

Eliminating s through its optimality condition s = (c + d t)/(a + b t)
leaves q^2(t) = (a^2 + c^2 + 2 e t + (b^2 + d^2) t^2)/(1 + t^2) with
e = ab + cd, whose maximizer has the sign of e. The squared objective then
grows by exactly c^2 + t e per step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import EstimateReport, TraceRecord
from .operator import BlackBoxPair
from .runner import NeedResample, RunConfig, run
from .sampling import DirectionPair, IteratePair, sample_directions

__all__ = [
    "StepCoefficientsTwo",
    "coefficients_two",
    "classify_two",
    "step_sizes_two",
    "q_value",
    "q_squared_reduced",
    "advance",
    "iterate_two",
    "run_two",
]


@dataclass
class StepCoefficientsTwo:
    a: float
    b: float
    c: float
    d: float
    tau: Optional[float] = None
    xi: Optional[float] = None

    @property
    def e(self) -> float:
        return self.a * self.b + self.c * self.d

    @property
    def f(self) -> float:
        return self.a**2 + self.c**2 - self.b**2 - self.d**2


def coefficients_two(pair: BlackBoxPair, it: IteratePair, dirs: DirectionPair) -> StepCoefficientsTwo:
    """Two forward calls (A v, A x) and two adjoint calls (V* u, V* w)."""
    u, v, w, x = it.u, it.v, dirs.w, dirs.x
    Av = pair.forward(v)
    Ax = pair.forward(x)
    Vu = pair.adjoint(u)
    Vw = pair.adjoint(w)
    return StepCoefficientsTwo(
        a=float(np.dot(u, Av) - np.dot(Vu, v)),
        b=float(np.dot(w, Av) - np.dot(Vw, v)),
        c=float(np.dot(u, Ax) - np.dot(Vu, x)),
        d=float(np.dot(w, Ax) - np.dot(Vw, x)),
    )


def classify_two(a: float, b: float, c: float, d: float) -> str:
    """Shape of the reduced q^2(t) for exact coefficients.

    ``"step"`` when ab + cd != 0. Otherwise ``"zero"`` (t = 0 is the
    maximizer, a^2 + c^2 > b^2 + d^2), ``"unbounded"`` (supremum only
    approached as |t| -> inf) or ``"constant"``.
    """
    if a * b + c * d != 0:
        return "step"
    gap = a * a + c * c - b * b - d * d
    if gap > 0:
        return "zero"
    if gap < 0:
        return "unbounded"
    return "constant"


def e_tolerance(co: StepCoefficientsTwo) -> float:
    return 1e-14 * (co.a**2 + co.b**2 + co.c**2 + co.d**2)


def step_sizes_two(co: StepCoefficientsTwo, e_tol: Optional[float] = None) -> tuple[float, float]:
    e, f = co.e, co.f
    if e_tol is None:
        e_tol = e_tolerance(co)
    if abs(e) <= e_tol:
        raise NeedResample(classify_two(co.a, co.b, co.c, co.d) if e == 0 else "near_degenerate")
    # the two roots of t^2 + (f/e) t - 1 multiply to -1, so the
    # cancelling branch is replaced by its reciprocal
    g = f / (2.0 * abs(e))
    h = math.hypot(g, 1.0)
    mag = 1.0 / (g + h) if g > 0 else h - g
    tau = math.copysign(mag, e)
    denom = co.a + tau * co.b
    if abs(denom) <= 1e-300:
        raise NeedResample("denominator")
    xi = (co.c + tau * co.d) / denom
    return tau, xi


def q_value(co: StepCoefficientsTwo, tau: float, xi: float) -> float:
    num = co.a + tau * co.b + xi * co.c + tau * xi * co.d
    return num / math.sqrt((1.0 + tau * tau) * (1.0 + xi * xi))


def q_squared_reduced(co: StepCoefficientsTwo, tau: float) -> float:
    """q^2 on the curve where xi is optimal for the given tau."""
    return (co.a**2 + co.c**2 + 2.0 * tau * co.e + tau * tau * (co.b**2 + co.d**2)) / (1.0 + tau * tau)


def _update(it: IteratePair, dirs: DirectionPair, tau: float, xi: float, q: float) -> IteratePair:
    u = it.u + tau * dirs.w
    v = it.v + xi * dirs.x
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    if q < 0:
        # maximizing q^2 can land on -sigma of the 2x2 block; flipping u
        # keeps the objective positive with the same magnitude
        u, q = -u, -q
    return IteratePair(u=u, v=v, objective=q)


def advance(pair: BlackBoxPair, it: IteratePair, rng, eps: float = 0.0, max_retries: int = 50):
    """One pass: fresh directions, then a step unless |b| + |c| < eps."""
    for _ in range(max_retries):
        dirs = sample_directions(rng, it)
        co = coefficients_two(pair, it, dirs)
        rec = TraceRecord(0, it.objective, a=co.a, b=co.b, c=co.c, d=co.d)
        if abs(co.b) + abs(co.c) < eps:
            rec.tau = rec.xi = 0.0
            return it, rec, True
        try:
            tau, xi = step_sizes_two(co)
        except NeedResample:
            continue
        co.tau, co.xi = tau, xi
        new = _update(it, dirs, tau, xi, q_value(co, tau, xi))
        rec.objective, rec.tau, rec.xi = new.objective, tau, xi
        return new, rec, False
    raise RuntimeError(f"no usable direction pair after {max_retries} draws")


def iterate_two(pair: BlackBoxPair, it: IteratePair, rng, max_retries: int = 50):
    """Take exactly one step; returns (new iterate, trace record)."""
    new, rec, _ = advance(pair, it, rng, 0.0, max_retries)
    rec.n_forward, rec.n_adjoint = pair.n_forward, pair.n_adjoint
    return new, rec


def run_two(pair: BlackBoxPair, config: Optional[RunConfig] = None, observer=None) -> EstimateReport:
    return run(pair, config or RunConfig(algorithm="two-step"), advance, observer)
