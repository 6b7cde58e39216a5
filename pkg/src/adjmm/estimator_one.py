"""Stochastic ascent with one joint step size for u and v.

Along tangent directions (w, x) the normalized objective is

    s(t) = (a0 + t*a + t^2 * W) / (1 + t^2)

with a0 = <u, Mv>, W = <w, Mx> and a = <u, Mx> + <w, Mv>, M = A - V.
Its derivative is proportional to a + b*t - a*t^2 with b = 2(W - a0), so the
maximizer is a root of a quadratic and the ascent per step is exactly t*a/2.
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
    "StepCoefficientsOne",
    "coefficients_one",
    "classify_one",
    "step_size_one",
    "s_value",
    "advance",
    "iterate_one",
    "run_one",
]


@dataclass
class StepCoefficientsOne:
    a: float
    b: float
    objective: float  # <u, (A-V) v>, measured
    curvature: float  # <w, (A-V) x>
    tau: Optional[float] = None

    @classmethod
    def from_parts(cls, objective: float, a: float, curvature: float) -> "StepCoefficientsOne":
        return cls(a=a, b=2.0 * (curvature - objective), objective=objective, curvature=curvature)


def coefficients_one(pair: BlackBoxPair, it: IteratePair, dirs: DirectionPair) -> StepCoefficientsOne:
    """Two forward calls (A x, A v) and two adjoint calls (V* u, V* w)."""
    u, v, w, x = it.u, it.v, dirs.w, dirs.x
    Ax = pair.forward(x)
    Av = pair.forward(v)
    Vu = pair.adjoint(u)
    Vw = pair.adjoint(w)
    a = np.dot(u, Ax) + np.dot(w, Av) - np.dot(Vu, x) - np.dot(Vw, v)
    objective = np.dot(u, Av) - np.dot(Vu, v)
    curvature = np.dot(w, Ax) - np.dot(Vw, x)
    return StepCoefficientsOne.from_parts(float(objective), float(a), float(curvature))


def classify_one(a: float, b: float) -> str:
    """Shape of s for exact coefficients.

    ``"step"``: unique finite maximizer; ``"zero"``: a = 0, b < 0, maximum at
    t = 0; ``"unbounded"``: a = 0, b > 0, supremum not attained;
    ``"constant"``: a = b = 0.
    """
    if a != 0:
        return "step"
    if b < 0:
        return "zero"
    if b > 0:
        return "unbounded"
    return "constant"


def a_tolerance(c: StepCoefficientsOne) -> float:
    return 1e-14 * (abs(c.b) + abs(c.objective) + abs(c.curvature))


def step_size_one(c: StepCoefficientsOne, a_tol: Optional[float] = None) -> float:
    """sign(a) * (b/(2|a|) + sqrt(b^2/(4a^2) + 1)), evaluated without cancellation."""
    a, b = c.a, c.b
    if a_tol is None:
        a_tol = a_tolerance(c)
    if abs(a) <= a_tol:
        raise NeedResample(classify_one(0.0, b))
    g = b / (2.0 * abs(a))
    h = math.hypot(g, 1.0)
    mag = g + h if g >= 0 else 1.0 / (h - g)
    return math.copysign(mag, a)


def s_value(c: StepCoefficientsOne, tau: float) -> float:
    return (c.objective + tau * c.a + tau * tau * c.curvature) / (1.0 + tau * tau)


def _update(it: IteratePair, dirs: DirectionPair, tau: float, objective: float) -> IteratePair:
    u = it.u + tau * dirs.w
    v = it.v + tau * dirs.x
    return IteratePair(u=u / np.linalg.norm(u), v=v / np.linalg.norm(v), objective=objective)


def advance(pair: BlackBoxPair, it: IteratePair, rng, eps: float = 0.0, max_retries: int = 50):
    """One pass: fresh directions, then a step unless |a| < eps."""
    for _ in range(max_retries):
        dirs = sample_directions(rng, it)
        c = coefficients_one(pair, it, dirs)
        rec = TraceRecord(0, it.objective, a=c.a, b=c.b)
        if abs(c.a) < eps:
            rec.tau = 0.0
            return it, rec, True
        try:
            tau = step_size_one(c)
        except NeedResample:
            continue
        c.tau = tau
        new = _update(it, dirs, tau, s_value(c, tau))
        rec.objective, rec.tau = new.objective, tau
        return new, rec, False
    raise RuntimeError(f"no usable direction pair after {max_retries} draws")


def iterate_one(pair: BlackBoxPair, it: IteratePair, rng, max_retries: int = 50):
    """Take exactly one step; returns (new iterate, trace record)."""
    new, rec, _ = advance(pair, it, rng, 0.0, max_retries)
    rec.n_forward, rec.n_adjoint = pair.n_forward, pair.n_adjoint
    return new, rec


def run_one(pair: BlackBoxPair, config: Optional[RunConfig] = None, observer=None) -> EstimateReport:
    return run(pair, config or RunConfig(algorithm="one-step"), advance, observer)
