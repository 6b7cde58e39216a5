"""Run configuration and the outer loop shared by both estimators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .diagnostics import EstimateReport, TraceRecord, eigen_residual
from .operator import BlackBoxPair
from .sampling import IteratePair, PossibleAdjointPair, initialize, make_rng

__all__ = ["ConfigError", "NeedResample", "RunConfig", "run"]

ALGORITHMS = ("one-step", "two-step")
DIAG_MODES = ("black-box", "dense-test")


class ConfigError(ValueError):
    pass


class NeedResample(Exception):
    """The sampled directions give no usable step; draw new ones."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class RunConfig:
    algorithm: str = "two-step"
    max_iters: int = 5000
    eps: float = 1e-8
    patience: int = 5
    seed: int = 0
    repeats: int = 1
    null_tol: float = 1e-12
    trace_path: Optional[str] = None
    diag_mode: str = "black-box"
    init_attempts: int = 4  # first draw plus three resamples
    max_retries: int = 50

    def validate(self) -> "RunConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.diag_mode not in DIAG_MODES:
            raise ConfigError(f"diag_mode must be one of {DIAG_MODES}, got {self.diag_mode!r}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.null_tol < 0:
            raise ConfigError(f"null_tol must be >= 0, got {self.null_tol}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.init_attempts < 1 or self.max_retries < 1:
            raise ConfigError("init_attempts and max_retries must be >= 1")
        return self


# A pass draws fresh directions, measures coefficients and (unless the
# stopping statistic is below eps) takes the optimal step. It returns the new
# iterate, a partially filled record, and whether the statistic was small.
PassFn = Callable[[BlackBoxPair, IteratePair, object, float, int], tuple[IteratePair, TraceRecord, bool]]


def run(
    pair: BlackBoxPair,
    config: RunConfig,
    pass_fn: PassFn,
    observer: Optional[Callable[[int, IteratePair], None]] = None,
) -> EstimateReport:
    config.validate()
    dense_test = config.diag_mode == "dense-test"
    if dense_test and not pair.is_dense:
        raise ConfigError("dense-test diagnostics need a pair with dense A and V")
    rng = make_rng(config.seed)

    def residual(it):
        return eigen_residual(pair, it) if dense_test else None

    null = None
    for _ in range(config.init_attempts):
        try:
            it = initialize(pair, rng, null_tol=config.null_tol)
            break
        except PossibleAdjointPair as exc:
            null = exc
    else:
        it = null.iterate
        row = TraceRecord(0, it.objective, residual=residual(it),
                          n_forward=pair.n_forward, n_adjoint=pair.n_adjoint)
        return EstimateReport(
            estimate=abs(it.objective), iterations=0, stop_reason="adjoint_pair",
            final_pair=it, trace=[row], n_forward=pair.n_forward,
            n_adjoint=pair.n_adjoint, seed=config.seed,
        )

    trace = [TraceRecord(0, it.objective, residual=residual(it),
                         n_forward=pair.n_forward, n_adjoint=pair.n_adjoint)]
    if observer is not None:
        observer(0, it)
    stop_reason = "max_iters"
    small_run = 0
    for k in range(1, config.max_iters + 1):
        it, rec, small = pass_fn(pair, it, rng, config.eps, config.max_retries)
        rec.iter = k
        rec.residual = residual(it)
        rec.n_forward, rec.n_adjoint = pair.n_forward, pair.n_adjoint
        trace.append(rec)
        if observer is not None:
            observer(k, it)
        small_run = small_run + 1 if small else 0
        if small_run >= config.patience:
            stop_reason = "tolerance"
            break
    return EstimateReport(
        estimate=it.objective, iterations=trace[-1].iter, stop_reason=stop_reason,
        final_pair=it, trace=trace, n_forward=pair.n_forward,
        n_adjoint=pair.n_adjoint, seed=config.seed,
    )
