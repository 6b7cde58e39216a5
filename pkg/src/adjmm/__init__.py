"""Matrix-free estimation of ||A - V|| from a forward oracle for A and an adjoint oracle for V."""
from .diagnostics import EstimateReport, TraceRecord
from .estimator_one import run_one
from .estimator_two import run_two
from .operator import BlackBoxPair, dense_pair
from .oracle import jacobi_svd
from .runner import RunConfig
from .sampling import make_rng

__all__ = [
    "BlackBoxPair",
    "EstimateReport",
    "RunConfig",
    "TraceRecord",
    "dense_pair",
    "jacobi_svd",
    "make_rng",
    "run_one",
    "run_two",
]

__version__ = "0.1.0"
