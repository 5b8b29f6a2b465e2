"""Coordinate descent with online adaptive coordinate frequencies.

The package has four parts: sparse data handling (`data`), the adaptive
selection machinery (`scheduler`), regularized ERM solvers driven by it
(`solvers`), and a Markov-chain lab for studying per-coordinate progress
rates of randomized coordinate descent on quadratics (`markov`).
"""

from .data import (
    LibsvmParseError,
    OpCounter,
    SparseDataset,
    SparseVector,
    binary_labels,
    parse_libsvm,
    serialize_libsvm,
)
from .markov import (
    BalanceResult,
    ChainState,
    ChainTerminated,
    QuadraticInstance,
    RateEstimate,
    ScanPoint,
    balance_rprop,
    cd_transition,
    estimate_rho,
    gamma_scan,
    generate_rbf_instance,
    simulate_log_drop,
)
from .scheduler import AcfConfig, AcfState, UniformSelector
from .solvers import NumericalFailure, SolverConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "BalanceResult",
    "ChainState",
    "ChainTerminated",
    "QuadraticInstance",
    "RateEstimate",
    "ScanPoint",
    "balance_rprop",
    "cd_transition",
    "estimate_rho",
    "gamma_scan",
    "generate_rbf_instance",
    "simulate_log_drop",
    "LibsvmParseError",
    "OpCounter",
    "SparseDataset",
    "SparseVector",
    "binary_labels",
    "parse_libsvm",
    "serialize_libsvm",
    "AcfConfig",
    "AcfState",
    "UniformSelector",
    "SolverConfig",
    "TrainResult",
    "NumericalFailure",
    "train",
    "__version__",
]
