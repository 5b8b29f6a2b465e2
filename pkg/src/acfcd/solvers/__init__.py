from .common import NumericalFailure, SolverConfig, TrainResult, box_violation
from .driver import PROBLEMS, make_state, train
from .lasso import LassoState
from .logreg import LogRegDualState
from .mcsvm import McSvmState
from .svm import SvmDualState

__all__ = [
    "NumericalFailure",
    "SolverConfig",
    "TrainResult",
    "box_violation",
    "PROBLEMS",
    "make_state",
    "train",
    "LassoState",
    "SvmDualState",
    "LogRegDualState",
    "McSvmState",
]
