"""Shared solver plumbing: configuration, results, box-KKT helper."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..scheduler import AcfConfig

__all__ = ["NumericalFailure", "SolverConfig", "TrainResult", "box_violation"]


class NumericalFailure(RuntimeError):
    """A solver state went non-finite; the run is aborted."""


@dataclass
class SolverConfig:
    """Knobs shared by all four solvers.

    reg : regularization strength; the l1 weight for lasso, the box bound C
        for the dual solvers
    epsilon : stopping threshold on the epoch-wise maximum KKT violation
    selection : "acf" (adaptive) or "uniform" (permutation sweeps)
    max_epochs : hard cap on epochs (one epoch = n coordinate steps)
    seed : master seed for selection randomness
    acf : constants of the adaptive update
    initial_prefs : optional starting preferences for warm starts
    """

    reg: float
    epsilon: float = 0.01
    selection: str = "acf"
    max_epochs: int = 1000
    seed: int = 0
    acf: AcfConfig = field(default_factory=AcfConfig)
    initial_prefs: Any = None

    def validate(self):
        if not (self.reg > 0.0 and np.isfinite(self.reg)):
            raise ValueError("reg must be positive and finite")
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")
        if self.selection not in ("acf", "uniform"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        self.acf.validate()


@dataclass
class TrainResult:
    problem: str
    solution: Any
    objective: float
    epochs: int
    iterations: int
    operations: int
    seconds: float
    converged: bool


def box_violation(g: float, a: float, lo: float, hi: float) -> float:
    """KKT violation of min f s.t. lo <= a <= hi with f'(a) = g: the
    magnitude of the unblocked descent direction."""
    if a <= lo:
        return max(0.0, -g)
    if a >= hi:
        return max(0.0, g)
    return abs(g)
