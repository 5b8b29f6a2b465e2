"""Dual coordinate descent for the l2-regularized hinge loss (binary SVM).

Dual objective over examples i:

    f(alpha) = (1/2) sum_ij alpha_i alpha_j y_i y_j <x_i, x_j> - sum_i alpha_i
             = (1/2) ||w||^2 - sum_i alpha_i,   w = sum_i alpha_i y_i x_i

subject to 0 <= alpha_i <= C.  A step on i is a Newton move clipped to the
box; with the diagonal q_ii = <x_i, x_i> precomputed, the step costs one
sparse inner product plus one sparse update of the maintained w.
"""

from __future__ import annotations

import numpy as np

from ..data import binary_labels
from .common import NumericalFailure, box_violation

__all__ = ["SvmDualState"]


class SvmDualState:
    problem = "svm"

    def __init__(self, dataset, config):
        self.dataset = dataset
        self.C = float(config.reg)
        self.y = binary_labels(dataset)
        self.alpha = np.zeros(dataset.n_examples)
        self.w = np.zeros(dataset.n_features)
        self.q = dataset.row_squared_norms()
        self.n_coordinates = dataset.n_examples
        self.skipped_rows = set()  # zero-norm rows seen and left alone

    def step(self, i: int, counter):
        """Clipped Newton step on alpha_i; returns (gain, entry KKT violation)."""
        q = self.q[i]
        if q == 0.0:
            self.skipped_rows.add(i)
            return 0.0, 0.0
        m = self.dataset.dot_row(self.w, i, counter)
        if not np.isfinite(m):
            raise NumericalFailure(f"non-finite margin at example {i}")
        g = self.y[i] * m - 1.0
        a_old = self.alpha[i]
        viol = box_violation(g, a_old, 0.0, self.C)
        a_new = min(max(a_old - g / q, 0.0), self.C)
        delta = a_new - a_old
        if delta != 0.0:
            self.alpha[i] = a_new
            self.dataset.axpy_row(self.w, i, delta * self.y[i])
        gain = -(g * delta + 0.5 * q * delta * delta)
        return gain, viol

    def _fresh_w(self):
        w = np.zeros(self.dataset.n_features)
        for i in np.nonzero(self.alpha)[0]:
            self.dataset.axpy_row(w, int(i), self.alpha[i] * self.y[i])
        return w

    def objective(self) -> float:
        w = self._fresh_w()
        return 0.5 * float(w @ w) - float(self.alpha.sum())

    def consistency_error(self) -> float:
        w = self._fresh_w()
        scale = 1.0 + float(np.abs(w).max(initial=0.0))
        return float(np.abs(w - self.w).max(initial=0.0)) / scale

    def solution(self):
        return self.alpha.copy(), self.w.copy()
