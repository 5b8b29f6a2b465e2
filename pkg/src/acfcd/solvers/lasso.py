"""Coordinate descent for l1-regularized least squares.

Objective over features j (columns):

    f(w) = (1/(2l)) * ||X w - y||^2 + lam * ||w||_1

Each step solves its one-dimensional restriction exactly: with
g = (1/l) <r, X_j> (r the maintained residual X w - y) and per-column
curvature h_j = (1/l) ||X_j||^2, the minimizer over the single coordinate
is the soft threshold of the Newton target u = w_j - g/h_j at level
lam/h_j, which lands on the positive branch, the negative branch, or
exactly at zero.
"""

from __future__ import annotations

import numpy as np

from .common import NumericalFailure

__all__ = ["LassoState"]


def _soft_threshold(u: float, t: float) -> float:
    if u > t:
        return u - t
    if u < -t:
        return u + t
    return 0.0


class LassoState:
    problem = "lasso"

    def __init__(self, dataset, config):
        self.dataset = dataset
        self.lam = float(config.reg)
        self.y = np.asarray(dataset.labels, dtype=np.float64)
        self.w = np.zeros(dataset.n_features)
        self.residual = -self.y.copy()  # X w - y at w = 0
        self.col_h = dataset.column_squared_norms() / dataset.n_examples
        self.n_coordinates = dataset.n_features

    def step(self, j: int, counter):
        """One exact coordinate minimization; returns (gain, entry KKT violation)."""
        l = self.dataset.n_examples
        g = self.dataset.dot_column(self.residual, j, counter) / l
        if not np.isfinite(g):
            raise NumericalFailure(f"non-finite gradient at coordinate {j}")
        h = self.col_h[j]
        w_old = self.w[j]
        if w_old == 0.0:
            viol = max(0.0, abs(g) - self.lam)
        else:
            viol = abs(g + self.lam * np.sign(w_old))
        if h > 0.0:
            w_new = _soft_threshold(w_old - g / h, self.lam / h)
        else:
            # empty column: the loss ignores w_j, only the penalty remains
            w_new = 0.0
        delta = w_new - w_old
        if delta != 0.0:
            self.w[j] = w_new
            self.dataset.axpy_column(self.residual, j, delta)
        gain = -(g * delta + 0.5 * h * delta * delta) - self.lam * (abs(w_new) - abs(w_old))
        return gain, viol

    def objective(self) -> float:
        """Recomputed from scratch (fresh residual)."""
        r = -self.y.copy()
        for j in np.nonzero(self.w)[0]:
            self.dataset.axpy_column(r, int(j), self.w[j])
        return float(r @ r) / (2 * self.dataset.n_examples) + self.lam * float(
            np.abs(self.w).sum()
        )

    def consistency_error(self) -> float:
        """Max deviation of the maintained residual from a fresh one."""
        r = -self.y.copy()
        for j in np.nonzero(self.w)[0]:
            self.dataset.axpy_column(r, int(j), self.w[j])
        scale = 1.0 + float(np.abs(r).max(initial=0.0))
        return float(np.abs(r - self.residual).max(initial=0.0)) / scale

    def solution(self):
        return self.w.copy()
