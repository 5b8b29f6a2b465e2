"""Dual coordinate descent for l2-regularized logistic regression.

Dual objective over examples i (entropy-like barrier keeps alpha interior):

    f(alpha) = (1/2) ||w||^2
               + sum_i [ alpha_i log alpha_i + (C - alpha_i) log(C - alpha_i) ]

with w = sum_i alpha_i y_i x_i and 0 < alpha_i < C.  The restriction to a
single alpha_i = a is

    phi(a) = (1/2) q_ii a^2 + a (y_i <w, x_i> - q_ii alpha_i)
             + a log a + (C - a) log(C - a) + const,

minimized by a safeguarded Newton iteration: bisection brackets start at
(1e-12, C - 1e-12), Newton proposals falling outside the bracket are
replaced by its midpoint, and iteration stops once |phi'| <= 1e-10 *
max(1, C) or after 50 rounds.  A collapsed bracket yields a zero step.
"""

from __future__ import annotations

import math

import numpy as np

from ..data import binary_labels
from .common import NumericalFailure

__all__ = ["LogRegDualState"]

_GRAD_TOL = 1e-10
_MAX_NEWTON = 50


def _entropy(a: float, C: float) -> float:
    return a * math.log(a) + (C - a) * math.log(C - a)


def _solve_piecewise(q: float, lin: float, C: float, a0: float) -> float:
    """Minimize phi(a) = q a^2/2 + lin*a + a log a + (C-a) log(C-a) on (0, C)."""
    lo = 1e-12
    hi = C - 1e-12
    if not lo < hi:
        return 0.5 * C  # degenerate box, nothing sensible to solve
    tol = _GRAD_TOL * max(1.0, C)

    def dphi(a):
        return q * a + lin + math.log(a) - math.log(C - a)

    if dphi(lo) >= 0.0:
        return lo
    if dphi(hi) <= 0.0:
        return hi
    a = min(max(a0, lo), hi)
    for _ in range(_MAX_NEWTON):
        g = dphi(a)
        if abs(g) <= tol:
            return a
        if g > 0.0:
            hi = a
        else:
            lo = a
        if hi - lo <= 1e-14 * max(1.0, C):
            return a0  # bracket collapsed: zero step
        h = q + 1.0 / a + 1.0 / (C - a)
        a_next = a - g / h
        if not lo < a_next < hi:
            a_next = 0.5 * (lo + hi)
        a = a_next
    return a


class LogRegDualState:
    problem = "logreg"

    def __init__(self, dataset, config):
        self.dataset = dataset
        self.C = float(config.reg)
        self.y = binary_labels(dataset)
        self.alpha = np.full(dataset.n_examples, min(0.5 * self.C, 0.5))
        self.q = dataset.row_squared_norms()
        self.w = np.zeros(dataset.n_features)
        for i in range(dataset.n_examples):
            dataset.axpy_row(self.w, i, self.alpha[i] * self.y[i])
        self.n_coordinates = dataset.n_examples

    def step(self, i: int, counter):
        """Safeguarded Newton on the 1-d restriction; returns (gain, |phi'|)."""
        C = self.C
        m = self.dataset.dot_row(self.w, i, counter)
        if not np.isfinite(m):
            raise NumericalFailure(f"non-finite margin at example {i}")
        a_old = self.alpha[i]
        ym = self.y[i] * m
        viol = abs(ym + math.log(a_old / (C - a_old)))  # interior: plain gradient
        lin = ym - self.q[i] * a_old
        a_new = _solve_piecewise(self.q[i], lin, C, a_old)
        delta = a_new - a_old
        if delta != 0.0:
            self.alpha[i] = a_new
            self.dataset.axpy_row(self.w, i, delta * self.y[i])
        gain = -(
            ym * delta
            + 0.5 * self.q[i] * delta * delta
            + _entropy(a_new, C)
            - _entropy(a_old, C)
        )
        return gain, viol

    def _fresh_w(self):
        w = np.zeros(self.dataset.n_features)
        for i in range(self.dataset.n_examples):
            self.dataset.axpy_row(w, i, self.alpha[i] * self.y[i])
        return w

    def objective(self) -> float:
        w = self._fresh_w()
        ent = sum(_entropy(float(a), self.C) for a in self.alpha)
        return 0.5 * float(w @ w) + ent

    def consistency_error(self) -> float:
        w = self._fresh_w()
        scale = 1.0 + float(np.abs(w).max(initial=0.0))
        return float(np.abs(w - self.w).max(initial=0.0)) / scale

    def solution(self):
        return self.alpha.copy(), self.w.copy()
