"""Dual block coordinate descent for the all-in-one multiclass SVM.

Primal (margin-2 convention of the original all-together formulation):

    min  (1/2) sum_c ||w_c||^2 + C sum_i sum_{c != y_i} xi_i^c
    s.t. <w_{y_i} - w_c, x_i> >= 2 - xi_i^c,    xi_i^c >= 0

Dual variables alpha_i^c in [0, C] for c != y_i, with

    w_c = sum_{i: y_i = c} (sum_m alpha_i^m) x_i - sum_{i: y_i != c} alpha_i^c x_i
    f(alpha) = (1/2) sum_c ||w_c||^2 - 2 sum_{i, c} alpha_i^c.

One outer step treats the K-1 variables of example i as a block: the K
inner products <w_c, x_i> are computed once (K * nnz(row i) operations),
then an inner greedy coordinate loop repeatedly picks the block component
with the largest KKT violation (ties to the lowest class id) and applies a
clipped Newton move with curvature 2 <x_i, x_i>, updating the cached inner
products in O(1).  The loop stops after 10*K moves or when the block
violation falls below epsilon/10; the weight vectors absorb the net change
through at most K sparse updates.

With two classes the block has a single variable and the update reduces
exactly to the binary hinge dual's step, so trajectories coincide with the
binary solver's at equal C; objective values come out exactly doubled
(margin 2 instead of 1).
"""

from __future__ import annotations

import numpy as np

from .common import NumericalFailure, box_violation

__all__ = ["McSvmState"]

_INNER_PER_CLASS = 10


class McSvmState:
    problem = "mcsvm"

    def __init__(self, dataset, config):
        if dataset.class_values is None:
            raise ValueError("multiclass SVM needs classification labels")
        if dataset.n_classes < 2:
            raise ValueError("need at least 2 classes")
        self.dataset = dataset
        self.C = float(config.reg)
        self.labels = np.asarray(dataset.labels, dtype=np.int64)
        self.K = dataset.n_classes
        # slot [i, labels[i]] is not a variable and stays 0
        self.alpha = np.zeros((dataset.n_examples, self.K))
        self.W = np.zeros((self.K, dataset.n_features))
        self.q = dataset.row_squared_norms()
        self.inner_eps = config.epsilon / 10.0
        self.n_coordinates = dataset.n_examples
        self.skipped_rows = set()
        self.last_inner_moves = 0

    def step(self, i: int, counter):
        """Greedy inner CD over example i's block; returns (block gain,
        block KKT violation at entry)."""
        q = self.q[i]
        if q == 0.0:
            self.skipped_rows.add(i)
            return 0.0, 0.0
        K = self.K
        y = self.labels[i]
        C = self.C
        m = np.array([self.dataset.dot_row(self.W[c], i, counter) for c in range(K)])
        if not np.isfinite(m).all():
            raise NumericalFailure(f"non-finite margin at example {i}")
        a = self.alpha[i]
        a_entry = a.copy()
        my = m[y]
        curv = 2.0 * q
        entry_viol = 0.0
        gain = 0.0
        moves = 0
        limit = _INNER_PER_CLASS * K
        while True:
            best_c = -1
            best_v = 0.0
            for c in range(K):
                if c == y:
                    continue
                v = box_violation(my - m[c] - 2.0, a[c], 0.0, C)
                if v > best_v:
                    best_v = v
                    best_c = c
            if moves == 0:
                entry_viol = best_v
            if best_v < self.inner_eps or moves >= limit:
                break
            c = best_c
            g = my - m[c] - 2.0
            a_new = min(max(a[c] - g / curv, 0.0), C)
            delta = a_new - a[c]
            if delta == 0.0:
                break
            gain -= g * delta + q * delta * delta
            a[c] = a_new
            my += delta * q
            m[c] -= delta * q
            moves += 1
        self.last_inner_moves = moves
        net = a - a_entry
        total = float(net.sum())
        if total != 0.0:
            self.dataset.axpy_row(self.W[y], i, total)
        for c in range(K):
            if c != y and net[c] != 0.0:
                self.dataset.axpy_row(self.W[c], i, -net[c])
        return gain, entry_viol

    def _fresh_W(self):
        W = np.zeros_like(self.W)
        for i in range(self.dataset.n_examples):
            y = self.labels[i]
            row_sum = float(self.alpha[i].sum())
            if row_sum != 0.0:
                self.dataset.axpy_row(W[y], i, row_sum)
            for c in range(self.K):
                if c != y and self.alpha[i, c] != 0.0:
                    self.dataset.axpy_row(W[c], i, -self.alpha[i, c])
        return W

    def objective(self) -> float:
        W = self._fresh_W()
        return 0.5 * float((W * W).sum()) - 2.0 * float(self.alpha.sum())

    def consistency_error(self) -> float:
        W = self._fresh_W()
        scale = 1.0 + float(np.abs(W).max(initial=0.0))
        return float(np.abs(W - self.W).max(initial=0.0)) / scale

    def solution(self):
        return self.alpha.copy(), self.W.copy()
