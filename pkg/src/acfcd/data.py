"""Sparse datasets in libsvm text format and the primitives built on them.

Rows are examples, columns are features.  Both views are kept explicitly so
that row-oriented solvers (dual SVM variants) and column-oriented solvers
(lasso) run in O(nnz of the touched slice) per step.  All derivative work
goes through ``dot_row`` / ``dot_column``, which charge an :class:`OpCounter`
one unit per nonzero touched; in-place updates (``axpy_*``) are bookkeeping
and are not charged.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "LibsvmParseError",
    "OpCounter",
    "SparseVector",
    "SparseDataset",
    "parse_libsvm",
    "serialize_libsvm",
    "binary_labels",
    "dense_csv_lines",
    "sparse_text_lines",
]


class LibsvmParseError(ValueError):
    """Malformed libsvm text.  Carries the 1-based line number."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class OpCounter:
    """Tally of multiply-add operations spent in derivative computations.

    A full sweep of ``dot_row`` over all examples adds exactly the total
    number of nonzeros in the dataset.
    """

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, k: int):
        self.count += k

    def __repr__(self):
        return f"OpCounter(count={self.count})"


class SparseVector:
    """One sparse row or column: parallel index/value arrays.

    Indices are 0-based, strictly increasing (duplicates are rejected),
    values are finite floats.
    """

    __slots__ = ("indices", "values")

    def __init__(self, indices, values):
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if indices.size:
            if indices[0] < 0:
                raise ValueError("negative index")
            if np.any(np.diff(indices) <= 0):
                raise ValueError("indices must be strictly increasing (no duplicates)")
        self.indices = indices
        self.values = values

    @property
    def nnz(self) -> int:
        return self.indices.size

    def squared_norm(self) -> float:
        return float(np.dot(self.values, self.values))

    def __repr__(self):
        return f"SparseVector(nnz={self.nnz})"


class SparseDataset:
    """Immutable sparse matrix with labels, stored in row and column views.

    Parameters
    ----------
    rows : list of SparseVector
        One per example; indices are feature ids in [0, n_features).
    labels : array
        Float targets (regression) or integer class ids in [0, K)
        (classification).
    n_features : int
        Number of columns.  Must cover every index appearing in ``rows``.
    class_values : array or None
        For classification, the original label value for each class id,
        in class-id order.  None for regression.

    The column view is built eagerly at construction.
    """

    def __init__(self, rows, labels, n_features, class_values=None):
        labels = np.asarray(labels)
        if len(rows) != labels.shape[0]:
            raise ValueError("label count does not match row count")
        if len(rows) == 0:
            raise ValueError("empty dataset")
        self.rows = list(rows)
        self.labels = labels
        self.n_examples = len(rows)
        self.n_features = int(n_features)
        self.class_values = (
            None if class_values is None else np.asarray(class_values, dtype=np.float64)
        )
        for sv in self.rows:
            if sv.nnz and sv.indices[-1] >= self.n_features:
                raise ValueError("row index exceeds n_features")
        self.columns = self._build_columns()

    def _build_columns(self):
        row_ids = []
        col_ids = []
        vals = []
        for i, sv in enumerate(self.rows):
            if sv.nnz:
                row_ids.append(np.full(sv.nnz, i, dtype=np.int64))
                col_ids.append(sv.indices)
                vals.append(sv.values)
        if not row_ids:
            return [SparseVector([], []) for _ in range(self.n_features)]
        row_ids = np.concatenate(row_ids)
        col_ids = np.concatenate(col_ids)
        vals = np.concatenate(vals)
        order = np.lexsort((row_ids, col_ids))
        row_ids, col_ids, vals = row_ids[order], col_ids[order], vals[order]
        # split the (column-major sorted) triplets at column boundaries
        bounds = np.searchsorted(col_ids, np.arange(self.n_features + 1))
        return [
            SparseVector(row_ids[bounds[j] : bounds[j + 1]], vals[bounds[j] : bounds[j + 1]])
            for j in range(self.n_features)
        ]

    @property
    def nnz(self) -> int:
        return sum(sv.nnz for sv in self.rows)

    @property
    def n_classes(self) -> int:
        if self.class_values is None:
            raise ValueError("regression dataset has no classes")
        return self.class_values.shape[0]

    # -- the four primitives every solver step is built from ----------------

    def dot_row(self, w, i, counter: OpCounter) -> float:
        """<w, x_i>; charges nnz(row i) multiply-adds."""
        sv = self.rows[i]
        counter.add(sv.nnz)
        if not sv.nnz:
            return 0.0
        return float(np.dot(w[sv.indices], sv.values))

    def axpy_row(self, w, i, scale):
        """w += scale * x_i, in place on the dense vector w."""
        sv = self.rows[i]
        if sv.nnz:
            w[sv.indices] += scale * sv.values

    def dot_column(self, v, j, counter: OpCounter) -> float:
        """<v, X[:, j]>; charges nnz(column j) multiply-adds."""
        sv = self.columns[j]
        counter.add(sv.nnz)
        if not sv.nnz:
            return 0.0
        return float(np.dot(v[sv.indices], sv.values))

    def axpy_column(self, v, j, scale):
        """v += scale * X[:, j], in place."""
        sv = self.columns[j]
        if sv.nnz:
            v[sv.indices] += scale * sv.values

    # -- convenience ---------------------------------------------------------

    def row_squared_norms(self):
        return np.array([sv.squared_norm() for sv in self.rows])

    def column_squared_norms(self):
        return np.array([sv.squared_norm() for sv in self.columns])

    def to_dense(self):
        X = np.zeros((self.n_examples, self.n_features))
        for i, sv in enumerate(self.rows):
            X[i, sv.indices] = sv.values
        return X


def _parse_feature_token(tok, lineno):
    head, sep, tail = tok.partition(":")
    if not sep:
        raise LibsvmParseError(lineno, f"expected index:value pair, got {tok!r}")
    try:
        idx = int(head)
    except ValueError:
        raise LibsvmParseError(lineno, f"bad feature index {head!r}") from None
    if idx < 1:
        raise LibsvmParseError(lineno, f"feature indices are 1-based, got {idx}")
    try:
        val = float(tail)
    except ValueError:
        raise LibsvmParseError(lineno, f"bad feature value {tail!r}") from None
    if not np.isfinite(val):
        raise LibsvmParseError(lineno, f"non-finite feature value {tail!r}")
    return idx, val


def parse_libsvm(text: str, mode: str = "regression") -> SparseDataset:
    """Parse libsvm text ("label idx:val idx:val ...", indices 1-based).

    mode="regression" keeps labels as floats; mode="classification" remaps
    the distinct label values to contiguous class ids 0..K-1 (sorted by
    value) and records the original values on the dataset as
    ``class_values``.  Indices are converted to 0-based here and nowhere
    else.  Malformed input raises :class:`LibsvmParseError` with the
    offending line number.
    """
    if mode not in ("regression", "classification"):
        raise ValueError(f"unknown mode {mode!r}")
    rows = []
    raw_labels = []
    max_index = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmParseError(lineno, f"bad label {tokens[0]!r}") from None
        if not np.isfinite(label):
            raise LibsvmParseError(lineno, f"non-finite label {tokens[0]!r}")
        indices = []
        values = []
        prev = 0
        for tok in tokens[1:]:
            idx, val = _parse_feature_token(tok, lineno)
            if idx <= prev:
                raise LibsvmParseError(
                    lineno, f"feature indices must be strictly increasing, got {idx} after {prev}"
                )
            prev = idx
            indices.append(idx - 1)
            values.append(val)
        max_index = max(max_index, prev)
        rows.append(SparseVector(indices, values))
        raw_labels.append(label)
    if not rows:
        raise LibsvmParseError(0, "empty dataset")
    raw = np.array(raw_labels)
    if mode == "classification":
        class_values, labels = np.unique(raw, return_inverse=True)
        return SparseDataset(rows, labels.astype(np.int64), max_index, class_values)
    return SparseDataset(rows, raw, max_index)


def _fmt(x: float) -> str:
    # repr round-trips doubles exactly; trim the ".0" noise on integers
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def serialize_libsvm(dataset: SparseDataset) -> str:
    """Inverse of :func:`parse_libsvm`: parsing the output reproduces the
    dataset (indices, values, labels, class mapping) exactly."""
    lines = []
    for i, sv in enumerate(dataset.rows):
        if dataset.class_values is not None:
            label = dataset.class_values[dataset.labels[i]]
        else:
            label = dataset.labels[i]
        parts = [_fmt(label)]
        parts.extend(f"{j + 1}:{_fmt(v)}" for j, v in zip(sv.indices, sv.values))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def binary_labels(dataset: SparseDataset):
    """Class ids {0,1} as -1/+1 floats (id 0 -> -1, id 1 -> +1)."""
    if dataset.class_values is None:
        raise ValueError("not a classification dataset")
    if dataset.n_classes != 2:
        raise ValueError(f"need exactly 2 classes, got {dataset.n_classes}")
    return dataset.labels.astype(np.float64) * 2.0 - 1.0


def dense_csv_lines(vectors) -> list[str]:
    """Dense CSV rows (one vector per line, full precision)."""
    mat = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    return [",".join(_fmt(v) for v in row) for row in mat]


def sparse_text_lines(vectors) -> list[str]:
    """libsvm-style "idx:val" rows (1-based indices, zeros dropped)."""
    mat = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    out = []
    for row in mat:
        nz = np.nonzero(row)[0]
        out.append(" ".join(f"{j + 1}:{_fmt(row[j])}" for j in nz))
    return out
