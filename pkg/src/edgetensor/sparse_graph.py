"""Sparse symmetric adjacency matrices and degree renormalization.

Entries are stored in canonical (row, col) sorted order so equality tests
and serialization are deterministic. All weights are float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import autodiff as ad


@dataclass(frozen=True)
class SparseAdjacency:
    """An n x n sparse real matrix stored as sorted COO triplets.

    Houses the raw adjacency A, its renormalized form, and learned
    attention weights (which share A's support). Immutable after
    construction.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.intp))
        object.__setattr__(self, "cols", np.asarray(self.cols, dtype=np.intp))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if self.rows.shape != self.cols.shape or self.rows.shape != self.weights.shape:
            raise ValueError("rows, cols and weights must have equal length")
        if self.rows.size:
            if self.rows.min() < 0 or self.rows.max() >= self.n:
                raise ValueError("row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.n:
                raise ValueError("col index out of range")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("adjacency weights must be finite")
        keys = self.rows * self.n + self.cols
        if keys.size and np.any(np.diff(keys) <= 0):
            order = np.argsort(keys, kind="stable")
            keys_sorted = keys[order]
            if np.any(np.diff(keys_sorted) == 0):
                raise ValueError("duplicate (row, col) entry")
            object.__setattr__(self, "rows", self.rows[order])
            object.__setattr__(self, "cols", self.cols[order])
            object.__setattr__(self, "weights", self.weights[order])
        if self.symmetric:
            perm = self.transpose_permutation
            if not np.array_equal(self.weights, self.weights[perm]):
                raise ValueError("symmetric flag set but entries are not symmetric")

    @classmethod
    def from_entries(cls, n, entries, symmetric=True):
        """Build from an iterable of (i, j, w) triplets."""
        entries = list(entries)
        if entries:
            rows, cols, weights = map(np.asarray, zip(*entries))
        else:
            rows = cols = np.zeros(0, dtype=np.intp)
            weights = np.zeros(0)
        return cls(n, rows, cols, weights, symmetric)

    @classmethod
    def from_undirected_edges(cls, n, pairs, weights=None):
        """Build a symmetric matrix from undirected (i, j) pairs, i != j."""
        pairs = np.asarray(pairs, dtype=np.intp).reshape(-1, 2)
        if weights is None:
            weights = np.ones(len(pairs))
        weights = np.asarray(weights, dtype=np.float64)
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        return cls(n, rows, cols, np.concatenate([weights, weights]), symmetric=True)

    @property
    def nnz(self):
        return self.rows.size

    @cached_property
    def keys(self):
        """Encoded entry positions row*n+col, strictly increasing."""
        return self.rows * self.n + self.cols

    @cached_property
    def indptr(self):
        """CSR row pointer over the sorted entries."""
        counts = np.bincount(self.rows, minlength=self.n)
        ptr = np.zeros(self.n + 1, dtype=np.intp)
        np.cumsum(counts, out=ptr[1:])
        return ptr

    @cached_property
    def transpose_permutation(self):
        """Permutation p with (rows, cols)[p[k]] == (cols[k], rows[k])."""
        tkeys = self.cols * self.n + self.rows
        perm = np.searchsorted(self.keys, tkeys)
        if np.any(perm >= self.nnz) or not np.array_equal(self.keys[perm], tkeys):
            raise ValueError("entry pattern is not symmetric")
        return perm

    def index_of(self, i, j):
        """Index of entry (i, j), or -1 if absent."""
        key = i * self.n + j
        pos = np.searchsorted(self.keys, key)
        if pos < self.nnz and self.keys[pos] == key:
            return int(pos)
        return -1

    def with_weights(self, weights, symmetric=None):
        """Same pattern, new entry values."""
        return SparseAdjacency(
            self.n, self.rows, self.cols, weights,
            self.symmetric if symmetric is None else symmetric,
        )

    def to_dense(self):
        dense = np.zeros((self.n, self.n))
        dense[self.rows, self.cols] = self.weights
        return dense

    def entries(self):
        """Canonical (i, j, w) triplets."""
        return [
            (int(i), int(j), float(w))
            for i, j, w in zip(self.rows, self.cols, self.weights)
        ]


@dataclass(frozen=True)
class DegreeVector:
    """Row sums of the self-loop-augmented adjacency A + I."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


@dataclass(frozen=True)
class LabeledGraph:
    """A graph with node features, class labels and train/val/test splits.

    ``labels[i] == -1`` marks an unlabeled node. Split index sets are
    disjoint; any of them may be empty.
    """

    adjacency: SparseAdjacency
    node_features: np.ndarray
    labels: np.ndarray
    splits: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "node_features",
                           np.asarray(self.node_features, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.intp))
        n = self.adjacency.n
        if self.node_features.shape[0] != n:
            raise ValueError("feature row count must equal node count")
        if self.labels.shape != (n,):
            raise ValueError("labels must be a length-n vector")
        splits = {k: np.asarray(v, dtype=np.intp) for k, v in self.splits.items()}
        object.__setattr__(self, "splits", splits)
        seen = set()
        for name, idx in splits.items():
            s = set(idx.tolist())
            if s & seen:
                raise ValueError(f"split {name!r} overlaps another split")
            seen |= s

    @property
    def n(self):
        return self.adjacency.n

    @property
    def num_classes(self):
        labeled = self.labels[self.labels >= 0]
        return int(labeled.max()) + 1 if labeled.size else 0


def _augmented(adjacency):
    """Entries of A + I, canonically sorted with duplicates summed."""
    n = adjacency.n
    rows = np.concatenate([adjacency.rows, np.arange(n)])
    cols = np.concatenate([adjacency.cols, np.arange(n)])
    weights = np.concatenate([adjacency.weights, np.ones(n)])
    keys = rows * n + cols
    ukeys, inverse = np.unique(keys, return_inverse=True)
    w = np.bincount(inverse, weights=weights, minlength=ukeys.size)
    return ukeys // n, ukeys % n, w


def degree_vector(adjacency):
    """Row sums of A + I."""
    if np.any(adjacency.weights < 0):
        raise ValueError("adjacency weights must be nonnegative")
    rows, _, weights = _augmented(adjacency)
    return DegreeVector(np.bincount(rows, weights=weights, minlength=adjacency.n))


def renormalize(adjacency):
    """Symmetric degree renormalization with self-loops.

    Returns D^{-1/2} (A + I) D^{-1/2} where D holds the row sums of A + I.
    Existing self-loops in A are summed with the injected identity. The
    output support is support(A) union the diagonal.
    """
    if not adjacency.symmetric:
        raise ValueError("renormalize requires a symmetric adjacency")
    if np.any(adjacency.weights < 0):
        raise ValueError("adjacency weights must be nonnegative")
    rows, cols, weights = _augmented(adjacency)
    deg = np.bincount(rows, weights=weights, minlength=adjacency.n)
    if np.any(deg <= 0):
        raise RuntimeError("zero degree after adding self-loops")
    inv_sqrt = 1.0 / np.sqrt(deg)
    # Grouping keeps mirrored entries bitwise equal.
    scaled = weights * (inv_sqrt[rows] * inv_sqrt[cols])
    return SparseAdjacency(adjacency.n, rows, cols, scaled, symmetric=True)


def renormalize_weights(rows, cols, n, weights):
    """Differentiable renormalization of entry values on a fixed pattern.

    The pattern must already contain every diagonal slot; the identity is
    added to the diagonal values before degree normalization. ``weights``
    may be a Var (gradients flow through) or a plain array.
    """
    w = ad.as_var(weights)
    diag = np.where(rows == cols, 1.0, 0.0)
    w_bar = ad.add(w, diag)
    deg = ad.segment_sum(w_bar, rows, n)
    inv_sqrt = ad.rsqrt(deg)
    return ad.mul(w_bar, ad.mul(ad.gather_rows(inv_sqrt, rows),
                                ad.gather_rows(inv_sqrt, cols)))
