"""Sparse n x n x p edge-feature tensors and their mode products.

The tensor's first two modes are restricted to a fixed symmetric support
(the graph's edges plus the diagonal). Mode-1/2 products against a sparse
matrix are computed only for output slots inside the support; everything
the full dense product would create outside it is dropped. A precomputed
contraction plan lists the surviving (output slot, matrix entry, input
slot) triples so forward and adjoint passes share one kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .sparse_graph import SparseAdjacency


@dataclass(frozen=True)
class EdgeFeatureTensor:
    """Edge features: one length-p vector per stored (i, j) slot.

    The slot list is sorted by (row, col), symmetric as a pair set, and
    contains every diagonal slot (i, i). ``values`` has shape
    (num_slots, p); during a traced forward pass it may be an autodiff Var
    instead of a plain array.
    """

    n: int
    p: int
    rows: np.ndarray
    cols: np.ndarray
    values: object

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.intp))
        object.__setattr__(self, "cols", np.asarray(self.cols, dtype=np.intp))
        m = self.rows.size
        if self.cols.size != m:
            raise ValueError("rows and cols must have equal length")
        if m:
            if self.rows.min() < 0 or self.rows.max() >= self.n:
                raise ValueError("slot row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.n:
                raise ValueError("slot col index out of range")
        keys = self.rows * self.n + self.cols
        if np.any(np.diff(keys) <= 0):
            raise ValueError("slots must be sorted by (row, col) without duplicates")
        diag = np.arange(self.n) * self.n + np.arange(self.n)
        if not np.all(np.isin(diag, keys)):
            raise ValueError("support must contain every diagonal slot")
        tkeys = np.sort(self.cols * self.n + self.rows)
        if not np.array_equal(keys, tkeys):
            raise ValueError("support must be symmetric as a set of pairs")
        if isinstance(self.values, Var):
            shape = self.values.value.shape
        else:
            object.__setattr__(self, "values",
                               np.asarray(self.values, dtype=np.float64))
            if not np.all(np.isfinite(self.values)):
                raise ValueError("tensor values must be finite")
            shape = self.values.shape
        if shape != (m, self.p):
            raise ValueError(f"values must have shape ({m}, {self.p})")

    @property
    def num_slots(self):
        return self.rows.size

    @cached_property
    def keys(self):
        return self.rows * self.n + self.cols

    @cached_property
    def transpose_permutation(self):
        perm = np.searchsorted(self.keys, self.cols * self.n + self.rows)
        return perm

    def index_of(self, i, j):
        key = i * self.n + j
        pos = np.searchsorted(self.keys, key)
        if pos < self.num_slots and self.keys[pos] == key:
            return int(pos)
        return -1

    def with_values(self, values, p=None):
        return EdgeFeatureTensor(self.n, self.p if p is None else p,
                                 self.rows, self.cols, values)

    def plain_values(self):
        v = self.values
        return v.value if isinstance(v, Var) else v

    def transpose(self):
        """Swap the two sample modes: slot (i, j) takes the old (j, i) vector."""
        return self.with_values(self.plain_values()[self.transpose_permutation])

    def to_dense(self):
        dense = np.zeros((self.n, self.n, self.p))
        dense[self.rows, self.cols] = self.plain_values()
        return dense

    @classmethod
    def from_support_of(cls, adjacency, values):
        """Tensor on the support of ``adjacency`` (which must include the diagonal)."""
        values = np.asarray(values, dtype=np.float64)
        return cls(adjacency.n, values.shape[1], adjacency.rows, adjacency.cols,
                   values)


# ---------------------------------------------------------------------------
# dense oracle


def mode_k_product_dense(tensor, matrix, k):
    """Dense mode-k product of a 3-way tensor against a matrix.

    (X x_k A)[..., j, ...] = sum_i X[..., i, ...] A[j, i], contracting the
    k-th index (k in {1, 2, 3}). This is the reference for every sparse
    product in this module.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    matrix = np.asarray(matrix, dtype=np.float64)
    if tensor.ndim != 3:
        raise ValueError("tensor must be 3-way")
    if matrix.ndim != 2 or matrix.shape[1] != tensor.shape[k - 1]:
        raise ValueError("matrix columns must match tensor dimension k")
    if k == 1:
        return np.einsum("abc,ja->jbc", tensor, matrix)
    if k == 2:
        return np.einsum("abc,jb->ajc", tensor, matrix)
    if k == 3:
        return np.einsum("abc,jc->abj", tensor, matrix)
    raise ValueError("k must be 1, 2 or 3")


# ---------------------------------------------------------------------------
# contraction plans


@dataclass(frozen=True)
class ContractionPlan:
    """Triples (output slot, adjacency entry, input slot) of a masked product."""

    out_idx: np.ndarray
    adj_idx: np.ndarray
    slot_idx: np.ndarray
    num_out: int
    num_in: int
    num_adj: int


def _build_plan(mode, tensor, adjacency):
    """Enumerate surviving contraction triples for mode 1 or 2.

    Mode 1: out(h, j) = sum_i a(h, i) * s(i, j); a triple survives when
    (h, i) is a stored adjacency entry and (i, j) a stored slot. Mode 2
    contracts over the column index instead.
    """
    n = tensor.n
    keys = tensor.keys
    if mode == 1:
        anchor = tensor.rows      # h: adjacency row iterated per out slot
        fixed = tensor.cols       # j stays
    else:
        anchor = tensor.cols      # h in out(i, h)
        fixed = tensor.rows       # i stays
    indptr = adjacency.indptr
    deg = indptr[anchor + 1] - indptr[anchor]
    total = int(deg.sum())
    out_idx = np.repeat(np.arange(tensor.num_slots), deg)
    # Ragged ranges: adjacency entry indices for each out slot's anchor row.
    offsets = np.zeros(tensor.num_slots, dtype=np.intp)
    np.cumsum(deg[:-1], out=offsets[1:])
    adj_idx = np.arange(total) - np.repeat(offsets, deg) + np.repeat(indptr[anchor], deg)
    neighbor = adjacency.cols[adj_idx]
    if mode == 1:
        cand = neighbor * n + np.repeat(fixed, deg)
    else:
        cand = np.repeat(fixed, deg) * n + neighbor
    pos = np.searchsorted(keys, cand)
    pos[pos >= keys.size] = 0
    hit = keys[pos] == cand
    return ContractionPlan(out_idx[hit], adj_idx[hit], pos[hit],
                           tensor.num_slots, tensor.num_slots, adjacency.nnz)


def contraction_plan(mode, tensor, adjacency):
    """Cached plan lookup; plans are built once per (adjacency, support) pair."""
    cache = adjacency.__dict__.setdefault("_plans", {})
    key = (mode, id(tensor.rows), tensor.num_slots)
    hit = cache.get(key)
    if hit is not None and hit[0] is tensor.rows:
        return hit[1]
    plan = _build_plan(mode, tensor, adjacency)
    cache[key] = (tensor.rows, plan)
    return plan


def _segment_rows(values, seg_ids, num):
    """Row-wise bincount accumulation; deterministic (array order)."""
    if values.ndim == 1:
        return np.bincount(seg_ids, weights=values, minlength=num)
    out = np.empty((num, values.shape[1]))
    for k in range(values.shape[1]):
        out[:, k] = np.bincount(seg_ids, weights=values[:, k], minlength=num)
    return out


def plan_apply(plan, a_vals, s_vals):
    """Forward masked product: out[t] = sum over plan triples of a * s."""
    prod = a_vals[plan.adj_idx][:, None] * s_vals[plan.slot_idx]
    return _segment_rows(prod, plan.out_idx, plan.num_out)


def propagate_values(plan, a_vals, s_vals):
    """Differentiable masked mode product on raw value blocks.

    Adjoints reuse the same plan: the gradient w.r.t. the tensor is the
    product with transposed matrix roles, restricted to the same support.
    """
    a_vals = ad.as_var(a_vals)
    s_vals = ad.as_var(s_vals)
    out = plan_apply(plan, a_vals.value, s_vals.value)

    def vjp_a(g):
        rowdot = np.einsum("lp,lp->l", g[plan.out_idx],
                           s_vals.value[plan.slot_idx])
        return np.bincount(plan.adj_idx, weights=rowdot, minlength=plan.num_adj)

    def vjp_s(g):
        contrib = a_vals.value[plan.adj_idx][:, None] * g[plan.out_idx]
        return _segment_rows(contrib, plan.slot_idx, plan.num_in)

    return Var(out, (a_vals, s_vals), (vjp_a, vjp_s))


# ---------------------------------------------------------------------------
# public sparse operations


def _check_compatible(s, a):
    if s.n != a.n:
        raise ValueError("tensor and adjacency node counts differ")
    pos = np.searchsorted(s.keys, a.keys)
    pos[pos >= s.keys.size] = 0
    if not np.all(s.keys[np.minimum(pos, s.num_slots - 1)] == a.keys):
        raise ValueError("adjacency support must be contained in tensor support")


def _propagate(s, a, mode, a_values=None):
    _check_compatible(s, a)
    plan = contraction_plan(mode, s, a)
    a_vals = a.weights if a_values is None else a_values
    if isinstance(a_vals, Var) or isinstance(s.values, Var):
        out = propagate_values(plan, a_vals, ad.as_var(s.values))
    else:
        out = plan_apply(plan, a_vals, s.values)
    return s.with_values(out)


def propagate_mode1(s, a, a_values=None):
    """Masked mode-1 product: slot (h, j) gets sum_i a[h, i] * s[(i, j)].

    ``a_values`` optionally overrides the adjacency's stored weights (used
    for traced attention values on a fixed pattern).
    """
    return _propagate(s, a, 1, a_values)


def propagate_mode2(s, a, a_values=None):
    """Masked mode-2 product: slot (i, h) gets sum_j a[h, j] * s[(i, j)]."""
    return _propagate(s, a, 2, a_values)


def project_mode3(s, w):
    """Per-slot feature projection: each slot vector v becomes w^T v."""
    w_plain = w.value if isinstance(w, Var) else np.asarray(w, dtype=np.float64)
    if w_plain.shape[0] != s.p:
        raise ValueError("projection rows must match tensor feature dimension")
    if isinstance(s.values, Var) or isinstance(w, Var):
        out = ad.matmul(ad.as_var(s.values), ad.as_var(w))
    else:
        out = s.values @ w_plain
    return s.with_values(out, p=w_plain.shape[1])


def axpy(s1, s2, epsilon):
    """Slotwise s1 + epsilon * s2 on identical supports."""
    if s1.p != s2.p or not np.array_equal(s1.keys, s2.keys):
        raise ValueError("axpy requires identical supports and feature dims")
    if isinstance(s1.values, Var) or isinstance(s2.values, Var):
        out = ad.add(ad.as_var(s1.values), ad.scale(ad.as_var(s2.values), epsilon))
    else:
        out = s1.values + epsilon * s2.values
    return s1.with_values(out)


def collapse_to_weighted_graph(s):
    """Map a p=1 tensor to a sparse matrix with the slot scalars as weights."""
    if s.p != 1:
        raise ValueError("collapse requires feature dimension 1")
    vals = s.plain_values()[:, 0]
    sym = np.array_equal(vals, vals[s.transpose_permutation])
    return SparseAdjacency(s.n, s.rows, s.cols, vals, symmetric=bool(sym))


# ---------------------------------------------------------------------------
# snapshot text format


def save_snapshot(s, path):
    """Write ``n p |support|`` then one ``i j v1 ... vp`` line per slot."""
    vals = s.plain_values()
    with open(path, "w") as fh:
        fh.write(f"{s.n} {s.p} {s.num_slots}\n")
        for i, j, row in zip(s.rows, s.cols, vals):
            fh.write(f"{i} {j} " + " ".join(repr(float(v)) for v in row) + "\n")


def load_snapshot(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError("snapshot header must be 'n p num_slots'")
        n, p, m = map(int, header)
        rows = np.empty(m, dtype=np.intp)
        cols = np.empty(m, dtype=np.intp)
        values = np.empty((m, p))
        for t in range(m):
            parts = fh.readline().split()
            if len(parts) != 2 + p:
                raise ValueError(f"snapshot slot line {t + 2} malformed")
            rows[t], cols[t] = int(parts[0]), int(parts[1])
            values[t] = [float(x) for x in parts[2:]]
    return EdgeFeatureTensor(n, p, rows, cols, values)
