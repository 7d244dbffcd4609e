"""Shared fixtures and independent reference implementations.

The oracles here are deliberately written as explicit loops over dense
arrays, independent of the library's vectorized kernels, so that agreement
between the two is meaningful evidence.
"""

import numpy as np
import pytest

from edgetensor.edge_tensor import EdgeFeatureTensor
from edgetensor.sparse_graph import SparseAdjacency


def random_support(n, rng, density=0.3):
    """Random symmetric edge set plus full diagonal, as sorted slot arrays."""
    mask = rng.random((n, n)) < density
    mask = np.triu(mask, 1)
    mask = mask | mask.T
    np.fill_diagonal(mask, True)
    rows, cols = np.nonzero(mask)
    return rows.astype(np.intp), cols.astype(np.intp)


def random_adjacency(n, rng, density=0.3):
    rows, cols = random_support(n, rng, density)
    upper = rows <= cols
    w = np.zeros(rows.size)
    for k in np.flatnonzero(upper):
        w[k] = rng.random() + 0.1
    # mirror so the matrix is exactly symmetric
    dense = np.zeros((n, n))
    dense[rows, cols] = w
    dense = np.maximum(dense, dense.T)
    return SparseAdjacency(n, rows, cols, dense[rows, cols])


def random_edge_tensor(n, p, rng, density=0.3):
    rows, cols = random_support(n, rng, density)
    return EdgeFeatureTensor(n, p, rows, cols,
                             rng.standard_normal((rows.size, p)))


def tensor_to_dense(t):
    values = t.values.value if hasattr(t.values, "value") else t.values
    dense = np.zeros((t.n, t.n, t.p))
    dense[t.rows, t.cols] = values
    return dense


def support_mask(t):
    mask = np.zeros((t.n, t.n), dtype=bool)
    mask[t.rows, t.cols] = True
    return mask


def dense_mode1_oracle(s_dense, a_dense):
    """S ×₁ A by explicit loops: out[h,j,q] = Σ_i a[h,i]·s[i,j,q]."""
    n, _, p = s_dense.shape
    out = np.zeros_like(s_dense)
    for h in range(n):
        for j in range(n):
            for q in range(p):
                acc = 0.0
                for i in range(n):
                    acc += a_dense[h, i] * s_dense[i, j, q]
                out[h, j, q] = acc
    return out


def dense_mode2_oracle(s_dense, a_dense):
    """S ×₂ A by explicit loops: out[i,h,q] = Σ_j a[h,j]·s[i,j,q]."""
    n, _, p = s_dense.shape
    out = np.zeros_like(s_dense)
    for i in range(n):
        for h in range(n):
            for q in range(p):
                acc = 0.0
                for j in range(n):
                    acc += a_dense[h, j] * s_dense[i, j, q]
                out[i, h, q] = acc
    return out


def dense_mode3_oracle(s_dense, w):
    """S ×₃ Wᵀ by explicit loops: out[i,j,r] = Σ_q s[i,j,q]·w[q,r]."""
    n, _, p = s_dense.shape
    p_out = w.shape[1]
    out = np.zeros((n, n, p_out))
    for i in range(n):
        for j in range(n):
            for r in range(p_out):
                acc = 0.0
                for q in range(p):
                    acc += s_dense[i, j, q] * w[q, r]
                out[i, j, r] = acc
    return out


def renormalize_oracle(a_dense):
    """D̄^{-1/2}(A+I)D̄^{-1/2} by plain dense matrix arithmetic."""
    a_bar = a_dense + np.eye(a_dense.shape[0])
    d = a_bar.sum(axis=1)
    d_inv_sqrt = np.diag(1.0 / np.sqrt(d))
    return d_inv_sqrt @ a_bar @ d_inv_sqrt


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
