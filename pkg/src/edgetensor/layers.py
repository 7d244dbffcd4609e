"""Forward definitions: graph convolution, edge-tensor convolution, and
neighborhood attention.

Every forward works in two flavors. With plain numpy inputs it returns
plain outputs; when any weight or value is an autodiff :class:`Var`, the
computation is traced and gradients flow through :func:`autodiff.backward`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .edge_tensor import (axpy, project_mode3, propagate_mode1,
                          propagate_mode2)
from .sparse_graph import SparseAdjacency

GC_ACTIVATIONS = ("relu", "softmax", "identity")
EDGE_ACTIVATIONS = ("relu", "identity")


@dataclass(frozen=True)
class GraphConvLayer:
    """Node convolution H' = act(A_hat H W) on a (possibly learned) graph."""

    weight: object  # (d, d') array or Var
    activation: str = "relu"

    def __post_init__(self):
        name = "softmax" if self.activation == "softmax-rows" else self.activation
        object.__setattr__(self, "activation", name)
        if self.activation not in GC_ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class EdgeConvLayer:
    """Edge-tensor convolution with a self-representation residual.

    S' = act((S x1 A x2 A + epsilon * S) x3 W) where A is either the
    renormalized adjacency or learned attention weights.
    """

    weight: object  # (p, p') array or Var
    epsilon: float = 0.2
    activation: str = "relu"

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.activation not in EDGE_ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class AttentionHead:
    """Single-layer feedforward scorer on concatenated node-feature pairs."""

    theta: object  # (2d,) array or Var
    leaky_slope: float = 0.2


@dataclass(frozen=True)
class EdgeWeights:
    """Traced entry values living on a fixed adjacency pattern."""

    pattern: SparseAdjacency
    values: Var


def _unpack(a):
    """(pattern, values) for either a SparseAdjacency or EdgeWeights."""
    if isinstance(a, EdgeWeights):
        return a.pattern, a.values
    return a, a.weights


def _is_traced(*xs):
    return any(isinstance(x, Var) for x in xs)


def _activate(values, name):
    if name == "identity":
        return values
    if isinstance(values, Var):
        return ad.relu(values) if name == "relu" else ad.row_softmax(values)
    if name == "relu":
        return np.maximum(values, 0.0)
    shifted = values - values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def sparse_matmul(a, h):
    """A_hat @ H for a sparse matrix (pattern + values) and dense H."""
    pattern, vals = _unpack(a)
    h = ad.as_var(h)
    msg = ad.mul(ad.reshape(ad.as_var(vals), (-1, 1)),
                 ad.gather_rows(h, pattern.cols))
    return ad.segment_sum(msg, pattern.rows, pattern.n)


def gc_forward(h, a, layer):
    """act(A_hat H W). Softmax activation yields row-stochastic output."""
    pattern, vals = _unpack(a)
    n_rows = h.value.shape[0] if isinstance(h, Var) else np.asarray(h).shape[0]
    if n_rows != pattern.n:
        raise ValueError("feature row count must equal node count")
    traced = _is_traced(h, vals, layer.weight)
    z = ad.matmul(sparse_matmul(a, h), ad.as_var(layer.weight))
    out = _activate(z, layer.activation)
    return out if traced else out.value


def tpgc_forward(s, a, layer):
    """act((S x1 A x2 A + epsilon S) x3 W), masked to s's support."""
    pattern, vals = _unpack(a)
    a_values = vals if isinstance(a, EdgeWeights) else None
    propagated = propagate_mode2(propagate_mode1(s, pattern, a_values),
                                 pattern, a_values)
    mixed = axpy(propagated, s, layer.epsilon)
    projected = project_mode3(mixed, layer.weight)
    return projected.with_values(_activate(projected.values, layer.activation))


def tpgat_forward(s, alpha, layer):
    """tpgc_forward with learned attention weights in place of the adjacency."""
    return tpgc_forward(s, alpha, layer)


def attention_forward(h, a, head):
    """Per-edge attention, row-normalized over each node's stored neighbors.

    ``a`` supplies the pattern and must contain every self-loop slot
    (pass the renormalized adjacency). Scores are
    leaky_relu(theta . [H_i || H_j]) softmaxed within each row i. Returns a
    SparseAdjacency for plain inputs, EdgeWeights when traced.
    """
    pattern, _ = _unpack(a)
    if not np.all(np.isin(np.arange(pattern.n) * (pattern.n + 1), pattern.keys)):
        raise ValueError("attention pattern must contain every self-loop")
    traced = _is_traced(h, head.theta)
    h = ad.as_var(h)
    theta = ad.as_var(head.theta)
    if theta.value.shape != (2 * h.value.shape[1],):
        raise ValueError("theta length must be twice the feature dimension")
    pair = ad.concat_cols(ad.gather_rows(h, pattern.rows),
                          ad.gather_rows(h, pattern.cols))
    scores = ad.reshape(ad.matmul(pair, ad.reshape(theta, (-1, 1))), (-1,))
    scores = ad.leaky_relu(scores, head.leaky_slope)
    alpha = ad.segment_softmax(scores, pattern.rows, pattern.n)
    if traced:
        return EdgeWeights(pattern, alpha)
    return pattern.with_weights(alpha.value, symmetric=False)


def blend_edge_weights(a_tilde, alpha):
    """Entrywise average (A_tilde + alpha) / 2 on identical supports."""
    pat_a, vals_a = _unpack(a_tilde)
    pat_b, vals_b = _unpack(alpha)
    if not np.array_equal(pat_a.keys, pat_b.keys):
        raise ValueError("blend requires identical supports")
    if _is_traced(vals_a, vals_b):
        mixed = ad.scale(ad.add(ad.as_var(vals_a), ad.as_var(vals_b)), 0.5)
        return EdgeWeights(pat_a, mixed)
    return pat_a.with_weights(0.5 * (vals_a + vals_b),
                              symmetric=pat_a.symmetric and pat_b.symmetric)
