"""Builders for the initial edge-feature tensor.

Three recipes: concatenate reduced node-feature pairs, subtract them, or
stack the adjacency matrices of a multi-graph. The concat/subtract
builders run a trainable graph-convolution reducer first, so gradients
flow into its weights end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .edge_tensor import EdgeFeatureTensor
from .layers import gc_forward
from .sparse_graph import SparseAdjacency

RECIPE_KINDS = ("concat", "subtract", "stack")


@dataclass(frozen=True)
class EdgeFeatureRecipe:
    """How to derive initial edge features.

    ``reduce_dim`` is the node-feature dimension after the reducer layer,
    applied before pairing (concat yields p = 2 * reduce_dim, subtract
    yields p = reduce_dim).
    """

    kind: str = "concat"
    reduce_dim: int = 8

    def __post_init__(self):
        if self.kind not in RECIPE_KINDS:
            raise ValueError(f"unknown recipe kind {self.kind!r}")
        if self.reduce_dim < 1:
            raise ValueError("reduce_dim must be >= 1")


def _paired(h, a_tilde, reducer, combine):
    reduced = gc_forward(h, a_tilde, reducer)
    traced = isinstance(reduced, Var)
    rv = ad.as_var(reduced)
    left = ad.gather_rows(rv, a_tilde.rows)
    right = ad.gather_rows(rv, a_tilde.cols)
    values = combine(left, right)
    p = values.value.shape[1]
    return EdgeFeatureTensor(a_tilde.n, p, a_tilde.rows, a_tilde.cols,
                             values if traced else values.value)


def build_concat_features(h, a_tilde, reducer):
    """Slot (i, j) holds [reduced_i || reduced_j] on support(a_tilde)."""
    return _paired(h, a_tilde, reducer, ad.concat_cols)


def build_subtract_features(h, a_tilde, reducer):
    """Slot (i, j) holds reduced_i - reduced_j; diagonal slots are zero."""
    return _paired(h, a_tilde, reducer, ad.sub)


def union_support(graphs):
    """Union of all edge supports plus the diagonal, as sorted (rows, cols)."""
    n = graphs[0].n
    keys = [g.rows * n + g.cols for g in graphs]
    keys.append(np.arange(n) * n + np.arange(n))
    ukeys = np.unique(np.concatenate(keys))
    return ukeys // n, ukeys % n


def union_graph(graphs):
    """Binary graph with an edge wherever any input graph has one."""
    n = graphs[0].n
    rows, cols = union_support(graphs)
    off = rows != cols
    return SparseAdjacency(n, rows[off], cols[off],
                           np.ones(int(off.sum())), symmetric=True)


def build_stacked_graph_features(graphs, reference=None):
    """Channel v of slot (i, j) is the weight of edge (i, j) in graph v.

    ``reference`` optionally fixes the support as (rows, cols) arrays;
    by default the union of all supports plus the diagonal is used.
    """
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("all graphs must share the node count")
    rows, cols = union_support(graphs) if reference is None else reference
    keys = rows * n + cols
    values = np.zeros((keys.size, len(graphs)))
    for v, g in enumerate(graphs):
        pos = np.searchsorted(keys, g.keys)
        values[pos, v] = g.weights
    return EdgeFeatureTensor(n, len(graphs), rows, cols, values)
