"""End-to-end model: edge-tensor convolution stack feeding node convolutions.

The edge stack produces a scalar weight per stored edge slot; those weights
are symmetrized, clamped nonnegative, degree-renormalized and used as the
graph for the node-convolution stack. Everything is differentiable, so the
edge stack trains from the downstream task loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .edge_tensor import EdgeFeatureTensor
from .features import (EdgeFeatureRecipe, build_concat_features,
                       build_stacked_graph_features, build_subtract_features,
                       union_graph)
from .layers import (AttentionHead, EdgeConvLayer, EdgeWeights, GraphConvLayer,
                     attention_forward, blend_edge_weights, gc_forward,
                     tpgc_forward)
from .sparse_graph import renormalize, renormalize_weights

MODEL_KINDS = ("et_gcn", "et_gat", "gcn_only")
NEGATIVE_MODES = ("clamp", "abs")


@dataclass(frozen=True)
class EdgeTensorGnn:
    """Layer stack configuration plus its trainable parameters."""

    kind: str
    recipe: EdgeFeatureRecipe
    reducer: GraphConvLayer
    edge_layers: list
    gc_layers: list
    attention_head: AttentionHead = None
    negative_mode: str = "clamp"
    blend_attention: bool = False

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.negative_mode not in NEGATIVE_MODES:
            raise ValueError(f"unknown negative mode {self.negative_mode!r}")
        if self.kind == "et_gat" and self.attention_head is None:
            raise ValueError("et_gat requires an attention head")


@dataclass(frozen=True)
class GraphContext:
    """Precomputed per-graph state shared by every forward pass."""

    features: np.ndarray
    labels: np.ndarray
    a_tilde: object  # renormalized adjacency (SparseAdjacency)
    stacked: EdgeFeatureTensor = None  # fixed edge tensor for stack recipes


def prepare(graph):
    """Context for a single-graph task."""
    return GraphContext(graph.node_features, graph.labels,
                        renormalize(graph.adjacency))


def prepare_multigraph(graphs, features, labels):
    """Context for multi-graph tasks: stacked edge tensor over the union graph.

    The companion adjacency used for propagation is the renormalized binary
    union of all views.
    """
    a_tilde = renormalize(union_graph(graphs))
    stacked = build_stacked_graph_features(
        graphs, reference=(a_tilde.rows, a_tilde.cols))
    return GraphContext(np.asarray(features, dtype=np.float64),
                        np.asarray(labels, dtype=np.intp), a_tilde, stacked)


def build_model(tape, kind, d_in, out_dim, *, recipe_kind="concat",
                reduce_dim=8, edge_hidden=(8, 1), gc_hidden=(32,),
                epsilon=0.2, negative_mode="clamp", blend_attention=False,
                final_activation="softmax", stacked_channels=None, seed=0,
                hidden_activation="relu"):
    """Register all parameters on ``tape`` and return the model.

    ``edge_hidden`` lists edge-layer output dims and must end in 1;
    ``gc_hidden`` lists node-layer hidden dims (the output layer of size
    ``out_dim`` is appended). For the ``stack`` recipe ``stacked_channels``
    gives the number of stacked graphs.
    """
    if edge_hidden and edge_hidden[-1] != 1:
        raise ValueError("last edge layer must have output dimension 1")
    rng = np.random.default_rng(seed)

    def child_seed():
        return int(rng.integers(2 ** 32))

    recipe = EdgeFeatureRecipe(recipe_kind, reduce_dim)
    reducer = GraphConvLayer(tape.create("reducer", (d_in, reduce_dim), child_seed()),
                             activation=hidden_activation)

    if recipe_kind == "concat":
        p = 2 * reduce_dim
    elif recipe_kind == "subtract":
        p = reduce_dim
    else:
        if stacked_channels is None:
            raise ValueError("stack recipe needs stacked_channels")
        p = stacked_channels

    edge_layers = []
    if kind != "gcn_only":
        dims = [p, *edge_hidden]
        for k in range(len(edge_hidden)):
            act = hidden_activation if k < len(edge_hidden) - 1 else "identity"
            w = tape.create(f"edge_{k}", (dims[k], dims[k + 1]), child_seed())
            if k == len(edge_hidden) - 1:
                # downstream clamp zeroes negative edge weights; a nonnegative
                # projection over the relu hidden keeps the initial graph alive
                np.abs(w.value, out=w.value)
            edge_layers.append(EdgeConvLayer(w, epsilon=epsilon, activation=act))

    gc_layers = []
    dims = [d_in, *gc_hidden, out_dim]
    for k in range(len(dims) - 1):
        act = hidden_activation if k < len(dims) - 2 else final_activation
        w = tape.create(f"gc_{k}", (dims[k], dims[k + 1]), child_seed())
        gc_layers.append(GraphConvLayer(w, activation=act))

    head = None
    if kind == "et_gat" or blend_attention:
        head = AttentionHead(tape.create("theta", (2 * d_in,), child_seed()))

    return EdgeTensorGnn(kind, recipe, reducer, edge_layers, gc_layers,
                         attention_head=head, negative_mode=negative_mode,
                         blend_attention=blend_attention)


@dataclass
class ForwardResult:
    """Predictions plus the learned edge weights for diagnostics."""

    z: object                     # (n, out_dim) Var or ndarray
    edge_pattern: object = None   # SparseAdjacency holding the slot layout
    edge_weights: object = None   # clamped symmetric slot weights (pre-renorm)
    propagation: object = None    # adjacency actually used for edge layers


def _build_initial_tensor(model, ctx, h):
    kind = model.recipe.kind
    if kind == "stack":
        if ctx.stacked is None:
            raise ValueError("context has no stacked edge tensor")
        return ctx.stacked
    builder = build_concat_features if kind == "concat" else build_subtract_features
    return builder(h, ctx.a_tilde, model.reducer)


def _propagation_weights(model, ctx, h):
    if model.kind == "et_gat":
        alpha = attention_forward(h, ctx.a_tilde, model.attention_head)
        if model.blend_attention:
            return blend_edge_weights(ctx.a_tilde, alpha)
        return alpha
    if model.blend_attention:
        alpha = attention_forward(h, ctx.a_tilde, model.attention_head)
        return blend_edge_weights(ctx.a_tilde, alpha)
    return ctx.a_tilde


def learned_graph_weights(model, ctx, h=None):
    """Clamped symmetric edge weights produced by the edge stack."""
    return etgnn_forward(model, ctx, h).edge_weights


def etgnn_forward(model, ctx, h=None):
    """Full forward pass; ``h`` defaults to the context's node features.

    Traced whenever the model parameters are Vars (they are, once built on
    a tape), so the result's ``z`` supports backpropagation.
    """
    h = ctx.features if h is None else h
    pattern = ctx.a_tilde
    if model.kind == "gcn_only":
        out = h
        for layer in model.gc_layers:
            out = gc_forward(out, pattern, layer)
        return ForwardResult(out)

    s = _build_initial_tensor(model, ctx, h)
    prop = _propagation_weights(model, ctx, h)
    for layer in model.edge_layers:
        s = tpgc_forward(s, prop, layer)
    if s.p != 1:
        raise ValueError("edge stack must end with feature dimension 1")

    raw = ad.reshape(ad.as_var(s.values), (-1,))
    sym = ad.scale(ad.add(raw, ad.gather_rows(raw, pattern.transpose_permutation)), 0.5)
    clamped = ad.relu(sym) if model.negative_mode == "clamp" else ad.absolute(sym)
    norm = renormalize_weights(pattern.rows, pattern.cols, pattern.n, clamped)
    learned = EdgeWeights(pattern, norm)

    out = h
    for layer in model.gc_layers:
        out = gc_forward(out, learned, layer)
    return ForwardResult(out, pattern, clamped, prop)


def link_scores(z, pairs):
    """Inner-product decoder: sigmoid(z_i . z_j) for each requested pair."""
    pairs = np.asarray(pairs, dtype=np.intp).reshape(-1, 2)
    zv = ad.as_var(z)
    if pairs.size and pairs.max() >= zv.value.shape[0]:
        raise ValueError("evaluation pair references unknown node")
    left = ad.gather_rows(zv, pairs[:, 0])
    right = ad.gather_rows(zv, pairs[:, 1])
    scores = ad.sigmoid(ad.sum_cols(ad.mul(left, right)))
    return scores if isinstance(z, Var) else scores.value


def link_prediction_forward(model, ctx, pairs, h=None):
    """Node embeddings through the model, decoded on the requested pairs."""
    result = etgnn_forward(model, ctx, h)
    return link_scores(result.z, pairs), result


def check_learned_graph(result, tol=1e-12):
    """Assert the learned graph is symmetric, nonnegative and on-support."""
    w = result.edge_weights
    w = w.value if isinstance(w, Var) else np.asarray(w)
    pattern = result.edge_pattern
    if np.any(w < 0):
        raise AssertionError("learned graph has negative weights")
    if np.max(np.abs(w - w[pattern.transpose_permutation])) > tol:
        raise AssertionError("learned graph is not symmetric")
    return True
