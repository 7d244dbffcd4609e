"""Synthetic stochastic block model graphs for desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .sparse_graph import LabeledGraph, SparseAdjacency

FEATURE_NOISE = 0.1  # one-hot block features get uniform noise in +-0.1


def sbm_generate(block_sizes, p_in, p_out, seed):
    """Sample an undirected stochastic block model graph.

    Labels are block ids. Node features are the one-hot block id plus
    uniform noise in [-0.1, 0.1], so desk-scale classification is
    nontrivial but learnable. Deterministic per seed.
    """
    block_sizes = [int(b) for b in block_sizes]
    if len(block_sizes) < 2:
        raise ValueError("need at least 2 blocks")
    if any(b <= 0 for b in block_sizes):
        raise ValueError("block sizes must be positive")
    for prob in (p_in, p_out):
        if not 0.0 <= prob <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")

    n = sum(block_sizes)
    labels = np.repeat(np.arange(len(block_sizes)), block_sizes)
    rng = np.random.default_rng(seed)

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    pairs = np.stack([iu[keep], ju[keep]], axis=1)

    features = np.zeros((n, len(block_sizes)))
    features[np.arange(n), labels] = 1.0
    features += rng.uniform(-FEATURE_NOISE, FEATURE_NOISE, features.shape)

    if pairs.size:
        adjacency = SparseAdjacency.from_undirected_edges(n, pairs)
    else:
        adjacency = SparseAdjacency.from_entries(n, [])
    return LabeledGraph(adjacency, features, labels)
