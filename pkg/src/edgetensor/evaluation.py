"""Evaluation metrics and data splitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Var
from .layers import EdgeWeights
from .sparse_graph import SparseAdjacency


@dataclass(frozen=True)
class MetricReport:
    accuracy: float = None
    auc: float = None
    ap: float = None
    homophily: float = None

    def __post_init__(self):
        for name in ("accuracy", "auc", "ap", "homophily"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def accuracy(predictions, labels, idx):
    """Fraction of nodes in ``idx`` whose argmax prediction is correct."""
    predictions = predictions.value if isinstance(predictions, Var) else predictions
    idx = np.asarray(idx, dtype=np.intp)
    labels = np.asarray(labels, dtype=np.intp)
    return float(np.mean(predictions[idx].argmax(axis=1) == labels[idx]))


def _midranks(x):
    """Ranks starting at 1; ties get the average of their rank range."""
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    high = np.cumsum(counts)
    mid = (high + high - counts + 1) / 2.0
    return mid[inverse]


def auc_ap(scores, labels):
    """Area under ROC (midrank statistic) and average precision.

    AP uses step interpolation at each positive: the mean, over positives,
    of the precision at that positive's rank when scores are sorted
    descending (stable tie order).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    num_pos = int((labels == 1).sum())
    num_neg = int((labels == 0).sum())
    if num_pos == 0 or num_neg == 0:
        raise ValueError("both classes must be present")

    ranks = _midranks(scores)
    auc = (ranks[labels == 1].sum() - num_pos * (num_pos + 1) / 2.0) \
        / (num_pos * num_neg)

    order = np.argsort(-scores, kind="stable")
    hits = labels[order] == 1
    cum_hits = np.cumsum(hits)
    precision = cum_hits / np.arange(1, scores.size + 1)
    ap = precision[hits].mean()
    return MetricReport(auc=float(auc), ap=float(ap))


def homophily(adjacency, labels, weighted=False):
    """Share of stored off-diagonal pairs joining same-label nodes.

    Only pairs with both endpoints labeled count. The weighted variant
    uses the ratio of same-label weight mass instead of pair counts.
    """
    if isinstance(adjacency, EdgeWeights):
        pattern = adjacency.pattern
        weights = adjacency.values
        weights = weights.value if isinstance(weights, Var) else weights
    else:
        pattern, weights = adjacency, adjacency.weights
    labels = np.asarray(labels, dtype=np.intp)
    li, lj = labels[pattern.rows], labels[pattern.cols]
    qualify = (pattern.rows != pattern.cols) & (li >= 0) & (lj >= 0)
    if not np.any(qualify):
        raise ValueError("no off-diagonal edges between labeled nodes")
    same = (li == lj)[qualify]
    if not weighted:
        return float(same.mean())
    mass = np.abs(weights[qualify])
    total = mass.sum()
    if total <= 0:
        raise ValueError("no weight mass on qualifying edges")
    return float(mass[same].sum() / total)


def split_nodes(labels, train, val_fraction, seed):
    """Seeded disjoint train/val/test index sets over the labeled nodes.

    ``train`` is either a per-class node count (int) or a fraction of all
    labeled nodes (float). Every class must receive at least one training
    node. ``val_fraction`` is taken from the remaining labeled nodes.
    """
    labels = np.asarray(labels, dtype=np.intp)
    labeled = np.flatnonzero(labels >= 0)
    rng = np.random.default_rng(seed)
    classes = np.unique(labels[labeled])

    if isinstance(train, (int, np.integer)):
        train_idx = []
        for c in classes:
            members = labeled[labels[labeled] == c]
            if members.size < train:
                raise ValueError(f"class {c} has fewer than {train} labeled nodes")
            train_idx.append(rng.permutation(members)[:train])
        train_idx = np.sort(np.concatenate(train_idx))
    else:
        k = int(round(float(train) * labeled.size))
        train_idx = np.sort(rng.permutation(labeled)[:k])
        covered = np.unique(labels[train_idx])
        if covered.size < classes.size:
            raise ValueError("training fraction leaves some class empty")

    remaining = np.setdiff1d(labeled, train_idx)
    k_val = int(round(float(val_fraction) * labeled.size))
    if k_val > remaining.size:
        raise ValueError("train and validation fractions overflow the node set")
    perm = rng.permutation(remaining)
    val_idx = np.sort(perm[:k_val])
    test_idx = np.sort(perm[k_val:])
    return {"train": train_idx, "val": val_idx, "test": test_idx}


@dataclass(frozen=True)
class LinkSplit:
    train: SparseAdjacency
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray


def link_split(adjacency, test_fraction=0.10, val_fraction=0.05, seed=0):
    """Hold out edge fractions for link prediction, with sampled negatives.

    Removes the stated fractions of undirected edges from the graph and
    pairs each held-out set with an equal count of uniformly sampled
    non-edges. Deterministic per seed.
    """
    upper = adjacency.rows < adjacency.cols
    edges = np.stack([adjacency.rows[upper], adjacency.cols[upper]], axis=1)
    weights = adjacency.weights[upper]
    num_edges = edges.shape[0]
    n_test = int(round(test_fraction * num_edges))
    n_val = int(round(val_fraction * num_edges))
    if n_test + n_val >= num_edges:
        raise ValueError("not enough edges to hold out the requested fractions")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(num_edges)
    test_pos = edges[perm[:n_test]]
    val_pos = edges[perm[n_test:n_test + n_val]]
    keep = perm[n_test + n_val:]
    train = SparseAdjacency.from_undirected_edges(
        adjacency.n, edges[keep], weights[keep])

    edge_keys = set((edges[:, 0] * adjacency.n + edges[:, 1]).tolist())
    return LinkSplit(train, val_pos,
                     sample_non_edges(adjacency.n, edge_keys, n_val, rng),
                     test_pos,
                     sample_non_edges(adjacency.n, edge_keys, n_test, rng))


def sample_non_edges(n, edge_keys, count, rng):
    """Uniformly sample ``count`` distinct (i < j) pairs outside ``edge_keys``."""
    available = n * (n - 1) // 2 - len(edge_keys)
    if count > available:
        raise ValueError(f"cannot sample {count} non-edges, "
                         f"only {available} exist")
    out = []
    seen = set()
    while len(out) < count:
        draw = rng.integers(n, size=(max(2 * (count - len(out)), 8), 2))
        for i, j in draw:
            if i == j or len(out) >= count:
                continue
            a, b = (int(i), int(j)) if i < j else (int(j), int(i))
            key = a * n + b
            if key in edge_keys or key in seen:
                continue
            seen.add(key)
            out.append((a, b))
    return np.array(out, dtype=np.intp).reshape(-1, 2)
