"""Losses and the early-stopping training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Var, backward

PROB_FLOOR = 1e-12


class DivergenceError(RuntimeError):
    """Training loss became non-finite; carries the last good snapshot."""

    def __init__(self, message, snapshot, history):
        super().__init__(message)
        self.snapshot = snapshot
        self.history = history


@dataclass
class LossReport:
    """A loss value plus, where applicable, classification counts.

    ``loss_var`` carries the traced node for backpropagation when the
    inputs were traced.
    """

    loss: float
    correct: int = None
    total: int = None
    loss_var: Var = field(default=None, repr=False)


def cross_entropy_masked(predictions, labels, mask):
    """Mean negative log-probability of the true class over masked nodes.

    ``predictions`` rows must already be probability vectors (softmaxed).
    """
    mask = np.asarray(mask, dtype=np.intp)
    if mask.size == 0:
        raise ValueError("empty mask")
    labels = np.asarray(labels, dtype=np.intp)
    traced = isinstance(predictions, Var)
    pred_var = ad.as_var(predictions)
    picked = ad.take_elems(pred_var, mask, labels[mask])
    loss = ad.neg(ad.mean(ad.log(ad.floor_at(picked, PROB_FLOOR))))
    plain = pred_var.value
    correct = int(np.sum(plain[mask].argmax(axis=1) == labels[mask]))
    return LossReport(float(loss.value), correct, int(mask.size),
                      loss_var=loss if traced else None)


def bce_link_loss(reconstructed, target_adjacency, pos_pairs, neg_pairs):
    """Binary cross-entropy over sampled positive and negative node pairs.

    ``reconstructed`` holds sigmoid link scores; entries are clamped at
    PROB_FLOOR on both sides before the log. ``target_adjacency`` is only
    used to sanity-check that the positive pairs are actual edges.
    """
    pos_pairs = np.asarray(pos_pairs, dtype=np.intp).reshape(-1, 2)
    neg_pairs = np.asarray(neg_pairs, dtype=np.intp).reshape(-1, 2)
    if pos_pairs.size == 0 or neg_pairs.size == 0:
        raise ValueError("empty sample set")
    if target_adjacency is not None:
        for i, j in pos_pairs:
            if target_adjacency.index_of(int(i), int(j)) < 0:
                raise ValueError(f"positive pair ({i}, {j}) is not an edge")
    traced = isinstance(reconstructed, Var)
    rec = ad.as_var(reconstructed)
    pos = ad.take_elems(rec, pos_pairs[:, 0], pos_pairs[:, 1])
    neg = ad.take_elems(rec, neg_pairs[:, 0], neg_pairs[:, 1])
    loss = bce_from_scores(pos, neg)
    return LossReport(float(loss.value), loss_var=loss if traced else None)


def bce_from_scores(pos_scores, neg_scores):
    """BCE on 1-d score Vars: positives toward 1, negatives toward 0."""
    pos = ad.as_var(pos_scores)
    neg = ad.as_var(neg_scores)
    total = pos.value.size + neg.value.size
    log_pos = ad.total(ad.log(ad.floor_at(pos, PROB_FLOOR)))
    log_neg = ad.total(ad.log(ad.floor_at(
        ad.add_const(ad.neg(neg), 1.0), PROB_FLOOR)))
    return ad.scale(ad.add(log_pos, log_neg), -1.0 / total)


@dataclass
class TaskConfig:
    """Hyperparameters of one training run."""

    learning_rate: float = 0.01
    max_epochs: int = 10000
    patience: int = 100
    epsilon: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_metric: float
    extra: dict = field(default_factory=dict)


@dataclass
class TrainResult:
    best_params: dict
    best_epoch: int
    best_val_loss: float
    history: list
    stopped_early: bool


def train_loop(tape, step, config):
    """Run Adam with early stopping on validation loss.

    ``step(epoch)`` performs a traced forward pass with the tape's current
    parameters and returns ``(train_loss_var, val_loss, val_metric, extra)``.
    The parameters with the lowest validation loss are returned. Stops when
    the validation loss has not improved for ``patience`` consecutive
    epochs (``patience == 0`` stops at the first non-improving epoch).
    """
    best_snapshot = tape.snapshot()
    best_val = np.inf
    best_epoch = -1
    bad_epochs = 0
    history = []
    stall_limit = max(config.patience, 1)
    stopped_early = False
    for epoch in range(config.max_epochs):
        tape.zero_grad()
        loss_var, val_loss, val_metric, extra = step(epoch)
        train_loss = float(loss_var.value)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise DivergenceError(
                f"non-finite loss at epoch {epoch}", best_snapshot, history)
        history.append(EpochRecord(epoch, train_loss, float(val_loss),
                                   float(val_metric), extra))
        if val_loss < best_val:
            best_val = float(val_loss)
            best_epoch = epoch
            best_snapshot = tape.snapshot()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= stall_limit:
                stopped_early = True
                break
        backward(loss_var)
        tape.adam_step(config.learning_rate)
    tape.restore(best_snapshot)
    return TrainResult(best_snapshot, best_epoch, best_val, history, stopped_early)
