"""Pairwise learning-to-rank of a shared-weight scorer.

Both posts of a pair are scored by the same network f; the score difference
O = f(A) - f(B) is squashed by a logistic into the probability that A ranks
above B, and training minimizes the binary cross entropy against the pair
label. In closed form the per-pair loss is

    loss = -label * O + ln(1 + exp(O))

evaluated in an overflow-safe arrangement. Pairs are stored canonically
(id_a more popular, label 1); each epoch re-balances the two orientations by
swapping A/B with seeded probability 0.5 and using label 0 for the swapped
copies, which is exact because loss(O, label) = loss(-O, 1 - label).

After every epoch the learning rate is multiplied by a decay factor and
pairwise accuracy is measured on the validation split; the snapshot from the
best-validation epoch is the trained model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mlp
from .features import FeatureSet
from .mining import PDIP
from .mlp import AdamState, Gradients, MlpModel
from .util import seeded_rng

DEFAULT_HIDDEN_DIMS = [64, 32]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    l2_penalty: float = 1e-4
    batch_size: int = 64
    epochs: int = 30
    lr_decay_per_epoch: float = 0.95
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.lr_decay_per_epoch <= 1.0:
            raise ValueError("lr_decay_per_epoch must be in (0, 1]")


@dataclass
class TrainReport:
    """Per-epoch training curve and the best-validation model snapshot."""

    train_loss: list[float]
    val_accuracy: list[float]
    selected_epoch: int  # 0-based index of the epoch with max validation accuracy
    model: MlpModel


def pair_logit(model: MlpModel, x_a: np.ndarray, x_b: np.ndarray) -> float:
    """Score difference O = f(A) - f(B); exactly antisymmetric under swap."""
    return mlp.forward(model, x_a) - mlp.forward(model, x_b)


def pair_probability(o: float) -> float:
    """Logistic exp(o)/(1+exp(o)) in overflow-safe form; range (0, 1)."""
    if o >= 0:
        return 1.0 / (1.0 + math.exp(-o))
    e = math.exp(o)
    return e / (1.0 + e)


def pair_loss(o: float, label: float) -> float:
    """Binary cross entropy of a pair logit: -label*o + ln(1+exp(o)), stable."""
    if o > 0:
        return (1.0 - label) * o + math.log1p(math.exp(-o))
    return -label * o + math.log1p(math.exp(o))


def pair_grad(model: MlpModel, x_a: np.ndarray, x_b: np.ndarray, label: float) -> Gradients:
    """Exact gradient of pair_loss(pair_logit(...)) w.r.t. the shared parameters.

    Uses dloss/dO = P - label and sums the two streams' contributions.
    """
    q_a, cache_a = mlp.forward_cached(model, x_a)
    q_b, cache_b = mlp.forward_cached(model, x_b)
    g = pair_probability(float(q_a[0] - q_b[0])) - label
    grad_a = mlp.backward(model, cache_a, np.array([g]))
    grad_b = mlp.backward(model, cache_b, np.array([-g]))
    return mlp.add_gradients(grad_a, grad_b)


def _batch_loss_and_grad(
    model: MlpModel, xa: np.ndarray, xb: np.ndarray, labels: np.ndarray
) -> tuple[float, Gradients]:
    """Mean pair loss and mean gradient over a batch, fully vectorized."""
    q_a, cache_a = mlp.forward_cached(model, xa)
    q_b, cache_b = mlp.forward_cached(model, xb)
    o = q_a - q_b
    p = np.where(o >= 0, 1.0 / (1.0 + np.exp(-np.abs(o))), np.exp(-np.abs(o)) / (1.0 + np.exp(-np.abs(o))))
    loss = float(np.mean(np.where(o > 0, (1.0 - labels) * o, -labels * o) + np.log1p(np.exp(-np.abs(o)))))
    g = (p - labels) / len(labels)
    grad_a = mlp.backward(model, cache_a, g)
    grad_b = mlp.backward(model, cache_b, -g)
    return loss, mlp.add_gradients(grad_a, grad_b)


def resolve_pair_features(pairs: list[PDIP], features: FeatureSet) -> tuple[np.ndarray, np.ndarray]:
    """Stack (XA, XB) matrices for a pair list; missing ids are an error."""
    missing = sorted({pid for p in pairs for pid in (p.id_a, p.id_b) if pid not in features})
    if missing:
        raise ValueError(f"pairs reference post_ids without features: {missing[:5]}" + (" ..." if len(missing) > 5 else ""))
    xa = np.stack([features[p.id_a] for p in pairs]) if pairs else np.zeros((0, 0))
    xb = np.stack([features[p.id_b] for p in pairs]) if pairs else np.zeros((0, 0))
    return xa, xb


def _validation_accuracy(model: MlpModel, xa: np.ndarray, xb: np.ndarray) -> float:
    """Fraction of validation pairs with f(A) > f(B); ties count as incorrect."""
    return float(np.mean(mlp.forward_batch(model, xa) > mlp.forward_batch(model, xb)))


def train(
    model: MlpModel,
    pairs: list[PDIP],
    features: FeatureSet,
    split: tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
) -> TrainReport:
    """Train `model` in place on the train split, select by validation accuracy.

    `split` is a (train_indices, val_indices) pair over `pairs`; the two sets
    must be disjoint and non-empty. The returned report holds a snapshot of
    the best-validation epoch; ties keep the earliest epoch. Deterministic
    given config.seed.
    """
    train_idx, val_idx = (np.asarray(ix, dtype=int) for ix in split)
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise ValueError("train and validation splits must both be non-empty")
    if set(train_idx.tolist()) & set(val_idx.tolist()):
        raise ValueError("train and validation splits overlap")

    xa, xb = resolve_pair_features(pairs, features)
    xa_tr, xb_tr = xa[train_idx], xb[train_idx]
    xa_va, xb_va = xa[val_idx], xb[val_idx]

    rng = seeded_rng(config.seed, "train")
    state = AdamState.for_model(model)
    lr = config.learning_rate
    losses: list[float] = []
    val_accs: list[float] = []
    best_acc = -1.0
    best_epoch = 0
    best_model = model.copy()

    n = len(train_idx)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        swap = rng.random(n) < 0.5
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            s = swap[batch]
            a = np.where(s[:, None], xb_tr[batch], xa_tr[batch])
            b = np.where(s[:, None], xa_tr[batch], xb_tr[batch])
            labels = np.where(s, 0.0, 1.0)
            loss, grads = _batch_loss_and_grad(model, a, b, labels)
            mlp.adam_step(
                state, model, grads, lr, config.l2_penalty,
                beta1=config.adam_beta1, beta2=config.adam_beta2, eps=config.adam_eps,
            )
            epoch_loss += loss * len(batch)
        losses.append(epoch_loss / n)
        lr *= config.lr_decay_per_epoch
        acc = _validation_accuracy(model, xa_va, xb_va)
        val_accs.append(acc)
        if acc > best_acc:
            best_acc = acc
            best_epoch = epoch
            best_model = model.copy()

    return TrainReport(train_loss=losses, val_accuracy=val_accs, selected_epoch=best_epoch, model=best_model)


def score_batch(model: MlpModel, features: FeatureSet) -> dict[str, float]:
    """Score every feature vector; order-independent result keyed by post_id."""
    scores: dict[str, float] = {}
    for post_id, values in features.items():
        if len(values) != model.layer_dims[0]:
            raise ValueError(
                f"feature vector for {post_id!r} has dim {len(values)}, model expects {model.layer_dims[0]}"
            )
        scores[post_id] = mlp.forward(model, values)
    return scores


def write_train_report_csv(path, report: TrainReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("epoch,train_loss,val_accuracy,selected\n")
        for e, (loss, acc) in enumerate(zip(report.train_loss, report.val_accuracy)):
            f.write(f"{e},{loss!r},{acc!r},{int(e == report.selected_epoch)}\n")
