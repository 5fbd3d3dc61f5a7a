"""Absolute-popularity baseline: predict log-likes from a visual score plus
six non-visual count features, trained end-to-end with MSE.

The visual scorer summarizes the per-post feature vector into one scalar; the
head is a 7-256-128-64-1 network over that scalar concatenated with the six
ln(1+count)-transformed non-visual features. As an intrinsic-popularity
ranker the baseline is scored by the visual branch alone, since both members
of a mined pair share the same user statistics by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evaluate, mlp
from .features import FeatureSet
from .mining import PDIP
from .mlp import AdamState, MlpModel
from .ranker import TrainConfig
from .util import seeded_rng

HEAD_DIMS = [7, 256, 128, 64, 1]

NONVISUAL_FIELDS = ("followers", "followings", "n_posts", "n_hashtags", "n_mentions", "caption_length")


@dataclass(frozen=True)
class NonVisualFeatures:
    """Six nonnegative counts describing the post's social/textual context."""

    followers: float
    followings: float
    n_posts: float
    n_hashtags: float
    n_mentions: float
    caption_length: float

    def transformed(self) -> np.ndarray:
        """ln(1+count) for each field, the form fed to the model."""
        values = np.array([getattr(self, f) for f in NONVISUAL_FIELDS], dtype=np.float64)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError(f"non-visual counts must be finite and >= 0, got {values}")
        return np.log1p(values)


@dataclass
class AbsolutePopModel:
    visual_scorer: MlpModel
    head: MlpModel

    def __post_init__(self):
        if self.head.layer_dims[0] != 1 + len(NONVISUAL_FIELDS):
            raise ValueError(f"head input dim must be {1 + len(NONVISUAL_FIELDS)}, got {self.head.layer_dims[0]}")

    def copy(self) -> "AbsolutePopModel":
        return AbsolutePopModel(visual_scorer=self.visual_scorer.copy(), head=self.head.copy())


@dataclass(frozen=True)
class BaselineSample:
    post_id: str
    visual: np.ndarray
    nonvisual: NonVisualFeatures
    target: float  # log-likes


@dataclass
class BaselineReport:
    """Training curve with validation MSE model selection (lower is better)."""

    train_loss: list[float]
    val_mse: list[float]
    selected_epoch: int
    model: AbsolutePopModel


def init_baseline(visual_dims: list[int], seed: int) -> AbsolutePopModel:
    rng = seeded_rng(seed, "baseline-init")
    return AbsolutePopModel(
        visual_scorer=mlp.init_model(visual_dims, rng),
        head=mlp.init_model(HEAD_DIMS, rng),
    )


def baseline_forward(model: AbsolutePopModel, x_visual: np.ndarray, nv: NonVisualFeatures) -> float:
    """Predicted log-likes for one post."""
    q_vis = mlp.forward(model.visual_scorer, x_visual)
    return mlp.forward(model.head, np.concatenate(([q_vis], nv.transformed())))


def _forward_batch(model: AbsolutePopModel, xv: np.ndarray, nv_log: np.ndarray) -> np.ndarray:
    q_vis = mlp.forward_batch(model.visual_scorer, xv)
    return mlp.forward_batch(model.head, np.column_stack([q_vis, nv_log]))


def baseline_loss_and_grad(
    model: AbsolutePopModel, xv: np.ndarray, nv_log: np.ndarray, targets: np.ndarray
) -> tuple[float, mlp.Gradients, mlp.Gradients]:
    """Mean squared error and its exact gradients for both sub-networks.

    `nv_log` is the already ln(1+.)-transformed (n, 6) matrix; the head input
    gradient's first column backpropagates into the visual scorer.
    """
    q_vis, cache_vis = mlp.forward_cached(model.visual_scorer, xv)
    head_in = np.column_stack([q_vis, nv_log])
    preds, cache_head = mlp.forward_cached(model.head, head_in)
    residuals = preds - targets
    loss = float(np.mean(residuals**2))
    g_out = 2.0 * residuals / len(targets)
    grads_head = mlp.backward(model.head, cache_head, g_out)
    grads_vis = mlp.backward(model.visual_scorer, cache_vis, grads_head.inputs[:, 0])
    return loss, grads_vis, grads_head


def mse_loss(preds, targets) -> float:
    """Mean of squared differences; lengths must match and be >= 1."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {targets.shape}")
    if preds.size == 0:
        raise ValueError("mse_loss requires at least one element")
    return float(np.mean((preds - targets) ** 2))


def pearson(preds, targets) -> float:
    """Sample Pearson correlation coefficient in [-1, 1]."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape or preds.size < 2:
        raise ValueError("pearson requires two equal-length vectors of size >= 2")
    dp = preds - preds.mean()
    dt = targets - targets.mean()
    denom = np.sqrt(np.sum(dp**2) * np.sum(dt**2))
    if denom == 0.0:
        raise ValueError("pearson is undefined for zero-variance input")
    return float(np.clip(np.sum(dp * dt) / denom, -1.0, 1.0))


def train_baseline(
    model: AbsolutePopModel,
    samples: list[BaselineSample],
    split: tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
) -> BaselineReport:
    """End-to-end MSE training on log-likes targets; selects min-val-MSE epoch.

    Same schedule as the pairwise ranker: seeded shuffle, minibatches, Adam
    with coupled l2, multiplicative per-epoch learning-rate decay.
    """
    train_idx, val_idx = (np.asarray(ix, dtype=int) for ix in split)
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise ValueError("train and validation splits must both be non-empty")
    if set(train_idx.tolist()) & set(val_idx.tolist()):
        raise ValueError("train and validation splits overlap")

    xv = np.stack([s.visual for s in samples])
    nv_log = np.stack([s.nonvisual.transformed() for s in samples])
    targets = np.array([s.target for s in samples], dtype=np.float64)

    rng = seeded_rng(config.seed, "train-baseline")
    state_vis = AdamState.for_model(model.visual_scorer)
    state_head = AdamState.for_model(model.head)
    lr = config.learning_rate
    losses: list[float] = []
    val_mses: list[float] = []
    best_mse = np.inf
    best_epoch = 0
    best_model = model.copy()

    n = len(train_idx)
    for epoch in range(config.epochs):
        order = train_idx[rng.permutation(n)]
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, g_vis, g_head = baseline_loss_and_grad(model, xv[batch], nv_log[batch], targets[batch])
            mlp.adam_step(state_vis, model.visual_scorer, g_vis, lr, config.l2_penalty,
                          beta1=config.adam_beta1, beta2=config.adam_beta2, eps=config.adam_eps)
            mlp.adam_step(state_head, model.head, g_head, lr, config.l2_penalty,
                          beta1=config.adam_beta1, beta2=config.adam_beta2, eps=config.adam_eps)
            epoch_loss += loss * len(batch)
        losses.append(epoch_loss / n)
        lr *= config.lr_decay_per_epoch
        val_mse = mse_loss(_forward_batch(model, xv[val_idx], nv_log[val_idx]), targets[val_idx])
        val_mses.append(val_mse)
        if val_mse < best_mse:
            best_mse = val_mse
            best_epoch = epoch
            best_model = model.copy()

    return BaselineReport(train_loss=losses, val_mse=val_mses, selected_epoch=best_epoch, model=best_model)


def eval_baseline_as_intrinsic(model: AbsolutePopModel, pairs: list[PDIP], features: FeatureSet) -> evaluate.EvalResult:
    """Pairwise accuracy of the visual branch alone on a mined pair list."""
    ids = {pid for p in pairs for pid in (p.id_a, p.id_b)}
    missing = sorted(pid for pid in ids if pid not in features)
    if missing:
        raise ValueError(f"pairs reference post_ids without features: {missing[:5]}" + (" ..." if len(missing) > 5 else ""))
    scores = {pid: mlp.forward(model.visual_scorer, features[pid]) for pid in ids}
    return evaluate.pairwise_accuracy(scores, pairs)


def save_baseline(path: str | Path, model: AbsolutePopModel) -> None:
    mlp.save_checkpoint(path, {"visual": model.visual_scorer, "head": model.head})


def load_baseline(path: str | Path) -> AbsolutePopModel:
    models = mlp.load_checkpoint(path)
    if set(models) != {"visual", "head"}:
        raise ValueError(f"baseline checkpoint must contain 'visual' and 'head' sections, got {sorted(models)}")
    return AbsolutePopModel(visual_scorer=models["visual"], head=models["head"])


def save_nonvisual(path: str | Path, nonvisual: dict[str, NonVisualFeatures]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("post_id," + ",".join(NONVISUAL_FIELDS) + "\n")
        for post_id, nv in nonvisual.items():
            f.write(post_id + "," + ",".join(repr(float(getattr(nv, k))) for k in NONVISUAL_FIELDS) + "\n")


def load_nonvisual(path: str | Path) -> dict[str, NonVisualFeatures]:
    result: dict[str, NonVisualFeatures] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        expected = "post_id," + ",".join(NONVISUAL_FIELDS)
        if header != expected:
            raise ValueError(f"unexpected non-visual header: {header!r}")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(",")
            if len(fields) != 1 + len(NONVISUAL_FIELDS):
                raise ValueError(f"line {lineno}: expected {1 + len(NONVISUAL_FIELDS)} fields")
            result[fields[0]] = NonVisualFeatures(*(float(x) for x in fields[1:]))
    return result
