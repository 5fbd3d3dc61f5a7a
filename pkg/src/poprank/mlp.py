"""Small fully-connected scorer networks, trained from scratch.

A model is a stack of affine layers with ReLU on the hidden layers and an
identity scalar output. Weights are stored as (fan_out, fan_in) matrices so a
batch forward pass is ``Z = H @ W.T + b``. The backward pass returns exact
analytic gradients for every parameter plus the gradient with respect to the
input batch (needed when two networks are chained end-to-end).

Checkpoints are a self-describing text format: a version tag, then one or more
named model sections with layer dims and row-major weights/biases printed with
17 significant digits, which round-trips float64 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .util import fmt_float

CHECKPOINT_TAG = "poprank-checkpoint-v1"


@dataclass
class MlpModel:
    """Layered scorer parameters: weights[l] is (dims[l+1], dims[l])."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def n_layers(self) -> int:
        return len(self.weights)


def init_model(layer_dims: list[int], seed: int | np.random.Generator) -> MlpModel:
    """He-initialized model: N(0, 2/fan_in) weights, zero biases, deterministic."""
    if len(layer_dims) < 2:
        raise ValueError(f"need at least input and output dims, got {layer_dims}")
    if layer_dims[-1] != 1:
        raise ValueError(f"output dim must be 1, got {layer_dims[-1]}")
    if any(d < 1 for d in layer_dims):
        raise ValueError(f"all dims must be positive, got {layer_dims}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_dims=list(layer_dims), weights=weights, biases=biases)


def _check_input(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.layer_dims[0]:
        raise ValueError(f"input dim {x.shape[-1]} does not match model input dim {model.layer_dims[0]}")
    return x


def forward(model: MlpModel, x: np.ndarray) -> float:
    """Score one feature vector: affine + ReLU composition ending in a scalar."""
    h = _check_input(model, x)
    last = model.n_layers() - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w.T + b
        if l != last:
            h = np.maximum(h, 0.0)
    return float(h[0])


def forward_batch(model: MlpModel, xs: np.ndarray) -> np.ndarray:
    """Score a (n, D) batch; returns shape (n,)."""
    h = _check_input(model, np.atleast_2d(xs))
    last = model.n_layers() - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w.T + b
        if l != last:
            h = np.maximum(h, 0.0)
    return h[:, 0]


def forward_cached(model: MlpModel, xs: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Batch forward keeping post-activation layer inputs for the backward pass."""
    h = _check_input(model, np.atleast_2d(xs))
    cache = [h]
    last = model.n_layers() - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w.T + b
        if l != last:
            h = np.maximum(h, 0.0)
        cache.append(h)
    return h[:, 0], cache


@dataclass
class Gradients:
    """Parameter gradients shaped like the model, plus the input gradient."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    inputs: np.ndarray


def backward(model: MlpModel, cache: list[np.ndarray], upstream: np.ndarray) -> Gradients:
    """Backpropagate per-sample output gradients `upstream` (shape (n,)).

    Returns gradients summed over the batch; ReLU uses the zero subgradient
    at the kink. `cache` must come from `forward_cached` on the same model.
    """
    delta = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    g_w: list[np.ndarray | None] = [None] * model.n_layers()
    g_b: list[np.ndarray | None] = [None] * model.n_layers()
    for l in range(model.n_layers() - 1, -1, -1):
        h_in = cache[l]
        g_w[l] = delta.T @ h_in
        g_b[l] = delta.sum(axis=0)
        d_in = delta @ model.weights[l]
        if l > 0:
            d_in = d_in * (cache[l] > 0.0)  # cache[l] is the ReLU output of layer l-1
        delta = d_in
    return Gradients(weights=g_w, biases=g_b, inputs=delta)


def zero_gradients(model: MlpModel) -> Gradients:
    return Gradients(
        weights=[np.zeros_like(w) for w in model.weights],
        biases=[np.zeros_like(b) for b in model.biases],
        inputs=np.zeros((0, model.layer_dims[0])),
    )


def add_gradients(a: Gradients, b: Gradients, scale_b: float = 1.0) -> Gradients:
    return Gradients(
        weights=[wa + scale_b * wb for wa, wb in zip(a.weights, b.weights)],
        biases=[ba + scale_b * bb for ba, bb in zip(a.biases, b.biases)],
        inputs=a.inputs,
    )


def scale_gradients(g: Gradients, scale: float) -> Gradients:
    return Gradients(
        weights=[w * scale for w in g.weights],
        biases=[b * scale for b in g.biases],
        inputs=g.inputs * scale,
    )


@dataclass
class AdamState:
    """First/second moment accumulators and the shared step counter."""

    step: int = 0
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_model(cls, model: MlpModel) -> "AdamState":
        return cls(
            step=0,
            m_w=[np.zeros_like(w) for w in model.weights],
            v_w=[np.zeros_like(w) for w in model.weights],
            m_b=[np.zeros_like(b) for b in model.biases],
            v_b=[np.zeros_like(b) for b in model.biases],
        )


def adam_step(
    state: AdamState,
    model: MlpModel,
    grads: Gradients,
    effective_lr: float,
    l2_penalty: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place.

    The l2 penalty is coupled: l2_penalty * theta is added to each gradient
    before the moment updates (not decoupled weight decay).
    """
    if len(grads.weights) != model.n_layers() or any(
        gw.shape != w.shape for gw, w in zip(grads.weights, model.weights)
    ):
        raise ValueError("gradient shapes do not match model")
    state.step += 1
    c1 = 1.0 - beta1**state.step
    c2 = 1.0 - beta2**state.step
    for l in range(model.n_layers()):
        for theta, g, m, v in (
            (model.weights[l], grads.weights[l], state.m_w[l], state.v_w[l]),
            (model.biases[l], grads.biases[l], state.m_b[l], state.v_b[l]),
        ):
            g = g + l2_penalty * theta
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            theta -= effective_lr * (m / c1) / (np.sqrt(v / c2) + eps)


def save_checkpoint(path: str | Path, models: dict[str, MlpModel]) -> None:
    """Write named model sections in the versioned text format."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(CHECKPOINT_TAG + "\n")
        for name, model in models.items():
            f.write(f"model {name}\n")
            f.write("dims " + " ".join(str(d) for d in model.layer_dims) + "\n")
            for l in range(model.n_layers()):
                for row in model.weights[l]:
                    f.write(" ".join(fmt_float(x) for x in row) + "\n")
                f.write(" ".join(fmt_float(x) for x in model.biases[l]) + "\n")


def load_checkpoint(path: str | Path) -> dict[str, MlpModel]:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_TAG:
        raise ValueError(f"not a recognized checkpoint file: {path}")
    models: dict[str, MlpModel] = {}
    pos = 1
    while pos < len(lines):
        if not lines[pos].startswith("model "):
            raise ValueError(f"expected model section at line {pos + 1}")
        name = lines[pos].split(" ", 1)[1]
        pos += 1
        if pos >= len(lines) or not lines[pos].startswith("dims "):
            raise ValueError(f"expected dims line at line {pos + 1}")
        dims = [int(d) for d in lines[pos].split()[1:]]
        pos += 1
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            rows = lines[pos : pos + fan_out]
            pos += fan_out
            weights.append(np.array([[float(x) for x in row.split()] for row in rows]))
            biases.append(np.array([float(x) for x in lines[pos].split()]))
            pos += 1
        model = MlpModel(layer_dims=dims, weights=weights, biases=biases)
        for l, (w, b) in enumerate(zip(model.weights, model.biases)):
            if w.shape != (dims[l + 1], dims[l]) or b.shape != (dims[l + 1],):
                raise ValueError(f"layer {l} of model {name!r} has inconsistent shapes")
        models[name] = model
    return models
