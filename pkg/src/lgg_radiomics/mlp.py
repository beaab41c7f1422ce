"""Dense 8 -> 5 -> 5 -> 1 perceptron (ReLU, ReLU, sigmoid) trained with Adam on binary cross-entropy.

Weights are stored input-major, so a layer computes ``h @ W + b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LAYER_SIZES = (8, 5, 5, 1)
ACTIVATIONS = ("relu", "relu", "sigmoid")
INIT_LIMIT = 0.05
PROB_CLIP = 1e-7


class ShapeMismatch(ValueError):
    pass


class EmptyTrainingSet(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MlpModel:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    layer_sizes: tuple[int, ...] = LAYER_SIZES

    def __post_init__(self):
        sizes = self.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeMismatch("one weight matrix and bias vector per layer expected")
        for n, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[n], sizes[n + 1]) or b.shape != (sizes[n + 1],):
                raise ShapeMismatch(f"layer {n}: W {w.shape}, b {b.shape} for sizes {sizes}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {n} has non-finite parameters")

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    @classmethod
    def from_params(cls, params, layer_sizes=LAYER_SIZES) -> "MlpModel":
        return cls(tuple(params[0::2]), tuple(params[1::2]), tuple(layer_sizes))

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "activations": list(ACTIVATIONS),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d) -> "MlpModel":
        return cls(tuple(np.array(w, dtype=np.float64) for w in d["weights"]),
                   tuple(np.array(b, dtype=np.float64) for b in d["biases"]),
                   tuple(d["layer_sizes"]))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 10
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        for name in ("learning_rate", "beta1", "beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must be in (0, 1)")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        return cls([np.zeros_like(p) for p in model.params], [np.zeros_like(p) for p in model.params])


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"loss": list(self.loss), "accuracy": list(self.accuracy)}


def init_mlp(seed: int = 0, layer_sizes=LAYER_SIZES) -> MlpModel:
    """Weights i.i.d. uniform on [-0.05, 0.05], biases zero."""
    rng = np.random.default_rng(seed)
    weights = tuple(rng.uniform(-INIT_LIMIT, INIT_LIMIT, size=(a, b))
                    for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))
    biases = tuple(np.zeros(b) for b in layer_sizes[1:])
    return MlpModel(weights, biases, tuple(layer_sizes))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_input(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.layer_sizes[0]:
        raise ShapeMismatch(f"expected rows of width {model.layer_sizes[0]}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains non-finite values")
    return X


def _forward_cache(model: MlpModel, X: np.ndarray):
    pre, act = [], [X]
    h = X
    last = len(model.weights) - 1
    for n, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = sigmoid(z) if n == last else np.maximum(z, 0.0)
        pre.append(z)
        act.append(h)
    return pre, act


def forward(model: MlpModel, X) -> np.ndarray:
    """Output probabilities, shape (rows,)."""
    X = _check_input(model, X)
    return _forward_cache(model, X)[1][-1][:, 0]


def bce_loss(p, y) -> float:
    """Mean binary cross-entropy with p clipped to [1e-7, 1 - 1e-7]."""
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLIP, 1 - PROB_CLIP)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))


def backward(model: MlpModel, X, y) -> list[np.ndarray]:
    """Gradients of the mean clipped BCE, ordered like ``model.params``.

    The clip is part of the loss, so outputs beyond it get zero gradient.
    The ReLU derivative at 0 is taken as 0.
    """
    X = _check_input(model, X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) != len(X):
        raise ShapeMismatch(f"{len(y)} labels for {len(X)} rows")
    pre, act = _forward_cache(model, X)
    p = act[-1][:, 0]
    inside = (p >= PROB_CLIP) & (p <= 1 - PROB_CLIP)
    # d(mean BCE)/dz through the sigmoid simplifies to (p - y) / n
    delta = (np.where(inside, p - y, 0.0) / len(y))[:, None]
    grads: list[np.ndarray] = []
    for n in range(len(model.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))
        grads.append(act[n].T @ delta)
        if n > 0:
            delta = (delta @ model.weights[n].T) * (pre[n - 1] > 0)
    return grads[::-1]


def adam_step(state: AdamState, model: MlpModel, grads, cfg: TrainConfig):
    """One Adam update; returns (new_model, new_state)."""
    t = state.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(model.params, grads, state.m, state.v):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_p.append(p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon))
        new_m.append(m)
        new_v.append(v)
    return MlpModel.from_params(new_p, model.layer_sizes), AdamState(new_m, new_v, t)


def train(model: MlpModel, X, y, cfg: TrainConfig = TrainConfig()):
    """Mini-batch Adam training; returns (model, history).

    Each epoch draws a permutation from a generator seeded by ``cfg.seed``.
    Epoch loss/accuracy aggregate the mini-batch outputs computed before each
    update, weighted by batch size.
    """
    if len(X) == 0:
        raise EmptyTrainingSet("no training rows")
    X = _check_input(model, X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) != len(X):
        raise ShapeMismatch(f"{len(y)} labels for {len(X)} rows")
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.zeros_like(model)
    history = TrainHistory()
    n = len(X)
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = X[idx], y[idx]
            p = forward(model, xb)
            loss_sum += bce_loss(p, yb) * len(idx)
            correct += int(np.sum((np.clip(p, PROB_CLIP, 1 - PROB_CLIP) >= 0.5) == (yb == 1)))
            model, state = adam_step(state, model, backward(model, xb, yb), cfg)
        history.loss.append(loss_sum / n)
        history.accuracy.append(correct / n)
    return model, history


def predict_proba(model: MlpModel, X) -> np.ndarray:
    """Probabilities clipped to [1e-7, 1 - 1e-7]."""
    return np.clip(forward(model, X), PROB_CLIP, 1 - PROB_CLIP)


def predict(model: MlpModel, X, threshold: float = 0.5) -> np.ndarray:
    """Label 1 iff the clipped probability is >= threshold."""
    return (predict_proba(model, X) >= threshold).astype(np.int64)

