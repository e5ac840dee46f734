"""Fully-connected regression networks over the three probe counters.

Structures come from a bounded search space (1-5 hidden layers, 1-35
neurons each). Training is mean-squared-error gradient descent with
momentum on standardized inputs and targets, ReLU hidden activations, a
linear output, and seeded Glorot-uniform initialization, so a given seed
reproduces the same weights bit for bit.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InsufficientData, InvalidNNConfig, NonFiniteInput, NonFiniteLoss
from .features import Standardizer, fit_standardizer

MIN_LAYERS, MAX_LAYERS = 1, 5
MIN_NEURONS, MAX_NEURONS = 1, 35
N_INPUTS = 3


@dataclass(frozen=True)
class NNConfig:
    hidden_layers: int
    neurons_per_layer: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "neurons_per_layer", tuple(int(n) for n in self.neurons_per_layer))
        if not (MIN_LAYERS <= self.hidden_layers <= MAX_LAYERS):
            raise InvalidNNConfig(
                f"hidden_layers must be in [{MIN_LAYERS}, {MAX_LAYERS}], got {self.hidden_layers}")
        if len(self.neurons_per_layer) != self.hidden_layers:
            raise InvalidNNConfig(
                f"neurons_per_layer has {len(self.neurons_per_layer)} entries "
                f"for {self.hidden_layers} layers")
        for n in self.neurons_per_layer:
            if not (MIN_NEURONS <= n <= MAX_NEURONS):
                raise InvalidNNConfig(
                    f"neurons per layer must be in [{MIN_NEURONS}, {MAX_NEURONS}], got {n}")

    @classmethod
    def of(cls, neurons: Sequence[int]) -> "NNConfig":
        neurons = tuple(int(n) for n in neurons)
        return cls(hidden_layers=len(neurons), neurons_per_layer=neurons)


@dataclass(frozen=True)
class TrainOptions:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    epochs: int = 500
    batch_size: Optional[int] = 32   # None = full batch
    seed: int = 0


@dataclass(frozen=True)
class MlpModel:
    config: NNConfig
    weights: Tuple[np.ndarray, ...]   # per layer, shape (fan_in, fan_out)
    biases: Tuple[np.ndarray, ...]
    standardizer: Standardizer
    y_mean: float
    y_std: float
    seed: int

    def __post_init__(self):
        widths = [N_INPUTS, *self.config.neurons_per_layer, 1]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            assert w.shape == (widths[k], widths[k + 1]), "weight shape chain broken"
            assert b.shape == (widths[k + 1],)

    def predict_one(self, x) -> float:
        z = self.standardizer.apply(x)[None, :]
        return float(self.predict_standardized(z)[0] * self.y_std + self.y_mean)

    def predict_batch(self, X) -> np.ndarray:
        Z = self.standardizer.apply_batch(X)
        return self.predict_standardized(Z) * self.y_std + self.y_mean

    def predict_standardized(self, Z) -> np.ndarray:
        h = Z
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = np.maximum(h, 0.0)
        return h[:, 0]


def mlp_forward(model: MlpModel, x) -> float:
    """Predicted seconds for one contention 3-vector."""
    return model.predict_one(x)


def glorot_init(config: NNConfig, seed: int):
    rng = np.random.default_rng(seed)
    widths = [N_INPUTS, *config.neurons_per_layer, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def hidden_mask(weights, biases, Z) -> np.ndarray:
    """Concatenated ReLU on/off pattern for every hidden unit and sample.

    Gradient checks compare the pattern at perturbed weights: if it changes,
    a unit crossed its kink and the loss is not differentiable there, so the
    coordinate is not a valid finite-difference probe point.
    """
    masks = []
    h = Z
    last = len(weights) - 1
    for k, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w + b
        if k < last:
            masks.append((h > 0.0).ravel())
            h = np.maximum(h, 0.0)
    return np.concatenate(masks) if masks else np.zeros(0, dtype=bool)


def loss_and_gradients(weights, biases, Z, t):
    """MSE loss and its gradients for standardized inputs Z and targets t.

    Exposed separately so the analytic gradients can be checked against
    finite differences.
    """
    m = len(t)
    acts = [Z]
    h = Z
    last = len(weights) - 1
    for k, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w + b
        if k < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    out = acts[-1][:, 0]
    resid = out - t
    loss = float(resid @ resid) / m

    d = (2.0 / m) * resid[:, None]
    grads_w: List[np.ndarray] = [None] * len(weights)
    grads_b: List[np.ndarray] = [None] * len(weights)
    for k in range(last, -1, -1):
        grads_w[k] = acts[k].T @ d
        grads_b[k] = d.sum(axis=0)
        if k > 0:
            d = (d @ weights[k].T) * (acts[k] > 0.0)
    return loss, grads_w, grads_b


def train_mlp(X, y, config: NNConfig,
              options: Optional[TrainOptions] = None) -> MlpModel:
    """Seeded mini-batch gradient descent with momentum; deterministic for a
    given seed and options."""
    options = options or TrainOptions()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(X) != len(y):
        raise ValueError("inputs and targets must have equal length")
    if len(y) < 10:
        raise InsufficientData(f"need at least 10 samples, got {len(y)}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("training data contains NaN or infinity")

    standardizer = fit_standardizer(X)
    Z = standardizer.apply_batch(X)
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std == 0.0:
        y_std = 1.0
    t = (y - y_mean) / y_std

    rng = np.random.default_rng(options.seed)
    weights, biases = glorot_init(config, options.seed)
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    n = len(t)
    batch = options.batch_size or n
    for epoch in range(options.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            loss, gw, gb = loss_and_gradients(weights, biases, Z[idx], t[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became non-finite at epoch {epoch} "
                    f"(config={config.neurons_per_layer}, lr={options.learning_rate})")
            for k in range(len(weights)):
                vel_w[k] = options.momentum * vel_w[k] - options.learning_rate * gw[k]
                vel_b[k] = options.momentum * vel_b[k] - options.learning_rate * gb[k]
                weights[k] = weights[k] + vel_w[k]
                biases[k] = biases[k] + vel_b[k]

    final_loss, _, _ = loss_and_gradients(weights, biases, Z, t)
    if not np.isfinite(final_loss):
        raise NonFiniteLoss("trained network produces non-finite loss")
    return MlpModel(
        config=config, weights=tuple(weights), biases=tuple(biases),
        standardizer=standardizer, y_mean=y_mean, y_std=y_std, seed=options.seed)
