"""Feedforward network engine: forward pass, exact backprop, Adam, early-stopped training.

Networks are ReLU MLPs with a single linear output unit. All parameters live in
one flat float64 vector; ``WeightLayout`` maps (layer, matrix/bias) to index
ranges so the optimizer and serialization can treat weights as an opaque array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, TrainingError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class NetworkArchitecture:
    """Fully connected ReLU net with 1 or 2 hidden layers and scalar output."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1:
            raise InputError(f"input_dim must be >= 1, got {self.input_dim}")
        if not 1 <= len(self.hidden_dims) <= 2:
            raise InputError("hidden_dims must have length 1 or 2")
        if any(h < 1 for h in self.hidden_dims):
            raise InputError("hidden layer widths must be >= 1")
        if self.activation != "relu":
            raise InputError(f"unsupported activation {self.activation!r}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, 1)


class WeightLayout:
    """Index ranges of each layer's weight matrix and bias in the flat vector."""

    def __init__(self, arch: NetworkArchitecture):
        dims = arch.layer_dims
        self.shapes = [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
        self.ranges: list[tuple[tuple[int, int], tuple[int, int]]] = []
        offset = 0
        for d_in, d_out in self.shapes:
            w_range = (offset, offset + d_in * d_out)
            b_range = (w_range[1], w_range[1] + d_out)
            self.ranges.append((w_range, b_range))
            offset = b_range[1]
        self.n_params = offset

    def unpack(self, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Views of (W, b) per layer; no copies."""
        if theta.shape != (self.n_params,):
            raise InputError(
                f"weight vector has length {theta.shape}, layout needs {self.n_params}"
            )
        out = []
        for (w0, w1), (b0, b1) in self.ranges:
            d_in, d_out = self.shapes[len(out)]
            out.append((theta[w0:w1].reshape(d_in, d_out), theta[b0:b1]))
        return out

    def pack(self, layers: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        theta = np.empty(self.n_params)
        for (w, b), ((w0, w1), (b0, b1)) in zip(layers, self.ranges):
            theta[w0:w1] = np.asarray(w, dtype=float).ravel()
            theta[b0:b1] = np.asarray(b, dtype=float)
        return theta


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    batch_size: int = 32
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0
    # classical L2 folds the decay into the gradient before Adam; the
    # decoupled switch applies it directly to the weights instead
    decoupled_weight_decay: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be > 0")
        if self.weight_decay < 0:
            raise InputError("weight_decay must be >= 0")
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise InputError("max_epochs must be >= 1")
        if not 0 <= self.patience <= self.max_epochs:
            raise InputError("patience must satisfy 0 <= patience <= max_epochs")
        if self.seed < 0:
            raise InputError("seed must be an unsigned integer")


@dataclass(frozen=True)
class TrainedNetwork:
    """Weights of the epoch with the best validation MSE, not the final epoch."""

    architecture: NetworkArchitecture
    weights: np.ndarray
    best_val_loss: float
    epochs_run: int
    val_history: tuple[float, ...] = field(default=(), repr=False)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict(self.architecture, self.weights, X)


def init_weights(arch: NetworkArchitecture, seed: int) -> np.ndarray:
    """Fan-in scaled Gaussian weights (std sqrt(2/d_in) for ReLU), zero biases."""
    layout = WeightLayout(arch)
    rng = np.random.default_rng(seed)
    layers = []
    for d_in, d_out in layout.shapes:
        w = rng.normal(0.0, np.sqrt(2.0 / d_in), size=(d_in, d_out))
        layers.append((w, np.zeros(d_out)))
    return layout.pack(layers)


def _check_features(arch: NetworkArchitecture, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != arch.input_dim:
        raise InputError(
            f"feature matrix has shape {X.shape}, expected (n, {arch.input_dim})"
        )
    return X


def _run_layers(arch, weights, X):
    """Forward pass keeping pre-activations for backprop / last-layer features."""
    layout = WeightLayout(arch)
    layers = layout.unpack(np.asarray(weights, dtype=float))
    a = _check_features(arch, X)
    acts = [a]
    pres = []
    for w, b in layers[:-1]:
        z = a @ w + b
        pres.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    w_out, b_out = layers[-1]
    out = (a @ w_out + b_out)[:, 0]
    return out, acts, pres, layers, layout


def predict(arch: NetworkArchitecture, weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Network outputs for each row of X."""
    out, *_ = _run_layers(arch, weights, X)
    return out


def forward(arch: NetworkArchitecture, weights: np.ndarray, x: np.ndarray) -> float:
    """Scalar output for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"forward expects a single feature vector, got shape {x.shape}")
    return float(predict(arch, weights, x[None, :])[0])


def hidden_activations(arch: NetworkArchitecture, weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Activations of the last hidden layer, one row per input point."""
    _, acts, _, _, _ = _run_layers(arch, weights, X)
    return acts[-1]


def loss_and_gradient(
    arch: NetworkArchitecture,
    weights: np.ndarray,
    batch: tuple[np.ndarray, np.ndarray],
    weight_decay: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Mean squared error plus 0.5 * weight_decay * ||theta||^2, with exact gradient."""
    X, y = batch
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise InputError("loss_and_gradient requires a non-empty batch")
    out, acts, pres, layers, layout = _run_layers(arch, weights, X)
    if y.shape[0] != out.shape[0]:
        raise InputError("feature and label counts differ")
    n = y.shape[0]
    theta = np.asarray(weights, dtype=float)

    resid = out - y
    loss = float(np.mean(resid**2) + 0.5 * weight_decay * theta @ theta)

    # backprop; delta holds dLoss/d(pre-activation) of the current layer
    delta = (2.0 / n) * resid[:, None]
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for i in range(len(layers) - 1, -1, -1):
        a_prev = acts[i]
        grads.append((a_prev.T @ delta, delta.sum(axis=0)))
        if i > 0:
            w, _ = layers[i]
            delta = (delta @ w.T) * (pres[i - 1] > 0.0)
    grads.reverse()
    grad = layout.pack(grads) + weight_decay * theta
    return loss, grad


@dataclass(frozen=True)
class AdamState:
    """Weights plus Adam first/second-moment accumulators and step counter."""

    weights: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def initial(cls, weights: np.ndarray) -> "AdamState":
        w = np.asarray(weights, dtype=float)
        return cls(weights=w, m=np.zeros_like(w), v=np.zeros_like(w), step=0)


def adam_step(state: AdamState, grad: np.ndarray, config: TrainingConfig) -> AdamState:
    """One bias-corrected Adam update."""
    if grad.shape != state.weights.shape:
        raise InputError("gradient shape does not match state")
    t = state.step + 1
    m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * grad**2
    m_hat = m / (1.0 - ADAM_BETA1**t)
    v_hat = v / (1.0 - ADAM_BETA2**t)
    w = state.weights - config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    if config.decoupled_weight_decay and config.weight_decay > 0.0:
        w = w - config.learning_rate * config.weight_decay * state.weights
    return AdamState(weights=w, m=m, v=v, step=t)


def train(
    arch: NetworkArchitecture,
    config: TrainingConfig,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    init_seed: int | None = None,
) -> TrainedNetwork:
    """Mini-batch Adam with per-epoch validation MSE and patience-based stopping.

    ``init_seed`` only affects weight initialization; the shuffling stream is
    derived from ``config.seed`` so that ensemble members see identical batch
    orders and differ in initialization alone.
    """
    X_tr, y_tr = train_set
    X_va, y_va = val_set
    X_tr = np.asarray(X_tr, dtype=float)
    X_va = np.asarray(X_va, dtype=float)
    y_tr = np.asarray(y_tr, dtype=float).ravel()
    y_va = np.asarray(y_va, dtype=float).ravel()
    if y_tr.size == 0 or y_va.size == 0:
        raise InputError("train and validation sets must be non-empty")
    if X_tr.shape[1] != arch.input_dim or X_va.shape[1] != arch.input_dim:
        raise InputError("feature dimension does not match architecture")

    theta = init_weights(arch, config.seed if init_seed is None else init_seed)
    state = AdamState.initial(theta)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    decay_in_loss = 0.0 if config.decoupled_weight_decay else config.weight_decay

    n = y_tr.shape[0]
    best_loss = np.inf
    best_weights = state.weights.copy()
    history: list[float] = []
    since_improvement = 0
    epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss, grad = loss_and_gradient(
                arch, state.weights, (X_tr[idx], y_tr[idx]), decay_in_loss
            )
            if not np.isfinite(loss):
                raise TrainingError(f"training loss diverged at epoch {epoch}", epoch=epoch)
            state = adam_step(state, grad, config)

        val_mse = float(np.mean((predict(arch, state.weights, X_va) - y_va) ** 2))
        if not np.isfinite(val_mse):
            raise TrainingError(f"validation loss diverged at epoch {epoch}", epoch=epoch)
        history.append(val_mse)

        if val_mse < best_loss:
            best_loss = val_mse
            best_weights = state.weights.copy()
            since_improvement = 0
        else:
            since_improvement += 1
        if since_improvement > config.patience:
            break

    return TrainedNetwork(
        architecture=arch,
        weights=best_weights,
        best_val_loss=float(best_loss),
        epochs_run=epoch,
        val_history=tuple(history),
    )
