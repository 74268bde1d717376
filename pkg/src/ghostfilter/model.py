"""The acceptance classifier: normalization, a small MLP, weighted-loss training.

The network is a fully connected rectifier stack ending in a single score;
the sigmoid of that score is the acceptance probability, and a fixed
threshold turns it into a decision. Training minimizes class-balanced binary
cross-entropy (each class weighted by the other's prevalence) with decoupled
weight decay on an adaptive gradient step, deterministically from a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features.catalog import catalog_fingerprint
from .features.encoders import CategoricalEncoders
from .features.matrix import FeatureMatrix, FeatureMismatchError, FeatureVector

DEFAULT_HIDDEN = (64, 32)
MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z):
    return np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0)


def class_balanced_bce(scores, labels, w_pos: float, w_neg: float) -> float:
    """Weighted cross-entropy over pre-sigmoid scores.

    Evaluated in log-sum-exp form, so confident scores never push a log to
    exactly zero probability.
    """
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    if scores.shape != y.shape:
        raise ValueError(f"length mismatch: {scores.shape} vs {y.shape}")
    if scores.size == 0:
        raise ValueError("empty inputs")
    if not (0.0 < w_pos < 1.0 and 0.0 < w_neg < 1.0):
        raise ValueError("class weights must lie in (0, 1)")
    # -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
    per_row = w_pos * y * _softplus(-scores) + w_neg * (1.0 - y) * _softplus(scores)
    return float(per_row.mean())


class Network:
    """Fully connected scorer with rectifier hidden layers and a linear output."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.weights = weights
        self.biases = biases

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    @staticmethod
    def initialize(layer_sizes: Sequence[int], rng: np.random.Generator) -> "Network":
        """Fan-in-scaled uniform init, drawn in a fixed layer order."""
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return Network(weights, biases)

    def scores(self, x: np.ndarray) -> np.ndarray:
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i != last:
                h = np.maximum(h, 0.0)
        return h[:, 0]

    def loss_and_gradients(self, x: np.ndarray, y: np.ndarray, w_pos: float, w_neg: float):
        """Class-balanced BCE plus its gradient for every weight and bias."""
        pre: list[np.ndarray] = []
        post: list[np.ndarray] = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = np.maximum(z, 0.0) if i != last else z
            post.append(h)
        scores = pre[-1][:, 0]
        loss = class_balanced_bce(scores, y, w_pos, w_neg)

        n = len(y)
        sig = sigmoid(scores)
        dscore = (w_pos * y * (sig - 1.0) + w_neg * (1.0 - y) * sig) / n
        delta = dscore[:, None]
        grads_w = [np.empty(0)] * len(self.weights)
        grads_b = [np.empty(0)] * len(self.biases)
        for i in range(last, -1, -1):
            grads_w[i] = post[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0.0)
        return loss, grads_w, grads_b


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-2
    epochs: int = 50
    batch_size: int = 256
    seed: int = 0
    class_weights: tuple[float, float] | None = None  # (w_pos, w_neg); None = from labels
    hidden_sizes: tuple[int, ...] = DEFAULT_HIDDEN
    threshold: float = 0.5

    def resolved_weights(self, labels: np.ndarray) -> tuple[float, float]:
        """Weight each class by the other's prevalence unless given explicitly."""
        if self.class_weights is not None:
            return self.class_weights
        n = len(labels)
        positives = int(labels.sum())
        return (n - positives) / n, positives / n

    def as_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "class_weights": list(self.class_weights) if self.class_weights else None,
            "hidden_sizes": list(self.hidden_sizes),
            "threshold": self.threshold,
        }

    @staticmethod
    def from_dict(data: dict) -> "TrainConfig":
        data = dict(data)
        if data.get("class_weights") is not None:
            data["class_weights"] = tuple(data["class_weights"])
        if "hidden_sizes" in data:
            data["hidden_sizes"] = tuple(data["hidden_sizes"])
        return TrainConfig(**data)


@dataclass
class Normalizer:
    """Per-feature centering and scaling fit on training rows only.

    Missing entries are excluded from the statistics and filled with the
    feature mean at apply time, which normalizes them to exactly zero.
    """

    feature_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray  # population std; 1.0 fallback for constant features

    @staticmethod
    def fit(matrix: FeatureMatrix) -> "Normalizer":
        if len(matrix) == 0:
            raise ValueError("cannot fit a normalizer on an empty matrix")
        m = matrix.n_features
        mean = np.zeros(m)
        std = np.ones(m)
        for j in range(m):
            present = ~matrix.missing[:, j]
            if not present.any():
                continue
            vals = matrix.values[present, j]
            mu = vals.mean()
            sd = np.sqrt(((vals - mu) ** 2).mean())
            mean[j] = mu
            std[j] = sd if sd > 0.0 else 1.0
        return Normalizer(matrix.feature_names, mean, std)

    def apply(self, matrix: FeatureMatrix) -> np.ndarray:
        if matrix.feature_names != self.feature_names:
            raise FeatureMismatchError(
                [n for n in self.feature_names if n not in matrix.feature_names],
                [n for n in matrix.feature_names if n not in self.feature_names],
            )
        x = matrix.values.copy()
        if matrix.missing.any():
            rows, cols = np.nonzero(matrix.missing)
            x[rows, cols] = self.mean[cols]
        return (x - self.mean) / self.std


@dataclass
class TrainingHistory:
    initial_loss: float
    final_loss: float
    epoch_losses: list[float] = field(default_factory=list)


@dataclass
class TrainedModel:
    feature_names: tuple[str, ...]
    normalizer: Normalizer
    network: Network
    threshold: float
    config: TrainConfig
    encoders: CategoricalEncoders | None = None
    history: TrainingHistory | None = None

    @property
    def fingerprint(self) -> str:
        return catalog_fingerprint(self.feature_names)

    def _check_catalog(self, names: tuple[str, ...]) -> None:
        if names != self.feature_names:
            raise FeatureMismatchError(
                [n for n in self.feature_names if n not in names],
                [n for n in names if n not in self.feature_names],
            )

    def predict_proba_matrix(self, matrix: FeatureMatrix) -> np.ndarray:
        self._check_catalog(matrix.feature_names)
        return sigmoid(self.network.scores(self.normalizer.apply(matrix)))

    def predict_proba(self, vector: FeatureVector) -> float:
        matrix = FeatureMatrix.from_vectors([vector], self.feature_names, self.encoders)
        return float(self.predict_proba_matrix(matrix)[0])

    def predict(self, matrix: FeatureMatrix) -> np.ndarray:
        return self.predict_proba_matrix(matrix) >= self.threshold


def decide(probability: float, threshold: float) -> bool:
    """Accept exactly when the probability reaches the threshold."""
    if not (0.0 <= probability <= 1.0 and 0.0 <= threshold <= 1.0):
        raise ValueError("probability and threshold must lie in [0, 1]")
    return probability >= threshold


def train(matrix: FeatureMatrix, config: TrainConfig | None = None) -> TrainedModel:
    """Fit the classifier; identical (matrix, config) always yields identical weights.

    Raises if the training data is single-class or the loss stops being
    finite (the error names the epoch).
    """
    config = config or TrainConfig()
    labels = matrix.labels
    if labels.all() or not labels.any():
        raise ValueError("training data must contain both classes")
    w_pos, w_neg = config.resolved_weights(labels)

    normalizer = Normalizer.fit(matrix)
    x = normalizer.apply(matrix)
    y = labels.astype(float)
    n = len(y)

    rng = np.random.default_rng(config.seed)
    layer_sizes = [matrix.n_features, *config.hidden_sizes, 1]
    net = Network.initialize(layer_sizes, rng)

    adam_m = [np.zeros_like(w) for w in net.weights] + [np.zeros_like(b) for b in net.biases]
    adam_v = [np.zeros_like(w) for w in net.weights] + [np.zeros_like(b) for b in net.biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    initial_loss = class_balanced_bce(net.scores(x), y, w_pos, w_neg)
    epoch_losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads_w, grads_b = net.loss_and_gradients(x[batch], y[batch], w_pos, w_neg)
            if not np.isfinite(loss):
                raise ValueError(f"non-finite training loss in epoch {epoch}")
            step += 1
            params = net.weights + net.biases
            grads = grads_w + grads_b
            correction1 = 1.0 - beta1 ** step
            correction2 = 1.0 - beta2 ** step
            for i, (param, grad) in enumerate(zip(params, grads)):
                adam_m[i] = beta1 * adam_m[i] + (1.0 - beta1) * grad
                adam_v[i] = beta2 * adam_v[i] + (1.0 - beta2) * grad * grad
                m_hat = adam_m[i] / correction1
                v_hat = adam_v[i] / correction2
                param -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
                if i < len(net.weights):  # decoupled decay on weights, not biases
                    param -= config.learning_rate * config.weight_decay * param
        epoch_losses.append(class_balanced_bce(net.scores(x), y, w_pos, w_neg))

    history = TrainingHistory(
        initial_loss=initial_loss,
        final_loss=epoch_losses[-1] if epoch_losses else initial_loss,
        epoch_losses=epoch_losses,
    )
    return TrainedModel(
        feature_names=matrix.feature_names,
        normalizer=normalizer,
        network=net,
        threshold=config.threshold,
        config=config,
        encoders=matrix.encoders,
        history=history,
    )


# ---------------------------------------------------------------------------
# Serialization: self-describing JSON container, exact float round-trip.


def save_model(model: TrainedModel) -> bytes:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "acceptance-mlp",
        "feature_names": list(model.feature_names),
        "fingerprint": model.fingerprint,
        "threshold": model.threshold,
        "normalizer": {
            "mean": model.normalizer.mean.tolist(),
            "std": model.normalizer.std.tolist(),
        },
        "layer_sizes": model.network.layer_sizes,
        "weights": [w.tolist() for w in model.network.weights],
        "biases": [b.tolist() for b in model.network.biases],
        "config": model.config.as_dict(),
        "encoders": model.encoders.to_dict() if model.encoders else None,
        "history": {
            "initial_loss": model.history.initial_loss,
            "final_loss": model.history.final_loss,
        } if model.history else None,
    }
    return json.dumps(payload).encode("utf-8")


def load_model(data: bytes) -> TrainedModel:
    try:
        payload = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupted model payload: {exc}") from exc
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"incompatible model format version {version!r}, expected {MODEL_FORMAT_VERSION}"
        )
    try:
        feature_names = tuple(payload["feature_names"])
        normalizer = Normalizer(
            feature_names=feature_names,
            mean=np.array(payload["normalizer"]["mean"], dtype=float),
            std=np.array(payload["normalizer"]["std"], dtype=float),
        )
        network = Network(
            weights=[np.array(w, dtype=float) for w in payload["weights"]],
            biases=[np.array(b, dtype=float) for b in payload["biases"]],
        )
        config = TrainConfig.from_dict(payload["config"])
        encoders = payload.get("encoders")
        history = payload.get("history")
        model = TrainedModel(
            feature_names=feature_names,
            normalizer=normalizer,
            network=network,
            threshold=float(payload["threshold"]),
            config=config,
            encoders=CategoricalEncoders.from_dict(encoders) if encoders else None,
            history=TrainingHistory(history["initial_loss"], history["final_loss"]) if history else None,
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ModelFormatError(f"corrupted model payload: missing {exc}") from exc
    if payload["fingerprint"] != model.fingerprint:
        raise ModelFormatError("fingerprint does not match the stored feature names")
    return model


def write_model(model: TrainedModel, path) -> None:
    with open(path, "wb") as handle:
        handle.write(save_model(model))


def read_model(path) -> TrainedModel:
    with open(path, "rb") as handle:
        return load_model(handle.read())
