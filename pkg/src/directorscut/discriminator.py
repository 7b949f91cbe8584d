"""Two-director discriminator: logistic regression on raw technique counts.

Full-batch gradient descent on the mean logistic loss, with per-feature
z-score standardization folded into the model so prediction takes raw
counts. Deterministic for a fixed seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ClipAnnotation
from .errors import DegenerateDataError
from .techniques import ANNOTATED, Technique


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of labels y in {0,1}."""
    z = x @ w + b
    # log(1 + exp(-|z|)) + max(z,0) - z*y  is the stable form
    return float(np.mean(np.logaddexp(0.0, z) - z * y))


def logistic_gradient(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, float]:
    n = x.shape[0]
    residual = sigmoid(x @ w + b) - y
    return x.T @ residual / n, float(np.sum(residual) / n)


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray  # shape (15,), acts on standardized features
    bias: float
    label_map: tuple[str, str]  # index 0 = negative class, 1 = positive
    feature_mean: np.ndarray
    feature_scale: np.ndarray

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (features - self.feature_mean) / self.feature_scale

    def probability(self, features: np.ndarray) -> float:
        """P(positive class) from one raw 15-count feature vector."""
        z = float(self.standardize(np.asarray(features, dtype=float)) @ self.weights + self.bias)
        return float(sigmoid(np.array([z]))[0])


def _features(clips: list[ClipAnnotation]) -> np.ndarray:
    return np.array([c.feature_vector() for c in clips], dtype=float)


def train_discriminator(
    clips_a: list[ClipAnnotation],
    clips_b: list[ClipAnnotation],
    label_a: str = "a",
    label_b: str = "b",
    learning_rate: float = 0.5,
    epochs: int = 2000,
    seed: int = 0,
) -> LogRegModel:
    if not clips_a or not clips_b:
        raise DegenerateDataError("both clip classes must be non-empty")
    x = np.vstack([_features(clips_a), _features(clips_b)])
    y = np.concatenate([np.zeros(len(clips_a)), np.ones(len(clips_b))])

    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0.0] = 1.0
    xs = (x - mean) / scale

    rng = np.random.default_rng(seed)
    w = rng.normal(scale=0.01, size=x.shape[1])
    b = 0.0
    for _ in range(epochs):
        gw, gb = logistic_gradient(w, b, xs, y)
        w -= learning_rate * gw
        b -= learning_rate * gb
    return LogRegModel(
        weights=w,
        bias=b,
        label_map=(label_a, label_b),
        feature_mean=mean,
        feature_scale=scale,
    )


def predict_director(model: LogRegModel, clip: ClipAnnotation) -> tuple[str, float]:
    p = model.probability(np.array(clip.feature_vector()))
    label = model.label_map[1] if p >= 0.5 else model.label_map[0]
    return label, p


def accuracy(model: LogRegModel, clips_a: list[ClipAnnotation], clips_b: list[ClipAnnotation]) -> float:
    correct = 0
    for clip in clips_a:
        correct += predict_director(model, clip)[0] == model.label_map[0]
    for clip in clips_b:
        correct += predict_director(model, clip)[0] == model.label_map[1]
    return correct / (len(clips_a) + len(clips_b))


def feature_importance(model: LogRegModel) -> list[tuple[Technique, float]]:
    """Techniques by descending |weight|; ties fall back to code order."""
    entries = [(tech, abs(float(model.weights[tech.value]))) for tech in ANNOTATED]
    entries.sort(key=lambda item: (-item[1], item[0].value))
    return entries


def cross_validated_accuracy(
    clips_a: list[ClipAnnotation],
    clips_b: list[ClipAnnotation],
    folds: int = 5,
    learning_rate: float = 0.5,
    epochs: int = 2000,
    seed: int = 0,
) -> float:
    """K-fold accuracy with per-class interleaved folds (deterministic)."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    order_a = rng.permutation(len(clips_a))
    order_b = rng.permutation(len(clips_b))
    correct = 0
    total = 0
    for k in range(folds):
        hold_a = [clips_a[i] for pos, i in enumerate(order_a) if pos % folds == k]
        hold_b = [clips_b[i] for pos, i in enumerate(order_b) if pos % folds == k]
        train_a = [clips_a[i] for pos, i in enumerate(order_a) if pos % folds != k]
        train_b = [clips_b[i] for pos, i in enumerate(order_b) if pos % folds != k]
        model = train_discriminator(
            train_a, train_b, learning_rate=learning_rate, epochs=epochs, seed=seed
        )
        for clip in hold_a:
            correct += predict_director(model, clip)[0] == model.label_map[0]
        for clip in hold_b:
            correct += predict_director(model, clip)[0] == model.label_map[1]
        total += len(hold_a) + len(hold_b)
    return correct / total
