"""Logistic regression: online multinomial SGD and a batch gradient-descent fit.

The online learner standardizes features with running moments updated before
each gradient step (scale, then learn), uses a shared learning rate for the
weights and a separate one for the intercept, applies L2 at strength 1.0 and
clips gradient coordinates at 1e12. The multinomial softmax form generalizes
the binary learner to the multi-class streams this package targets; a
one-vs-rest mode is available via configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import (
    BatchClassifier,
    DataError,
    OnlineClassifier,
    Prediction,
    Schema,
    argmax_tiebreak,
)
from .moments import RunningMoments


@dataclass(frozen=True)
class OnlineLogisticConfig:
    learning_rate: float = 0.005
    l2: float = 1.0
    l1: float = 0.0
    intercept_lr: float = 0.01
    gradient_clip: float = 1e12
    one_vs_rest: bool = False

    def __post_init__(self) -> None:
        for name in ("learning_rate", "l2", "l1", "intercept_lr", "gradient_clip"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def softmax_loss_and_gradient(
    W: np.ndarray, b: np.ndarray, x: np.ndarray, y: int, l2: float, l1: float = 0.0
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy loss with L2/L1 penalties on W and its exact gradient.

    Returns (loss, dW, db). The intercept is unpenalized.
    """
    probs = _softmax(x @ W + b)
    loss = -np.log(max(probs[y], 1e-300)) + 0.5 * l2 * float(np.sum(W * W))
    if l1 > 0:
        loss += l1 * float(np.sum(np.abs(W)))
    g = probs.copy()
    g[y] -= 1.0
    dW = np.outer(x, g) + l2 * W
    if l1 > 0:
        dW += l1 * np.sign(W)
    return float(loss), dW, g


class OnlineLogisticRegression(OnlineClassifier):
    """Multinomial logistic regression trained by per-instance SGD."""

    def __init__(self, schema: Schema, config: OnlineLogisticConfig | None = None) -> None:
        super().__init__(schema)
        self.config = config or OnlineLogisticConfig()
        d, k = schema.n_features, schema.n_classes
        self.W = np.zeros((d, k))
        self.b = np.zeros(k)
        self._scaler = RunningMoments(d)

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        if self._scaler.count == 0:
            return np.zeros_like(x, dtype=float)
        std = self._scaler.std()
        out = np.zeros_like(x, dtype=float)
        nz = std > 0
        out[nz] = (x[nz] - self._scaler.mean[nz]) / std[nz]
        return out

    def _scores(self, x_std: np.ndarray) -> np.ndarray:
        if self.config.one_vs_rest:
            margins = x_std @ self.W + self.b
            sig = 1.0 / (1.0 + np.exp(-margins))
            total = sig.sum()
            return sig / total if total > 0 else np.full(len(sig), 1.0 / len(sig))
        return _softmax(x_std @ self.W + self.b)

    def predict(self, x: np.ndarray) -> Prediction:
        self._check_x(x)
        scores = self._scores(self._standardize(np.asarray(x, dtype=float)))
        return Prediction(argmax_tiebreak(scores), scores)

    def learn_one(self, x: np.ndarray, y: int) -> None:
        self._check_x(x)
        self._check_y(y)
        x = np.asarray(x, dtype=float)
        # Scaler sees the instance before the gradient step.
        self._scaler.update(x)
        x_std = self._standardize(x)
        cfg = self.config
        if cfg.one_vs_rest:
            margins = x_std @ self.W + self.b
            sig = 1.0 / (1.0 + np.exp(-margins))
            target = np.zeros(self.schema.n_classes)
            target[y] = 1.0
            g = sig - target
            dW = np.outer(x_std, g) + cfg.l2 * self.W
            if cfg.l1 > 0:
                dW += cfg.l1 * np.sign(self.W)
        else:
            _, dW, g = softmax_loss_and_gradient(self.W, self.b, x_std, y, cfg.l2, cfg.l1)
        np.clip(dW, -cfg.gradient_clip, cfg.gradient_clip, out=dW)
        g = np.clip(g, -cfg.gradient_clip, cfg.gradient_clip)
        self.W -= cfg.learning_rate * dW
        self.b -= cfg.intercept_lr * g


class BatchLogisticRegression(BatchClassifier):
    """Multinomial logistic regression fit by full-batch gradient descent.

    The training batch is standardized first and the fitted moments are
    reused at prediction time. Descent runs for at most ``max_iter``
    iterations or until the gradient infinity-norm drops below ``tol``; the
    step size halves whenever a step would increase the loss, which keeps the
    procedure deterministic without line-search machinery.
    """

    def __init__(
        self,
        schema: Schema,
        seed: int | None = None,
        l2: float = 1e-4,
        learning_rate: float = 0.5,
        max_iter: int = 200,
        tol: float = 1e-6,
    ) -> None:
        super().__init__(schema)
        self.l2 = l2
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol
        d, k = schema.n_features, schema.n_classes
        self.W = np.zeros((d, k))
        self.b = np.zeros(k)
        self._mean = np.zeros(d)
        self._std = np.ones(d)
        self._fitted = False

    def _loss_and_grad(self, X: np.ndarray, Y: np.ndarray, W: np.ndarray, b: np.ndarray):
        z = X @ W + b
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        probs = e / e.sum(axis=1, keepdims=True)
        n = X.shape[0]
        ll = -np.mean(np.log(np.maximum(probs[np.arange(n), Y], 1e-300)))
        loss = ll + 0.5 * self.l2 * float(np.sum(W * W))
        G = probs
        G[np.arange(n), Y] -= 1.0
        dW = X.T @ G / n + self.l2 * W
        db = G.sum(axis=0) / n
        return loss, dW, db

    def fit(self, X: np.ndarray, y: np.ndarray) -> None:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.size == 0:
            raise DataError("empty training batch")
        self._mean = X.mean(axis=0)
        std = X.std(axis=0, ddof=1) if X.shape[0] >= 2 else np.zeros(X.shape[1])
        self._std = np.where(std > 0, std, 1.0)
        Xs = (X - self._mean) / self._std
        d, k = self.schema.n_features, self.schema.n_classes
        W = np.zeros((d, k))
        b = np.zeros(k)
        lr = self.learning_rate
        loss, dW, db = self._loss_and_grad(Xs, y, W, b)
        for _ in range(self.max_iter):
            if max(np.abs(dW).max(), np.abs(db).max()) < self.tol:
                break
            new_W = W - lr * dW
            new_b = b - lr * db
            new_loss, new_dW, new_db = self._loss_and_grad(Xs, y, new_W, new_b)
            if new_loss > loss:
                lr *= 0.5
                continue
            W, b, loss, dW, db = new_W, new_b, new_loss, new_dW, new_db
        self.W, self.b = W, b
        self._fitted = True

    def predict(self, x: np.ndarray) -> Prediction:
        self._check_x(x)
        x_std = (np.asarray(x, dtype=float) - self._mean) / self._std
        scores = _softmax(x_std @ self.W + self.b)
        return Prediction(argmax_tiebreak(scores), scores)
