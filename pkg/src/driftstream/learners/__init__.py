"""Concrete classifiers behind the shared stream interface."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import ConfigError, Schema
from .bayes import BatchGaussianNB, OnlineGaussianNB
from .cart import CartClassifier, RandomForestClassifier
from .linear import (
    BatchLogisticRegression,
    OnlineLogisticConfig,
    OnlineLogisticRegression,
    softmax_loss_and_gradient,
)
from .moments import RunningMoments
from .tree import HoeffdingTreeClassifier, hoeffding_bound

__all__ = [
    "BatchGaussianNB",
    "BatchLogisticRegression",
    "CartClassifier",
    "HoeffdingTreeClassifier",
    "OnlineGaussianNB",
    "OnlineLogisticConfig",
    "OnlineLogisticRegression",
    "RandomForestClassifier",
    "RunningMoments",
    "hoeffding_bound",
    "majority_class",
    "make_batch_classifier",
    "make_online_classifier",
    "softmax_loss_and_gradient",
]

ONLINE_ALGORITHMS = ("gnb", "hoeffding", "logreg")
BATCH_ALGORITHMS = ("gnb", "logreg", "cart", "rf")


def majority_class(labels: Sequence[int] | np.ndarray, n_classes: int) -> int:
    """Most frequent label; ties and an empty cache resolve to the lowest index."""
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        return 0
    counts = np.bincount(labels, minlength=n_classes)
    return int(np.argmax(counts))


def make_online_classifier(name: str, schema: Schema, params: dict | None = None):
    params = dict(params or {})
    if name == "gnb":
        return OnlineGaussianNB(schema)
    if name == "hoeffding":
        return HoeffdingTreeClassifier(schema, **params)
    if name == "logreg":
        config = OnlineLogisticConfig(**params) if params else None
        return OnlineLogisticRegression(schema, config)
    raise ConfigError(f"unknown online algorithm {name!r}, expected one of {ONLINE_ALGORITHMS}")


def make_batch_classifier(name: str, schema: Schema, seed: int, params: dict | None = None):
    params = dict(params or {})
    if name == "gnb":
        return BatchGaussianNB(schema, seed=seed)
    if name == "logreg":
        return BatchLogisticRegression(schema, seed=seed, **params)
    if name == "cart":
        return CartClassifier(schema, seed=seed, **params)
    if name == "rf":
        return RandomForestClassifier(schema, seed=seed, **params)
    raise ConfigError(f"unknown batch algorithm {name!r}, expected one of {BATCH_ALGORITHMS}")
