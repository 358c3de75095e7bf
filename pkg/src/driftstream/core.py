"""Shared data model: schemas, instances, predictions and classifier contracts.

The ordering of ``Schema.class_labels`` is the global tie-break order: every
argmax in the package resolves ties toward the lowest class index, so a fixed
schema plus a fixed seed pins the full output trace of any model.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np


class ToolkitError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ToolkitError):
    """A configuration value or experiment file is invalid."""


class SchemaError(ToolkitError):
    """Data does not conform to the declared schema."""


class DataError(ToolkitError):
    """Input data is unusable: empty batch, malformed row, missing column."""


class MetricError(ToolkitError):
    """A metric was requested on an empty or inconsistent state."""


class FeatureKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    BINARY = "binary"


@dataclass(frozen=True)
class Schema:
    """Column layout of a stream: feature names/kinds and the class catalogue.

    The class catalogue is closed: it is fixed at ingestion time and learners
    never discover new classes mid-stream.
    """

    feature_names: tuple[str, ...]
    feature_kinds: tuple[FeatureKind, ...]
    class_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.feature_names) != len(self.feature_kinds):
            raise SchemaError("feature_names and feature_kinds differ in length")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise SchemaError("duplicate feature names")
        if not self.class_labels:
            raise SchemaError("class catalogue is empty")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise SchemaError("duplicate class labels")
        if any(not label for label in self.class_labels):
            raise SchemaError("empty class label")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def class_index(self, label: str) -> int:
        try:
            return self.class_labels.index(label)
        except ValueError:
            raise SchemaError(f"unknown class label {label!r}") from None


@dataclass
class Instance:
    """One labelled stream element.

    ``x`` is a dense float vector of length ``Schema.n_features``, ``y`` is an
    index into the schema's class catalogue and ``seq`` is the 0-based arrival
    index, strictly increasing along a stream.
    """

    x: np.ndarray
    y: int
    seq: int


@dataclass(frozen=True)
class Prediction:
    """A predicted class index with optional per-class scores.

    When ``scores`` is present it is non-negative, sums to one, and ``label``
    equals its argmax under the tie-break order.
    """

    label: int
    scores: Optional[np.ndarray] = None


def argmax_tiebreak(values: Sequence[float] | np.ndarray) -> int:
    """Index of the maximum, ties resolved toward the lowest index."""
    return int(np.argmax(values))


def uniform_prediction(n_classes: int) -> Prediction:
    """Fallback prediction for models queried before any training data."""
    return Prediction(0, np.full(n_classes, 1.0 / n_classes))


class Classifier:
    """Base contract shared by every learner.

    ``predict`` is pure: it never mutates model state, so predictions can be
    taken before the true label is revealed (test-then-train) and a frozen
    model can serve concurrent read-only predictions.
    """

    def __init__(self, schema: Schema) -> None:
        self.schema = schema

    def predict(self, x: np.ndarray) -> Prediction:
        raise NotImplementedError

    def _check_x(self, x: np.ndarray) -> None:
        if len(x) != self.schema.n_features:
            raise SchemaError(
                f"feature vector has length {len(x)}, schema expects {self.schema.n_features}"
            )

    def _check_y(self, y: int) -> None:
        if not 0 <= y < self.schema.n_classes:
            raise SchemaError(f"class index {y} outside catalogue of size {self.schema.n_classes}")


class OnlineClassifier(Classifier):
    """Incremental learner: inspects each instance exactly once."""

    def learn_one(self, x: np.ndarray, y: int) -> None:
        raise NotImplementedError


class BatchClassifier(Classifier):
    """Batch learner trained from scratch on a cached window of instances.

    Refitting on the same batch with the same seed must be bit-identical.
    """

    def fit(self, X: np.ndarray, y: np.ndarray) -> None:
        raise NotImplementedError
