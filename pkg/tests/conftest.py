import numpy as np
import pytest

from driftstream.core import FeatureKind, Instance, Schema


@pytest.fixture
def schema2x3() -> Schema:
    """Two numeric features, three classes."""
    return Schema(
        feature_names=("f0", "f1"),
        feature_kinds=(FeatureKind.NUMERIC, FeatureKind.NUMERIC),
        class_labels=("a", "b", "c"),
    )


@pytest.fixture
def schema1x2() -> Schema:
    return Schema(
        feature_names=("f0",),
        feature_kinds=(FeatureKind.NUMERIC,),
        class_labels=("a", "b"),
    )


def gaussian_instances(means: np.ndarray, n: int, seed: int, noise: float = 1.0, start_seq: int = 0):
    """Labelled instances from class-conditional Gaussians with unit-ish noise."""
    means = np.asarray(means, dtype=float)
    k, d = means.shape
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, k, size=n)
    X = means[labels] + noise * rng.normal(size=(n, d))
    return [Instance(x=X[i], y=int(labels[i]), seq=start_seq + i) for i in range(n)]
