"""Incremental decision tree with Hoeffding-bound split decisions.

Leaves keep per-(feature, class) Gaussian summaries, so memory per leaf is
bounded and split candidates come from quantiles of the leaf's pooled
distribution rather than exhaustive value histograms. Leaf prediction is
majority class until ``nb_threshold`` instances have been seen, then naive
Bayes over the leaf statistics.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from ..core import OnlineClassifier, Prediction, Schema, argmax_tiebreak, uniform_prediction
from .bayes import _gaussian_nb_scores

#: Variance floor scale for the per-leaf Gaussian summaries.
_VAR_FLOOR_SCALE = 1e-9


def hoeffding_bound(range_r: float, delta: float, n: int) -> float:
    """Confidence radius sqrt(R^2 ln(1/delta) / (2 n)).

    With probability 1 - delta, the observed mean of n samples of a quantity
    with range R lies within this radius of its true mean; a leaf splits once
    the gap between its best and second-best candidate gain exceeds it.
    """
    return math.sqrt(range_r * range_r * math.log(1.0 / delta) / (2.0 * n))


def _entropy_bits(counts: np.ndarray, axis: int = 0) -> np.ndarray:
    totals = counts.sum(axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 0.0)
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axis)


class _Leaf:
    __slots__ = ("counts", "mean", "m2", "n_since_check", "fallback_label")

    def __init__(self, n_classes: int, n_features: int, fallback_label: int) -> None:
        self.counts = np.zeros(n_classes, dtype=np.int64)
        self.mean = np.zeros((n_classes, n_features))
        self.m2 = np.zeros((n_classes, n_features))
        self.n_since_check = 0
        self.fallback_label = fallback_label

    def update(self, x: np.ndarray, y: int) -> None:
        self.counts[y] += 1
        n = self.counts[y]
        delta = x - self.mean[y]
        self.mean[y] += delta / n
        self.m2[y] += delta * (x - self.mean[y])
        self.n_since_check += 1

    def class_variances(self) -> np.ndarray:
        counts = self.counts[:, None]
        return np.where(counts >= 2, self.m2 / np.maximum(counts - 1, 1), 0.0)

    def pooled_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Mixture mean and variance per feature across the leaf's classes."""
        n = self.counts.sum()
        w = self.counts / n
        mean = w @ self.mean
        second = w @ (self.class_variances() + self.mean**2)
        return mean, np.maximum(second - mean**2, 0.0)


class _SplitNode:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature: int, threshold: float, left: _Leaf, right: _Leaf) -> None:
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class HoeffdingTreeClassifier(OnlineClassifier):
    """Single-pass decision tree for streams.

    Split attempts happen every ``grace_period`` instances routed to a leaf.
    A split is taken when the information-gain lead of the best feature over
    the runner-up exceeds the Hoeffding radius, or when the radius itself has
    shrunk below ``tie_threshold`` (near-identical candidates are then
    interchangeable and waiting longer buys nothing).
    """

    def __init__(
        self,
        schema: Schema,
        grace_period: int = 100,
        delta: float = 0.01,
        nb_threshold: int = 10,
        tie_threshold: float = 0.05,
        n_candidates: int = 10,
    ) -> None:
        super().__init__(schema)
        self.grace_period = grace_period
        self.delta = delta
        self.nb_threshold = nb_threshold
        self.tie_threshold = tie_threshold
        self.n_candidates = n_candidates
        self._root: _Leaf | _SplitNode = _Leaf(schema.n_classes, schema.n_features, 0)
        self._n_nodes = 1
        self._quantiles = ndtri(np.arange(1, n_candidates + 1) / (n_candidates + 1))

    @property
    def n_nodes(self) -> int:
        return self._n_nodes

    def _route(self, x: np.ndarray) -> tuple[_Leaf, _SplitNode | None, int]:
        node = self._root
        parent: _SplitNode | None = None
        side = 0
        while isinstance(node, _SplitNode):
            parent = node
            if x[node.feature] <= node.threshold:
                node, side = node.left, 0
            else:
                node, side = node.right, 1
        return node, parent, side

    def learn_one(self, x: np.ndarray, y: int) -> None:
        self._check_x(x)
        self._check_y(y)
        x = np.asarray(x, dtype=float)
        leaf, parent, side = self._route(x)
        leaf.update(x, y)
        if leaf.n_since_check >= self.grace_period:
            self._attempt_split(leaf, parent, side)
            leaf.n_since_check = 0

    def _candidate_gains(self, leaf: _Leaf, feature: int) -> tuple[float, float]:
        """Best information gain (bits) and threshold for one feature."""
        present = np.nonzero(leaf.counts)[0]
        n = leaf.counts.sum()
        mu = leaf.mean[present, feature]
        var = leaf.class_variances()[present, feature]
        w = leaf.counts[present] / n
        pooled_mean = float(w @ mu)
        pooled_var = float(max(w @ (var + mu**2) - pooled_mean**2, 0.0))
        if pooled_var <= 0.0:
            return 0.0, 0.0
        floor = _VAR_FLOOR_SCALE * (pooled_var + 1e-12)
        sigma = np.sqrt(np.maximum(var, floor))
        thresholds = pooled_mean + math.sqrt(pooled_var) * self._quantiles
        frac_left = ndtr((thresholds[None, :] - mu[:, None]) / sigma[:, None])
        left = leaf.counts[present][:, None] * frac_left
        right = leaf.counts[present][:, None] - left
        nl = left.sum(axis=0)
        nr = right.sum(axis=0)
        parent_entropy = _entropy_bits(leaf.counts[present])
        child = (nl * _entropy_bits(left) + nr * _entropy_bits(right)) / n
        gains = parent_entropy - child
        best = int(np.argmax(gains))
        return float(gains[best]), float(thresholds[best])

    def _attempt_split(self, leaf: _Leaf, parent: _SplitNode | None, side: int) -> None:
        present = np.count_nonzero(leaf.counts)
        if present < 2:
            return
        n = int(leaf.counts.sum())
        d = self.schema.n_features
        gains = np.zeros(d)
        thresholds = np.zeros(d)
        for j in range(d):
            gains[j], thresholds[j] = self._candidate_gains(leaf, j)
        best = int(np.argmax(gains))
        g1 = gains[best]
        others = np.delete(gains, best)
        g2 = float(others.max()) if others.size else 0.0
        radius = hoeffding_bound(math.log2(max(2, present)), self.delta, n)
        if g1 <= 1e-12:
            return
        if g1 - g2 > radius or radius < self.tie_threshold:
            fallback = argmax_tiebreak(leaf.counts)
            node = _SplitNode(
                best,
                thresholds[best],
                _Leaf(self.schema.n_classes, d, fallback),
                _Leaf(self.schema.n_classes, d, fallback),
            )
            if parent is None:
                self._root = node
            elif side == 0:
                parent.left = node
            else:
                parent.right = node
            self._n_nodes += 2

    def predict(self, x: np.ndarray) -> Prediction:
        self._check_x(x)
        x = np.asarray(x, dtype=float)
        leaf, _, _ = self._route(x)
        n = int(leaf.counts.sum())
        if n == 0:
            if leaf is self._root:
                return uniform_prediction(self.schema.n_classes)
            # Empty child after a split: fall back to the parent's majority.
            scores = np.zeros(self.schema.n_classes)
            scores[leaf.fallback_label] = 1.0
            return Prediction(leaf.fallback_label, scores)
        if n < self.nb_threshold:
            scores = leaf.counts / n
            return Prediction(argmax_tiebreak(scores), scores)
        _, pooled_var = leaf.pooled_moments()
        scores = _gaussian_nb_scores(x, leaf.counts, leaf.mean, leaf.class_variances(), pooled_var)
        return Prediction(argmax_tiebreak(scores), scores)
