"""Prequential metrics, run reports and cross-stream ranking.

The headline metric everywhere is the macro-averaged F1 score: the unweighted
mean of per-class F1 values. A class whose precision and recall are both zero
contributes F1 = 0; classes absent from both the truth and the predictions of
a window are excluded from the mean so short windows are not penalized for
classes they never saw.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import MetricError


class ConfusionMatrix:
    """K x K counts, rows = true class, columns = predicted class."""

    def __init__(self, n_classes: int) -> None:
        if n_classes < 1:
            raise MetricError("confusion matrix needs at least one class")
        self.counts = np.zeros((n_classes, n_classes), dtype=np.int64)

    def update(self, y_true: int, y_pred: int) -> None:
        self.counts[y_true, y_pred] += 1

    def remove(self, y_true: int, y_pred: int) -> None:
        self.counts[y_true, y_pred] -= 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def f1_macro(self) -> float:
        return f1_macro(self.counts)


def f1_macro(counts: np.ndarray) -> float:
    """Macro-averaged F1 from a confusion-matrix count array."""
    counts = np.asarray(counts)
    if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
        raise MetricError("confusion matrix must be square")
    if counts.sum() == 0:
        raise MetricError("confusion matrix is empty")
    true_totals = counts.sum(axis=1)
    pred_totals = counts.sum(axis=0)
    diag = np.diag(counts)
    f1_sum = 0.0
    n_seen = 0
    for c in range(counts.shape[0]):
        if true_totals[c] == 0 and pred_totals[c] == 0:
            continue
        n_seen += 1
        precision = diag[c] / pred_totals[c] if pred_totals[c] > 0 else 0.0
        recall = diag[c] / true_totals[c] if true_totals[c] > 0 else 0.0
        if precision + recall > 0:
            f1_sum += 2.0 * precision * recall / (precision + recall)
    return float(f1_sum / n_seen)


def f1_from_pairs(y_true: Iterable[int], y_pred: Iterable[int], n_classes: int) -> float:
    cm = ConfusionMatrix(n_classes)
    for t, p in zip(y_true, y_pred):
        cm.update(t, p)
    return cm.f1_macro()


class PrequentialState:
    """Test-then-train metric accumulator.

    Maintains a cumulative confusion matrix over all scored instances and a
    sliding window of the most recent ``window_size`` (true, predicted)
    pairs. Callers must only feed predictions that were produced before the
    true label was revealed.
    """

    def __init__(self, n_classes: int, window_size: int) -> None:
        if window_size < 1:
            raise MetricError("window size must be positive")
        self.cumulative = ConfusionMatrix(n_classes)
        self.window = ConfusionMatrix(n_classes)
        self.window_size = window_size
        self._records: deque[tuple[int, int]] = deque()

    def update(self, y_true: int, y_pred: int) -> None:
        self.cumulative.update(y_true, y_pred)
        self.window.update(y_true, y_pred)
        self._records.append((y_true, y_pred))
        if len(self._records) > self.window_size:
            old_t, old_p = self._records.popleft()
            self.window.remove(old_t, old_p)

    @property
    def n_seen(self) -> int:
        return self.cumulative.total

    @property
    def window_records(self) -> tuple[tuple[int, int], ...]:
        return tuple(self._records)

    def cumulative_f1(self) -> float:
        return self.cumulative.f1_macro()

    def windowed_f1(self) -> float:
        return self.window.f1_macro()


@dataclass
class RunReport:
    """Summary of one experiment run.

    ``trace`` holds (seq, windowed_f1, cumulative_f1) rows sampled every
    ``trace_every`` instances. Wall time is recorded but excluded from the
    canonical serialization so that reports from identical configurations are
    byte-identical.
    """

    run_id: str
    stream_id: str
    method_id: str
    final_f1_macro: float
    trace: list[tuple[int, float, float]]
    drift_count: int
    replacement_count: int
    seed: int
    config_digest: str
    n_instances: int
    wall_time_s: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "stream_id": self.stream_id,
            "method_id": self.method_id,
            "final_f1_macro": self.final_f1_macro,
            "drift_count": self.drift_count,
            "replacement_count": self.replacement_count,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "n_instances": self.n_instances,
        }

    @classmethod
    def from_json_dict(cls, data: dict, trace: list[tuple[int, float, float]] | None = None) -> "RunReport":
        return cls(
            run_id=data["run_id"],
            stream_id=data["stream_id"],
            method_id=data["method_id"],
            final_f1_macro=data["final_f1_macro"],
            trace=trace or [],
            drift_count=data["drift_count"],
            replacement_count=data["replacement_count"],
            seed=data["seed"],
            config_digest=data["config_digest"],
            n_instances=data["n_instances"],
        )


@dataclass(frozen=True)
class RankedMethod:
    method: str
    score: float
    position: int


def _stream_ranks(entries: Sequence[tuple[str, float]]) -> dict[str, float]:
    """Per-stream rank positions, best F1 first, ties averaged."""
    ordered = sorted(entries, key=lambda mf: -mf[1])
    ranks: dict[str, float] = {}
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1][1] == ordered[i][1]:
            j += 1
        avg_rank = (i + 1 + j + 1) / 2.0
        for k in range(i, j + 1):
            ranks[ordered[k][0]] = avg_rank
        i = j + 1
    return ranks


def ranking(results: Mapping[str, Sequence[tuple[str, float]]]) -> list[RankedMethod]:
    """Cross-stream ranking of methods by macro F1.

    ``results`` maps stream id to a list of (method, f1) pairs. Every method
    must be present for every stream. Within each stream, methods are ranked
    by F1 descending (ties receive the average of the tied positions); a
    method's ranking score is its mean rank across streams and positions are
    assigned in ascending order of that score.
    """
    if not results:
        raise MetricError("no results to rank")
    methods: set[str] = set()
    for entries in results.values():
        methods.update(m for m, _ in entries)
    missing = []
    for stream, entries in results.items():
        present = {m for m, _ in entries}
        for m in sorted(methods - present):
            missing.append((m, stream))
    if missing:
        cells = ", ".join(f"({m}, {s})" for m, s in sorted(missing))
        raise MetricError(f"incomplete ranking grid, missing cells: {cells}")

    totals: dict[str, float] = {m: 0.0 for m in methods}
    for entries in results.values():
        for method, rank in _stream_ranks(entries).items():
            totals[method] += rank
    n_streams = len(results)
    scores = {m: totals[m] / n_streams for m in methods}
    ordered = sorted(scores.items(), key=lambda ms: (ms[1], ms[0]))
    return [RankedMethod(method=m, score=s, position=i + 1) for i, (m, s) in enumerate(ordered)]
