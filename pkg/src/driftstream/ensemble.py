"""Hybrid ensemble of batch and online learners with drift-gated retraining.

For every stream instance, in order:

1. every member predicts (the true label is not visible to this step);
2. combination weights are computed from each member's windowed F1 *before*
   this instance is scored, so the weights never depend on the label being
   predicted;
3. the weighted hard vote produces the final prediction;
4. the label is revealed: member score windows update with the step-1
   predictions;
5. online members learn the instance;
6. batch members update their caches, run their drift check every
   ``window_size`` instances after their first fit, train a shadow model on a
   drift verdict, and evaluate a pending shadow against the incumbent over
   the comparison window, swapping only on strictly better performance;
7. the caller updates global metrics from the returned step record.

Batch members answer with the majority class of their cache until the warm-up
of ``first_fit_size`` instances has been collected and the first fit runs.
While a shadow is under comparison, new drift verdicts are ignored, so shadow
evaluations never overlap.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, Instance, Prediction, Schema, argmax_tiebreak
from .drift import LAST_WINDOW, DriftStrategy, Trigger, WindowPair, check_windows
from .evaluation import PrequentialState, f1_from_pairs
from .learners import make_batch_classifier, make_online_classifier

logger = logging.getLogger(__name__)

ONLINE = "online"
BATCH = "batch"

WEIGHTED_VOTE = "wv"
DYNAMIC_SWITCH = "ds"


@dataclass(frozen=True)
class MemberSpec:
    """Static description of one ensemble slot."""

    id: str
    kind: str  # "online" | "batch"
    algorithm: str
    strategy: Optional[DriftStrategy] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in (ONLINE, BATCH):
            raise ConfigError(f"unknown member kind {self.kind!r}")
        if self.kind == BATCH and self.strategy is None:
            raise ConfigError(f"batch member {self.id!r} needs a drift strategy")
        if self.kind == ONLINE and self.strategy is not None:
            raise ConfigError(f"online member {self.id!r} must not carry a drift strategy")


@dataclass(frozen=True)
class EnsembleConfig:
    members: tuple[MemberSpec, ...]
    combiner: str = WEIGHTED_VOTE
    first_fit_size: int = 2500
    shadow_eval_size: int = 500
    score_window: int = 500
    seed: int = 0
    cache_cap: int = 200_000
    shadow_metric: str = "f1_macro"  # "f1_macro" | "accuracy"

    def __post_init__(self) -> None:
        if not self.members:
            raise ConfigError("ensemble needs at least one member")
        if self.combiner not in (WEIGHTED_VOTE, DYNAMIC_SWITCH):
            raise ConfigError(f"unknown combiner {self.combiner!r}")
        if self.shadow_eval_size < 1 or self.score_window < 1 or self.first_fit_size < 1:
            raise ConfigError("first_fit_size, shadow_eval_size and score_window must be positive")
        if self.first_fit_size > self.cache_cap:
            raise ConfigError("first_fit_size cannot exceed cache_cap")
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ConfigError("member ids must be unique")


@dataclass(frozen=True)
class DriftEvent:
    seq: int
    member_id: str
    triggers: tuple[Trigger, ...]


@dataclass(frozen=True)
class ReplacementEvent:
    seq: int
    member_id: str


@dataclass
class StepResult:
    seq: int
    y_true: int
    final_label: int
    member_labels: tuple[int, ...]
    weights: np.ndarray
    events: list


def compute_weights(scores: Sequence[float], combiner: str) -> np.ndarray:
    """Member weights from windowed scores.

    Weighted voting normalizes the scores (uniform if all are zero); dynamic
    switching puts all weight on the best-scoring member, ties resolved
    toward the lowest member index.
    """
    scores = np.asarray(scores, dtype=float)
    if np.any(scores < 0):
        raise ValueError("member scores must be non-negative")
    n = scores.size
    if combiner == DYNAMIC_SWITCH:
        weights = np.zeros(n)
        weights[argmax_tiebreak(scores)] = 1.0
        return weights
    if combiner == WEIGHTED_VOTE:
        total = scores.sum()
        if total <= 0:
            return np.full(n, 1.0 / n)
        return scores / total
    raise ValueError(f"unknown combiner {combiner!r}")


def combine_votes(labels: Sequence[int], weights: np.ndarray, n_classes: int) -> int:
    """Weighted hard vote; argmax over classes with ties to the lowest index."""
    if len(labels) != len(weights):
        raise ValueError("one weight per member prediction is required")
    tally = np.zeros(n_classes)
    for label, weight in zip(labels, weights):
        tally[label] += weight
    return argmax_tiebreak(tally)


class _Shadow:
    __slots__ = ("model", "records", "started_at")

    def __init__(self, model, started_at: int) -> None:
        self.model = model
        self.records: list[tuple[int, int, int]] = []  # (y, shadow label, incumbent label)
        self.started_at = started_at


class Member:
    """Runtime state of one ensemble slot."""

    def __init__(self, spec: MemberSpec, schema: Schema, config: EnsembleConfig, seed: int) -> None:
        self.spec = spec
        self.schema = schema
        self.config = config
        self.seed = seed
        self.strategy = spec.strategy
        self.drift_count = 0
        self.replacement_count = 0
        self.scores = PrequentialState(schema.n_classes, config.score_window)
        self.shadow: _Shadow | None = None
        self.n_seen = 0
        if spec.kind == ONLINE:
            self.model = make_online_classifier(spec.algorithm, schema, spec.params)
            self.fitted = True
        else:
            self.model = None
            self.fitted = False
            self.first_fit_size = self.strategy.first_fit_size or config.first_fit_size
            self.label_counts = np.zeros(schema.n_classes, dtype=np.int64)
            self._cache_x: deque = deque(maxlen=config.cache_cap)
            self._cache_y: deque = deque(maxlen=config.cache_cap)
            self._cache_warned = False
            self.n_since_fit = 0
            if self.strategy.monitors_any:
                self._buffer: deque = deque(maxlen=2 * self.strategy.window_size)
            else:
                self._buffer = deque(maxlen=0)

    def new_model(self):
        return make_batch_classifier(self.spec.algorithm, self.schema, self.seed, self.spec.params)

    # -- prediction -------------------------------------------------------

    def predict(self, x: np.ndarray) -> Prediction:
        if self.spec.kind == BATCH and not self.fitted:
            total = self.label_counts.sum()
            if total == 0:
                return Prediction(0, np.full(self.schema.n_classes, 1.0 / self.schema.n_classes))
            scores = self.label_counts / total
            return Prediction(argmax_tiebreak(scores), scores)
        return self.model.predict(x)

    def safe_predict_label(self, x: np.ndarray) -> int:
        try:
            return self.predict(x).label
        except Exception:
            logger.warning("member %s failed to predict, falling back to class 0", self.spec.id, exc_info=True)
            return 0

    def window_score(self) -> float:
        if self.scores.window.total == 0:
            return 0.0
        return self.scores.windowed_f1()

    # -- learning ---------------------------------------------------------

    def learn(self, inst: Instance, recorded_label: int, events: list) -> None:
        if self.spec.kind == ONLINE:
            self.model.learn_one(inst.x, inst.y)
            self.n_seen += 1
            return
        self._batch_learn(inst, recorded_label, events)

    def _cache_append(self, x: np.ndarray, y: int) -> None:
        if (
            self._cache_x.maxlen == self.config.cache_cap
            and len(self._cache_x) == self.config.cache_cap
            and not self._cache_warned
        ):
            logger.warning(
                "member %s cache reached its cap of %d instances, dropping oldest",
                self.spec.id,
                self.config.cache_cap,
            )
            self._cache_warned = True
        self._cache_x.append(x)
        self._cache_y.append(y)

    def _cache_arrays(self, last: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        xs = list(self._cache_x)
        ys = list(self._cache_y)
        if last is not None:
            xs = xs[-last:]
            ys = ys[-last:]
        return np.stack(xs), np.asarray(ys, dtype=int)

    def _batch_learn(self, inst: Instance, recorded_label: int, events: list) -> None:
        strategy = self.strategy
        self.label_counts[inst.y] += 1
        self._cache_append(inst.x, inst.y)
        self._buffer.append((inst.x, inst.y, recorded_label))
        self.n_seen += 1

        if not self.fitted:
            if self.n_seen == self.first_fit_size:
                model = self.new_model()
                X, y = self._cache_arrays()
                model.fit(X, y)
                self.model = model
                self.fitted = True
                self.n_since_fit = 0
                if not strategy.monitors_any:
                    # Train-once member: the cache is never consulted again.
                    self._cache_x = deque(maxlen=0)
                    self._cache_y = deque(maxlen=0)
                elif strategy.retrain_scope == LAST_WINDOW:
                    self._trim_cache(strategy.window_size)
            return

        self.n_since_fit += 1
        if self.shadow is not None:
            self._shadow_step(inst, recorded_label, events)
        elif self._check_due():
            verdict = check_windows(self._window_pair(), strategy, self.schema)
            if verdict.drifted:
                self._retrain(inst.seq, verdict.triggers, events)

    def _trim_cache(self, size: int) -> None:
        self._cache_x = deque(list(self._cache_x)[-size:], maxlen=size)
        self._cache_y = deque(list(self._cache_y)[-size:], maxlen=size)

    def _check_due(self) -> bool:
        strategy = self.strategy
        return (
            strategy.monitors_any
            and self.n_since_fit > 0
            and self.n_since_fit % strategy.window_size == 0
            and len(self._buffer) == 2 * strategy.window_size
        )

    def _window_pair(self) -> WindowPair:
        s = self.strategy.window_size
        rows = list(self._buffer)
        X = np.stack([r[0] for r in rows])
        y = np.asarray([r[1] for r in rows], dtype=int)
        pred = np.asarray([r[2] for r in rows], dtype=int)
        return WindowPair(
            X_ref=X[:s], y_ref=y[:s], pred_ref=pred[:s],
            X_cur=X[s:], y_cur=y[s:], pred_cur=pred[s:],
        )

    def _retrain(self, seq: int, triggers: tuple[Trigger, ...], events: list) -> None:
        if len(self._cache_x) == 0:
            return
        last = self.strategy.window_size if self.strategy.retrain_scope == LAST_WINDOW else None
        X, y = self._cache_arrays(last)
        model = self.new_model()
        try:
            model.fit(X, y)
        except Exception:
            logger.warning("member %s shadow training failed", self.spec.id, exc_info=True)
            return
        self.shadow = _Shadow(model, started_at=seq)
        self.drift_count += 1
        events.append(DriftEvent(seq=seq, member_id=self.spec.id, triggers=triggers))

    def _pair_metric(self, pairs: list[tuple[int, int]]) -> float:
        if self.config.shadow_metric == "accuracy":
            return sum(1 for t, p in pairs if t == p) / len(pairs)
        return f1_from_pairs([t for t, _ in pairs], [p for _, p in pairs], self.schema.n_classes)

    def _shadow_step(self, inst: Instance, recorded_label: int, events: list) -> None:
        shadow = self.shadow
        try:
            shadow_label = shadow.model.predict(inst.x).label
        except Exception:
            logger.warning("member %s shadow failed to predict", self.spec.id, exc_info=True)
            shadow_label = 0
        shadow.records.append((inst.y, shadow_label, recorded_label))
        if len(shadow.records) < self.config.shadow_eval_size:
            return
        shadow_score = self._pair_metric([(t, s) for t, s, _ in shadow.records])
        incumbent_score = self._pair_metric([(t, i) for t, _, i in shadow.records])
        if shadow_score > incumbent_score:
            self.model = shadow.model
            self.replacement_count += 1
            events.append(ReplacementEvent(seq=inst.seq, member_id=self.spec.id))
            if self.strategy.retrain_scope != LAST_WINDOW:
                self._cache_x.clear()
                self._cache_y.clear()
        self.shadow = None


class HybridEnsemble:
    """Runs the per-instance protocol over a fixed set of members."""

    def __init__(self, schema: Schema, config: EnsembleConfig) -> None:
        self.schema = schema
        self.config = config
        seeds = np.random.SeedSequence(config.seed).generate_state(len(config.members))
        self.members = [
            Member(spec, schema, config, int(seed)) for spec, seed in zip(config.members, seeds)
        ]
        self._next_seq = 0

    @property
    def drift_count(self) -> int:
        return sum(m.drift_count for m in self.members)

    @property
    def replacement_count(self) -> int:
        return sum(m.replacement_count for m in self.members)

    def process_instance(self, inst: Instance) -> StepResult:
        if inst.seq != self._next_seq:
            raise ValueError(f"expected seq {self._next_seq}, got {inst.seq}")
        self._next_seq += 1

        member_labels = tuple(m.safe_predict_label(inst.x) for m in self.members)
        weights = compute_weights([m.window_score() for m in self.members], self.config.combiner)
        final = combine_votes(member_labels, weights, self.schema.n_classes)

        events: list = []
        for member, label in zip(self.members, member_labels):
            member.scores.update(inst.y, label)
        for member, label in zip(self.members, member_labels):
            try:
                member.learn(inst, label, events)
            except Exception:
                logger.warning("member %s failed to learn", member.spec.id, exc_info=True)
        return StepResult(
            seq=inst.seq,
            y_true=inst.y,
            final_label=final,
            member_labels=member_labels,
            weights=weights,
            events=events,
        )
