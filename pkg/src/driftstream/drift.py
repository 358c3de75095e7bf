"""Window-based drift monitoring: test dispatch, strategies and verdicts.

Monitoring compares two adjacent windows of ``window_size`` instances, the
reference batch and the current batch. Each feature column gets its own
two-sample test, chosen from the column's kind and its number of unique
values across both windows; the target column is monitored the same way,
treated as categorical. The performance monitor compares the macro F1 of the
member's own recorded predictions between the two windows and flags drift on
a relative drop beyond ``perf_tolerance``.

A verdict is a pure function of (window pair, strategy, schema): at least one
trigger marks the pair as drifted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import ConfigError, FeatureKind, Schema
from .evaluation import f1_from_pairs
from .stattests import P_VALUE, chi_squared, js_divergence, ks_two_sample, wasserstein_1d, z_proportion

SINCE_LAST_REPLACEMENT = "since_last_replacement"
LAST_WINDOW = "last_window"


@dataclass(frozen=True)
class DriftStrategy:
    """One drift-handling configuration for a batch member.

    ``threshold`` applies to the statistical monitors (p-value tests flag
    below it, distance scores above it); ``perf_tolerance`` is the relative
    F1 drop that trips the performance monitor. ``first_fit_size`` overrides
    the ensemble-wide warm-up length when set (the train-once baselines
    differ only in this).
    """

    id: str
    monitor_features: bool
    monitor_target: bool
    monitor_performance: bool
    threshold: float
    window_size: int
    perf_tolerance: float
    retrain_scope: str = SINCE_LAST_REPLACEMENT
    first_fit_size: int | None = None
    literal_perf_rule: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.perf_tolerance < 1.0:
            raise ConfigError("perf_tolerance must lie in (0, 1)")
        if self.window_size < 2:
            raise ConfigError("window_size must be at least 2")
        if (self.monitor_features or self.monitor_target) and self.threshold <= 0:
            raise ConfigError("threshold must be positive when statistical monitors are on")
        if self.retrain_scope not in (SINCE_LAST_REPLACEMENT, LAST_WINDOW):
            raise ConfigError(f"unknown retrain_scope {self.retrain_scope!r}")

    @property
    def monitors_any(self) -> bool:
        return self.monitor_features or self.monitor_target or self.monitor_performance


@dataclass
class WindowPair:
    """Adjacent reference/current batches with the member's own predictions."""

    X_ref: np.ndarray
    y_ref: np.ndarray
    pred_ref: np.ndarray
    X_cur: np.ndarray
    y_cur: np.ndarray
    pred_cur: np.ndarray

    def __post_init__(self) -> None:
        sizes = {len(self.X_ref), len(self.y_ref), len(self.pred_ref)}
        sizes_cur = {len(self.X_cur), len(self.y_cur), len(self.pred_cur)}
        if len(sizes) != 1 or len(sizes_cur) != 1 or sizes != sizes_cur:
            raise ValueError("reference and current windows must have equal sizes")


@dataclass(frozen=True)
class Trigger:
    source: str  # "feature:<name>" | "target" | "performance"
    drift_score: float


@dataclass(frozen=True)
class DriftVerdict:
    drifted: bool
    triggers: tuple[Trigger, ...] = ()


def select_test(kind: FeatureKind, n_unique: int, window_size: int) -> str | None:
    """Pick the two-sample test for one column.

    Continuous numeric columns (more than five uniques) use Wasserstein on
    large windows and Kolmogorov-Smirnov otherwise; categorical columns and
    few-unique numerics use Jensen-Shannon on large windows and chi-squared
    otherwise; two-valued columns use Jensen-Shannon or the Z proportion
    test. Constant columns (one unique value) are never tested.
    """
    if n_unique < 1:
        raise ValueError("n_unique must be at least 1")
    large = window_size > 1000
    if n_unique == 1:
        return None
    if n_unique == 2:
        return "js" if large else "zprop"
    if kind is FeatureKind.NUMERIC and n_unique > 5:
        return "wasserstein" if large else "ks"
    return "js" if large else "chi2"


def _column_outcome(test: str, ref: np.ndarray, cur: np.ndarray):
    if test == "wasserstein":
        return wasserstein_1d(ref, cur, float(np.std(ref, ddof=1)))
    if test == "ks":
        return ks_two_sample(ref, cur)
    if test == "js":
        # Dispatch only routes few-unique or categorical columns here, so the
        # union-of-values treatment applies.
        return js_divergence(ref, cur, FeatureKind.CATEGORICAL)
    if test == "chi2":
        return chi_squared(ref, cur)
    if test == "zprop":
        top = np.max(np.concatenate([ref, cur]))
        return z_proportion(int((ref == top).sum()), ref.size, int((cur == top).sum()), cur.size)
    raise ValueError(f"unknown test {test!r}")


def _flags(outcome, threshold: float) -> bool:
    if outcome.score_kind == P_VALUE:
        return outcome.drift_score < threshold
    return outcome.drift_score > threshold


def check_windows(pair: WindowPair, strategy: DriftStrategy, schema: Schema) -> DriftVerdict:
    """Run every enabled monitor over one window pair and aggregate triggers."""
    triggers: list[Trigger] = []
    s = len(pair.y_ref)
    if strategy.monitor_features:
        for j, (name, kind) in enumerate(zip(schema.feature_names, schema.feature_kinds)):
            ref = pair.X_ref[:, j]
            cur = pair.X_cur[:, j]
            n_unique = np.unique(np.concatenate([ref, cur])).size
            test = select_test(kind, n_unique, s)
            if test is None:
                continue
            outcome = _column_outcome(test, ref, cur)
            if _flags(outcome, strategy.threshold):
                triggers.append(Trigger(f"feature:{name}", outcome.drift_score))
    if strategy.monitor_target:
        ref = pair.y_ref.astype(float)
        cur = pair.y_cur.astype(float)
        n_unique = np.unique(np.concatenate([ref, cur])).size
        test = select_test(FeatureKind.CATEGORICAL, n_unique, s)
        if test is not None:
            outcome = _column_outcome(test, ref, cur)
            if _flags(outcome, strategy.threshold):
                triggers.append(Trigger("target", outcome.drift_score))
    if strategy.monitor_performance:
        f1_ref = f1_from_pairs(pair.y_ref, pair.pred_ref, schema.n_classes)
        f1_cur = f1_from_pairs(pair.y_cur, pair.pred_cur, schema.n_classes)
        if strategy.literal_perf_rule:
            dropped = f1_cur < strategy.perf_tolerance * f1_ref
        else:
            dropped = f1_cur < (1.0 - strategy.perf_tolerance) * f1_ref
        if dropped:
            drop = 1.0 - f1_cur / f1_ref if f1_ref > 0 else 0.0
            triggers.append(Trigger("performance", drop))
    return DriftVerdict(drifted=bool(triggers), triggers=tuple(triggers))


def strategy_catalog() -> dict[str, DriftStrategy]:
    """The nine canonical drift-handling configurations.

    S1-S3 are the single-batch-learner strategies, S4-S7 the ensemble-member
    strategies, and B1/B2 the train-once baselines (all monitors off, so a
    batch model is fit on the initial window and never retrained).
    """
    full = dict(monitor_features=True, monitor_target=True, monitor_performance=True)
    perf_only = dict(monitor_features=False, monitor_target=False, monitor_performance=True)
    off = dict(monitor_features=False, monitor_target=False, monitor_performance=False)
    catalog = [
        DriftStrategy(id="S1", threshold=0.03, window_size=10_000, perf_tolerance=0.2, **full),
        DriftStrategy(id="S2", threshold=0.0, window_size=10_000, perf_tolerance=0.2, **perf_only),
        DriftStrategy(id="S3", threshold=0.02, window_size=5_000, perf_tolerance=0.2, **full),
        DriftStrategy(id="S4", threshold=0.02, window_size=2_500, perf_tolerance=0.2, **full),
        DriftStrategy(
            id="S5", threshold=0.0, window_size=2_500, perf_tolerance=0.2,
            retrain_scope=LAST_WINDOW, **perf_only,
        ),
        DriftStrategy(id="S6", threshold=0.03, window_size=10_000, perf_tolerance=0.2, **full),
        DriftStrategy(
            id="S7", threshold=0.02, window_size=10_000, perf_tolerance=0.2,
            retrain_scope=LAST_WINDOW, **full,
        ),
        DriftStrategy(id="B1", threshold=0.0, window_size=10_000, perf_tolerance=0.2, **off),
        DriftStrategy(
            id="B2", threshold=0.0, window_size=10_000, perf_tolerance=0.2,
            first_fit_size=25_000, **off,
        ),
    ]
    return {s.id: s for s in catalog}


def customize_strategy(base: DriftStrategy, **overrides) -> DriftStrategy:
    """A copy of ``base`` with selected fields replaced (id kept unless given)."""
    return replace(base, **overrides)
