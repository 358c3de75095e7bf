"""Experiment configuration, the run loop and on-disk artifacts.

A run directory always contains the same file names:

* ``report.json``   summary (deterministic: identical config + seed gives
  identical bytes; wall time lives in ``timing.json`` for that reason)
* ``trace.csv``     (seq, windowed_f1, cumulative_f1) sampled every
  ``trace_every`` instances
* ``events.csv``    drift and replacement log
  (seq, member, event, source, score)
* ``timing.json``   wall time, excluded from the canonical report
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .core import ConfigError, Instance, Schema
from .drift import DriftStrategy, customize_strategy, strategy_catalog
from .ensemble import (
    BATCH,
    DriftEvent,
    EnsembleConfig,
    HybridEnsemble,
    MemberSpec,
    ONLINE,
    ReplacementEvent,
)
from .evaluation import PrequentialState, RunReport
from .ingest import SynthConfig, replay, stream_schema, synthetic_instances

ONLINE_DISPLAY = {"gnb": "GNB", "hoeffding": "HT", "logreg": "OLR"}

_STRATEGY_ALIASES = {"theta": "threshold", "s": "window_size", "alpha": "perf_tolerance"}
_STRATEGY_FIELDS = {
    "monitor_features",
    "monitor_target",
    "monitor_performance",
    "threshold",
    "window_size",
    "perf_tolerance",
    "retrain_scope",
    "first_fit_size",
    "literal_perf_rule",
}


def resolve_strategy(entry) -> DriftStrategy:
    """Turn a config entry (catalog id, or dict with overrides) into a strategy.

    A dict whose ``id`` names a catalog strategy starts from that strategy
    and overrides selected fields; any other id must define every monitor
    field explicitly.
    """
    catalog = strategy_catalog()
    if isinstance(entry, str):
        if entry not in catalog:
            raise ConfigError(f"unknown strategy id {entry!r}")
        return catalog[entry]
    if not isinstance(entry, dict):
        raise ConfigError(f"strategy entry must be an id or an object, got {type(entry).__name__}")
    entry = dict(entry)
    sid = entry.pop("id", None)
    if sid is None:
        raise ConfigError("strategy object needs an 'id'")
    overrides = {}
    for key, value in entry.items():
        key = _STRATEGY_ALIASES.get(key, key)
        if key not in _STRATEGY_FIELDS:
            raise ConfigError(f"unknown strategy field {key!r}")
        overrides[key] = value
    if sid in catalog:
        return customize_strategy(catalog[sid], **overrides)
    try:
        return DriftStrategy(id=sid, **overrides)
    except TypeError as exc:
        raise ConfigError(f"incomplete strategy {sid!r}: {exc}") from None


@dataclass
class ExperimentConfig:
    """Parsed experiment description; ``raw`` backs the config digest."""

    stream_path: Path | None
    synth: SynthConfig | None
    method: dict
    method_id: str
    seed: int
    first_fit_size: int
    shadow_eval_size: int
    score_window: int
    cache_cap: int
    shadow_metric: str
    trace_every: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def stream_id(self) -> str:
        if self.stream_path is not None:
            return self.stream_path.stem
        return f"synth-{self.digest()[:8]}"

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()[:16]


def _derive_method_id(method: dict) -> str:
    kind = method.get("type")
    if kind == "online":
        name = method["algorithm"]
        return ONLINE_DISPLAY.get(name, name.upper())
    if kind == "batch":
        strategy = method["strategy"]
        sid = strategy if isinstance(strategy, str) else strategy.get("id", "custom")
        return f"{method['algorithm'].upper()}-{sid}"
    if kind == "ensemble":
        combiner = method.get("combiner", "wv").upper()
        has_batch = method.get("strategies") is None or bool(method["strategies"])
        has_online = method.get("online_members") is None or bool(method["online_members"])
        if has_batch and has_online:
            return f"{combiner}-{method['batch_algorithm'].upper()}"
        if has_batch:
            return f"{combiner}-BATCH"
        return f"{combiner}-ONLINE"
    raise ConfigError(f"unknown method type {kind!r}")


def parse_config(data: dict) -> ExperimentConfig:
    if "method" not in data or "stream" not in data:
        raise ConfigError("experiment config needs 'stream' and 'method' sections")
    stream = data["stream"]
    stream_path = None
    synth = None
    if "path" in stream:
        stream_path = Path(stream["path"])
    elif "synthetic" in stream:
        synth = SynthConfig(**stream["synthetic"])
    else:
        raise ConfigError("stream section needs 'path' or 'synthetic'")
    method = data["method"]
    if method.get("type") not in ("online", "batch", "ensemble"):
        raise ConfigError("method.type must be 'online', 'batch' or 'ensemble'")
    return ExperimentConfig(
        stream_path=stream_path,
        synth=synth,
        method=method,
        method_id=data.get("method_id") or _derive_method_id(method),
        seed=int(data.get("seed", 0)),
        first_fit_size=int(data.get("first_fit_size", 2500)),
        shadow_eval_size=int(data.get("shadow_eval_size", 500)),
        score_window=int(data.get("score_window", 500)),
        cache_cap=int(data.get("cache_cap", 200_000)),
        shadow_metric=data.get("shadow_metric", "f1_macro"),
        trace_every=int(data.get("trace_every", 1000)),
        raw=data,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return parse_config(data)


def build_member_specs(method: dict) -> tuple[MemberSpec, ...]:
    kind = method["type"]
    if kind == "online":
        name = method["algorithm"]
        return (MemberSpec(id=name, kind=ONLINE, algorithm=name, params=method.get("params", {})),)
    if kind == "batch":
        strategy = resolve_strategy(method["strategy"])
        name = method["algorithm"]
        return (
            MemberSpec(
                id=f"{name}-{strategy.id}",
                kind=BATCH,
                algorithm=name,
                strategy=strategy,
                params=method.get("params", {}),
            ),
        )
    specs: list[MemberSpec] = []
    # Absent keys take the canonical seven-member layout; explicit empty
    # lists select the batch-only / online-only variants.
    strategy_entries = method.get("strategies")
    if strategy_entries is None:
        strategy_entries = ["S4", "S5", "S6", "S7"]
    online_names = method.get("online_members")
    if online_names is None:
        online_names = ["gnb", "hoeffding", "logreg"]
    strategies = [resolve_strategy(e) for e in strategy_entries]
    if strategies and "batch_algorithm" not in method:
        raise ConfigError("ensemble with batch strategies needs 'batch_algorithm'")
    for strategy in strategies:
        name = method["batch_algorithm"]
        specs.append(
            MemberSpec(
                id=f"{name}-{strategy.id}",
                kind=BATCH,
                algorithm=name,
                strategy=strategy,
                params=method.get("batch_params", {}),
            )
        )
    for name in online_names:
        specs.append(MemberSpec(id=name, kind=ONLINE, algorithm=name, params={}))
    if not specs:
        raise ConfigError("ensemble method defines no members")
    return tuple(specs)


def build_ensemble(schema: Schema, config: ExperimentConfig) -> HybridEnsemble:
    ensemble_config = EnsembleConfig(
        members=build_member_specs(config.method),
        combiner=config.method.get("combiner", "wv") if config.method["type"] == "ensemble" else "wv",
        first_fit_size=config.first_fit_size,
        shadow_eval_size=config.shadow_eval_size,
        score_window=config.score_window,
        seed=config.seed,
        cache_cap=config.cache_cap,
        shadow_metric=config.shadow_metric,
    )
    return HybridEnsemble(schema, ensemble_config)


@dataclass
class RunResult:
    final_f1: float
    trace: list[tuple[int, float, float]]
    events: list
    drift_count: int
    replacement_count: int
    n_instances: int


def run_stream(
    ensemble: HybridEnsemble,
    instances: Iterable[Instance],
    trace_every: int = 1000,
) -> RunResult:
    """Drive the ensemble over a stream, collecting prequential metrics."""
    metrics = PrequentialState(ensemble.schema.n_classes, window_size=trace_every)
    trace: list[tuple[int, float, float]] = []
    events: list = []
    n = 0
    for inst in instances:
        step = ensemble.process_instance(inst)
        metrics.update(inst.y, step.final_label)
        events.extend(step.events)
        n += 1
        if n % trace_every == 0:
            trace.append((n, float(metrics.windowed_f1()), float(metrics.cumulative_f1())))
    if n == 0:
        raise ConfigError("stream produced no instances")
    return RunResult(
        final_f1=metrics.cumulative_f1(),
        trace=trace,
        events=events,
        drift_count=ensemble.drift_count,
        replacement_count=ensemble.replacement_count,
        n_instances=n,
    )


def _open_stream(config: ExperimentConfig) -> tuple[Schema, Iterator[Instance]]:
    if config.stream_path is not None:
        return stream_schema(config.stream_path), replay(config.stream_path)
    return synthetic_instances(config.synth)


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
    """Execute one configured experiment end to end.

    The method section is validated before any stream processing, so a bad
    strategy or algorithm name fails fast.
    """
    start = time.perf_counter()
    build_member_specs(config.method)
    schema, instances = _open_stream(config)
    ensemble = build_ensemble(schema, config)
    result = run_stream(ensemble, instances, trace_every=config.trace_every)
    wall = time.perf_counter() - start
    report = RunReport(
        run_id=f"{config.method_id}__{config.stream_id}__seed{config.seed}",
        stream_id=config.stream_id,
        method_id=config.method_id,
        final_f1_macro=result.final_f1,
        trace=result.trace,
        drift_count=result.drift_count,
        replacement_count=result.replacement_count,
        seed=config.seed,
        config_digest=config.digest(),
        n_instances=result.n_instances,
        wall_time_s=wall,
    )
    if out_dir is not None:
        write_run_artifacts(Path(out_dir), report, result.events)
    return report


def write_run_artifacts(out_dir: Path, report: RunReport, events: list) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n")
    with (out_dir / "trace.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seq", "windowed_f1", "cumulative_f1"])
        for seq, windowed, cumulative in report.trace:
            writer.writerow([seq, repr(windowed), repr(cumulative)])
    with (out_dir / "events.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seq", "member", "event", "source", "score"])
        for event in events:
            if isinstance(event, DriftEvent):
                source = ";".join(t.source for t in event.triggers)
                score = repr(max(t.drift_score for t in event.triggers))
                writer.writerow([event.seq, event.member_id, "drift", source, score])
            elif isinstance(event, ReplacementEvent):
                writer.writerow([event.seq, event.member_id, "replace", "", ""])
    (out_dir / "timing.json").write_text(json.dumps({"wall_time_s": report.wall_time_s}) + "\n")


def read_run_dir(run_dir: Path) -> RunReport:
    data = json.loads((run_dir / "report.json").read_text())
    trace = []
    trace_path = run_dir / "trace.csv"
    if trace_path.exists():
        with trace_path.open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            for row in reader:
                trace.append((int(row[0]), float(row[1]), float(row[2])))
    return RunReport.from_json_dict(data, trace=trace)
