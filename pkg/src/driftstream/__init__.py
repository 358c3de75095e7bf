"""Drift-aware stream classification toolkit.

Hybrid ensembles of batch and online learners: statistical drift monitoring
over adjacent instance windows, drift-gated shadow retraining of batch
members, and weighted-voting or dynamic-switching prediction combination,
evaluated prequentially (test-then-train).
"""

from .core import (
    ConfigError,
    DataError,
    FeatureKind,
    Instance,
    MetricError,
    Prediction,
    Schema,
    SchemaError,
    ToolkitError,
)
from .drift import DriftStrategy, DriftVerdict, Trigger, WindowPair, check_windows, select_test, strategy_catalog
from .ensemble import (
    EnsembleConfig,
    HybridEnsemble,
    MemberSpec,
    StepResult,
    combine_votes,
    compute_weights,
)
from .evaluation import ConfusionMatrix, PrequentialState, RankedMethod, RunReport, f1_macro, ranking
from .experiment import (
    ExperimentConfig,
    load_config,
    parse_config,
    run_experiment,
    run_stream,
)
from .ingest import IngestConfig, SynthConfig, generate_synthetic, preprocess_csv, replay, stream_schema

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConfusionMatrix",
    "DataError",
    "DriftStrategy",
    "DriftVerdict",
    "EnsembleConfig",
    "ExperimentConfig",
    "FeatureKind",
    "HybridEnsemble",
    "IngestConfig",
    "Instance",
    "MemberSpec",
    "MetricError",
    "Prediction",
    "PrequentialState",
    "RankedMethod",
    "RunReport",
    "Schema",
    "SchemaError",
    "StepResult",
    "SynthConfig",
    "ToolkitError",
    "Trigger",
    "WindowPair",
    "check_windows",
    "combine_votes",
    "compute_weights",
    "f1_macro",
    "generate_synthetic",
    "load_config",
    "parse_config",
    "preprocess_csv",
    "ranking",
    "replay",
    "run_experiment",
    "run_stream",
    "select_test",
    "strategy_catalog",
    "stream_schema",
    "__version__",
]
