"""Probability calibration: Platt scaling, isotonic regression, metrics and a benchmark harness."""

import json as _json

from ._core import (
    CalibenchError,
    IsotonicMap,
    PlattMap,
    auc,
    bonferroni_threshold,
    brier,
    ece,
    fit_isotonic,
    fit_platt,
    generate_synthetic,
    log_loss,
    mce,
    shapiro_wilk,
)
from . import _core

__all__ = [
    "CalibenchError",
    "IsotonicMap",
    "PlattMap",
    "auc",
    "benchmark",
    "bonferroni_threshold",
    "brier",
    "convergence",
    "ece",
    "evaluate",
    "fit_isotonic",
    "fit_platt",
    "generate_synthetic",
    "log_loss",
    "mce",
    "paired_t_test",
    "pipeline",
    "shapiro_wilk",
]


def evaluate(probs, labels, bins=10, hl_groups=10):
    """All metrics for one prediction set, as a dict."""
    return _json.loads(_core.evaluate_json(list(probs), list(labels), bins, hl_groups))


def paired_t_test(a, b):
    return _json.loads(_core.paired_t_test_json(list(a), list(b)))


def convergence(ground_truth="identity", sizes=(100, 1000, 10000, 100000), trials=20, seed=0, eval_size=10000):
    return _json.loads(_core.convergence_json(ground_truth, list(sizes), trials, seed, eval_size))


def pipeline(features, labels, model="logreg", seed=42):
    """Single-split calibration with automatic method selection."""
    return _json.loads(_core.pipeline_json(features, list(labels), model, seed))


def benchmark(config):
    """Repeated cross-validation; config is a dict in the experiment-config JSON format."""
    return _json.loads(_core.benchmark_json(_json.dumps(config)))
