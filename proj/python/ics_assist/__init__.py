"""Python bindings for the ICS-Assist C++ core.

Commands mirror the ``ics`` tool: each takes a config dict (the same schema
as the tool's JSON config files) and returns the JSON report as a dict.
Relative paths in a config resolve against ``base_dir``.
"""

import json
import os

from . import _ics
from ._ics import (
    ConfigError,
    DataError,
    IcsError,
    NotFoundError,
    ValidationError,
    panel_loss,
    predict_student,
    tokenize,
)

__all__ = [
    "ConfigError",
    "DataError",
    "IcsError",
    "NotFoundError",
    "ValidationError",
    "Service",
    "bench_latency",
    "classification_report",
    "distill",
    "evaluate",
    "gen_synthetic",
    "panel_loss",
    "predict_student",
    "prepare_data",
    "replay_evaluate",
    "tokenize",
    "train_embeddings",
    "train_hybrid",
    "train_teacher",
]


def _command(name):
    fn = getattr(_ics, name)

    def call(config, base_dir="."):
        return json.loads(fn(json.dumps(config), os.fspath(base_dir)))

    call.__name__ = name
    call.__doc__ = f"Run the ``{name.replace('_', '-')}`` command; returns its report."
    return call


gen_synthetic = _command("gen_synthetic")
prepare_data = _command("prepare_data")
train_embeddings = _command("train_embeddings")
train_teacher = _command("train_teacher")
distill = _command("distill")
train_hybrid = _command("train_hybrid")
evaluate = _command("evaluate")
bench_latency = _command("bench_latency")


def replay_evaluate(service_config, replay, base_dir=".", k=0):
    return json.loads(
        _ics.replay_evaluate(json.dumps(service_config), os.fspath(base_dir), os.fspath(replay), k)
    )


def classification_report(scores, labels, threshold=0.5):
    return json.loads(_ics.classification_report(list(scores), list(labels), threshold))


class Service:
    """In-process recommendation service loaded from a service config file."""

    def __init__(self, config_path):
        self._svc = _ics.Service(os.fspath(config_path))

    def open(self, aspects=None):
        return self._svc.open(json.dumps(aspects))

    def recommend(self, session_id, text):
        return json.loads(self._svc.recommend(session_id, text))

    def feedback(self, session_id, turn, outcome, scenario_id=""):
        self._svc.feedback(session_id, turn, outcome, scenario_id)

    def close(self, session_id, resolved):
        self._svc.close(session_id, resolved)

    def metrics(self):
        return json.loads(self._svc.metrics())

    def catalog(self):
        return json.loads(self._svc.catalog())
