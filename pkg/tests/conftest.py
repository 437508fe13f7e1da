"""Shared test fixtures: fabricated run records and the worked linear model."""

import numpy as np

from boundarywalk.attack import AttackResult
from boundarywalk.harness import ExperimentSpec, RunRecord
from boundarywalk.models import Model


def record(sample_id, distance, rep=0, hyper=1e-2, trace=None):
    """Fabricate one run record; distance=inf means a failed run."""
    success = np.isfinite(distance)
    if trace is None:
        trace = [(1, float(distance))] if success else []
    result = AttackResult(
        success=success,
        adversarial=np.zeros(2) if success else None,
        distance=float(distance),
        queries_used=max((q for q, _ in trace), default=1),
        trace=trace,
        start_queries=1,
    )
    return RunRecord(sample_id=sample_id, rep=rep, hyperparameter=hyper, result=result)


def linear_model(w, offset):
    """Two-class model whose margin is exactly w.x + offset."""
    w = np.asarray(w, dtype=np.float64)
    return Model(
        weights=[np.stack([w, -w]) / 2.0],
        biases=[np.array([offset, -offset]) / 2.0],
        activation="identity",
    )


def linear_spec(**overrides):
    base = dict(
        model_path="unused",
        dataset="unused",
        attack="ours-L2",
        samples=2,
        grid=(1e-2,),
        seed=1,
        query_budget=60,
    )
    base.update(overrides)
    return ExperimentSpec(**base)
