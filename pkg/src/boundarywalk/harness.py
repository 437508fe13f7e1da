"""Experiment orchestration and evaluation metrics.

Runs attacks over a (sample, repetition, hyperparameter) grid, aggregates
median perturbation sizes, success rates inside an L-inf ball, and
query-distortion curves, and serializes results as a CSV plus a JSON sidecar
carrying the full per-run traces.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attack import AttackConfig, AttackResult, run_adam_pgd, run_attack, run_pgd
from .core import BoxBounds, NormKind
from .criterion import Criterion
from .models import Dataset, Model, load_mnist_idx, load_model, make_blobs, predict

ATTACK_KINDS = ("ours-L0", "ours-L1", "ours-L2", "ours-Linf", "pgd", "adam-pgd")
CRITERION_MODES = ("untargeted", "targeted")

OURS_NORMS = {
    "ours-L0": NormKind.L0,
    "ours-L1": NormKind.L1,
    "ours-L2": NormKind.L2,
    "ours-Linf": NormKind.LINF,
}

# trust-radius grid for the boundary walk; PGD reuses it as stepsizes
DEFAULT_GRID = (3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1)

CSV_HEADER = "sample_id,rep,attack,norm,hyperparameter,success,distance,queries"

BINARY_SEARCH_STEPS = 10
# queries consumed before the walk starts: binary search plus its two
# endpoint checks
WALK_OVERHEAD = BINARY_SEARCH_STEPS + 2


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one sweep.

    dataset is either "synthetic[:key=value,...]" (make_blobs arguments) or
    "mnist-idx:<images_path>,<labels_path>". query_budget bounds the queries
    each single run may spend; the walk turns it into max_steps after the
    binary-search overhead, PGD into its iteration count.
    """

    model_path: str
    dataset: str
    attack: str
    samples: int
    criterion_mode: str = "untargeted"
    repetitions: int = 1
    grid: tuple[float, ...] = DEFAULT_GRID
    epsilon: float | None = None
    seed: int = 0
    query_budget: int = 150

    def __post_init__(self):
        if self.attack not in ATTACK_KINDS:
            raise ValueError(f"unknown attack {self.attack!r}, expected one of {ATTACK_KINDS}")
        if self.criterion_mode not in CRITERION_MODES:
            raise ValueError(f"unknown criterion mode {self.criterion_mode!r}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if len(self.grid) == 0:
            raise ValueError("hyperparameter grid must be nonempty")
        if any(not h > 0 for h in self.grid):
            raise ValueError("hyperparameter values must be positive")
        if self.query_budget < WALK_OVERHEAD + 1:
            raise ValueError(f"query_budget must be > {WALK_OVERHEAD}")
        if self.attack in ("pgd", "adam-pgd") and self.epsilon is None:
            raise ValueError("pgd attacks require epsilon")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def norm(self) -> NormKind:
        return OURS_NORMS.get(self.attack, NormKind.LINF)


@dataclass
class RunRecord:
    """One attack run: a (sample, repetition, hyperparameter) cell."""

    sample_id: int
    rep: int
    hyperparameter: float
    result: AttackResult


def _lower_median(values) -> float:
    ordered = sorted(values)
    if not ordered:
        raise ValueError("no values to take a median of")
    return float(ordered[(len(ordered) - 1) // 2])


def _per_sample_minima(records) -> dict[int, float]:
    best: dict[int, float] = {}
    for rec in records:
        d = rec.result.distance if rec.result.success else np.inf
        best[rec.sample_id] = min(best.get(rec.sample_id, np.inf), d)
    return best


def median_perturbation(records, norm: NormKind | None = None) -> float:
    """Lower median of the per-sample best distances.

    Per sample the minimum over repetitions and hyperparameters is taken;
    failed samples contribute +inf. Distances are read from the records and
    are measured in whatever norm the attack optimized (`norm` documents the
    caller's expectation and is not used to recompute anything).
    """
    if not records:
        raise ValueError("no records")
    return _lower_median(_per_sample_minima(records).values())


def success_rate_at_eps(records, epsilon: float) -> float:
    """Model accuracy under attack: the fraction of samples whose best
    distance stays strictly above epsilon. Smaller is a stronger attack."""
    if not records:
        raise ValueError("no records")
    minima = _per_sample_minima(records)
    survived = sum(1 for d in minima.values() if d > epsilon)
    return survived / len(minima)


def _best_within_budget(records_of_sample, budget: int) -> float:
    best = np.inf
    for rec in records_of_sample:
        for queries, dist in rec.result.trace:
            if queries <= budget and dist < best:
                best = dist
    return best


def query_distortion_curve(records, budgets, metric: str = "median", epsilon: float | None = None):
    """Best achievable metric as a function of query budget.

    For each budget the per-sample best distance over all runs restricted to
    trace points within the budget is aggregated, by lower median
    (metric="median") or by accuracy at epsilon (metric="accuracy"). The
    result is non-increasing in the budget because each prefix grows.
    """
    if metric not in ("median", "accuracy"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "accuracy" and epsilon is None:
        raise ValueError("accuracy metric requires epsilon")
    by_sample: dict[int, list] = {}
    for rec in records:
        by_sample.setdefault(rec.sample_id, []).append(rec)
    curve = []
    for budget in budgets:
        minima = [_best_within_budget(recs, budget) for recs in by_sample.values()]
        if metric == "median":
            value = _lower_median(minima) if minima else np.inf
        else:
            value = sum(1 for d in minima if d > epsilon) / max(1, len(minima))
        curve.append((int(budget), float(value)))
    return curve


def _degradation(restricted: float, full: float) -> float:
    if restricted == full:
        return 0.0
    return (restricted - full) / full


def sensitivity_report(records) -> dict:
    """Degradation of single-hyperparameter and single-repetition runs.

    Requires at least three hyperparameter values spanning two orders of
    magnitude. Reports, for each value, the relative increase of the median
    perturbation when only that value is used instead of the best over the
    grid, and the same for using only the first repetition.
    """
    hypers = sorted({rec.hyperparameter for rec in records})
    if len(hypers) < 3 or max(hypers) < 100.0 * min(hypers):
        raise ValueError("grid must have >= 3 values spanning >= 2 orders of magnitude")
    full = median_perturbation(records)
    by_hyper = {}
    for h in hypers:
        restricted = [rec for rec in records if rec.hyperparameter == h]
        by_hyper[h] = _degradation(median_perturbation(restricted), full)
    first_rep = min(rec.rep for rec in records)
    single = [rec for rec in records if rec.rep == first_rep]
    return {
        "by_hyperparameter": by_hyper,
        "single_repetition": _degradation(median_perturbation(single), full),
    }


def parse_dataset_source(source: str, seed: int = 0) -> Dataset:
    """Load the dataset named by an ExperimentSpec source string."""
    if source.startswith("mnist-idx:"):
        paths = source[len("mnist-idx:"):].split(",")
        if len(paths) != 2:
            raise ValueError("mnist-idx source needs <images_path>,<labels_path>")
        return load_mnist_idx(paths[0], paths[1])
    if source == "synthetic" or source.startswith("synthetic:"):
        kwargs = {"n_per_class": 100, "num_classes": 2, "dim": 2, "spread": 0.1, "seed": seed}
        if ":" in source:
            for item in source.split(":", 1)[1].split(","):
                key, _, value = item.partition("=")
                if key not in kwargs:
                    raise ValueError(f"unknown synthetic dataset key {key!r}")
                kwargs[key] = float(value) if key == "spread" else int(value)
        return make_blobs(**kwargs)
    raise ValueError(f"unknown dataset source {source!r}")


def _make_criterion(label: int, mode: str, num_classes: int) -> Criterion:
    if mode == "targeted":
        # fixed choice: next class cyclically; the spec of a sweep only
        # distinguishes targeted from untargeted
        return Criterion(original_label=label, target_label=(label + 1) % num_classes)
    return Criterion(original_label=label)


def _run_single(
    model: Model,
    x: np.ndarray,
    crit: Criterion,
    spec: ExperimentSpec,
    hyper: float,
    seed: int,
    pool: Dataset,
    rep: int = 0,
) -> AttackResult:
    bounds = pool.bounds
    if spec.attack in OURS_NORMS:
        config = AttackConfig(
            norm=OURS_NORMS[spec.attack],
            trust_radius=hyper,
            max_steps=spec.query_budget - WALK_OVERHEAD,
            binary_search_steps=BINARY_SEARCH_STEPS,
            seed=seed,
        )
        # restart protocol: the first repetition starts from the closest
        # adversarial pool sample, later ones from seeded uniform draws, so
        # repetitions explore different boundary basins
        start_pool = pool if rep == 0 else None
        return run_attack(model, x, crit, config, pool=start_pool, bounds=bounds)
    runner = run_pgd if spec.attack == "pgd" else run_adam_pgd
    return runner(
        model, x, crit, epsilon=spec.epsilon, stepsize=hyper,
        iterations=spec.query_budget - 1, seed=seed, bounds=bounds,
    )


def select_samples(model: Model, data: Dataset, count: int) -> list[int]:
    """Indices of the first `count` correctly classified samples."""
    picked = []
    for i in range(data.samples.shape[0]):
        if predict(model, data.samples[i]) == int(data.labels[i]):
            picked.append(i)
            if len(picked) == count:
                return picked
    raise ValueError(f"dataset has only {len(picked)} correctly classified samples, need {count}")


def run_experiment(spec: ExperimentSpec, out_dir=None, model: Model | None = None,
                   data: Dataset | None = None) -> list[RunRecord]:
    """Execute the full (sample, rep, hyperparameter) grid of a sweep.

    Deterministic for a fixed spec: each run draws its seed from a seed
    sequence keyed by (spec.seed, sample position, rep, hyper position).
    Repetitions act as restarts: the first starts each boundary walk from
    the dataset pool, later ones from seeded uniform draws.
    When out_dir is given the CSV and trace sidecar are written there. A
    preloaded model/dataset can be passed to skip file I/O.
    """
    model = model if model is not None else load_model(spec.model_path)
    data = data if data is not None else parse_dataset_source(spec.dataset, spec.seed)
    sample_ids = select_samples(model, data, spec.samples)
    records = []
    for i, sid in enumerate(sample_ids):
        x = data.samples[sid]
        crit = _make_criterion(int(data.labels[sid]), spec.criterion_mode, model.num_classes)
        for j in range(spec.repetitions):
            for k, hyper in enumerate(spec.grid):
                seed = int(np.random.SeedSequence([spec.seed, i, j, k]).generate_state(1)[0])
                result = _run_single(model, x, crit, spec, hyper, seed, data, rep=j)
                records.append(RunRecord(sample_id=sid, rep=j, hyperparameter=hyper, result=result))
    if out_dir is not None:
        write_records(out_dir, spec, records)
    return records


def summarize(spec: ExperimentSpec, records) -> str:
    lines = [
        f"attack={spec.attack} samples={spec.samples} reps={spec.repetitions} "
        f"grid={len(spec.grid)} runs={len(records)}",
        f"median perturbation ({spec.norm.value}): {median_perturbation(records)!r}",
    ]
    succeeded = sum(1 for r in records if r.result.success)
    lines.append(f"runs with an adversarial: {succeeded}/{len(records)}")
    if spec.epsilon is not None:
        lines.append(
            f"accuracy within eps={spec.epsilon!r}: {success_rate_at_eps(records, spec.epsilon)!r}"
        )
    return "\n".join(lines)


def _result_to_dict(result: AttackResult) -> dict:
    return {
        "success": bool(result.success),
        "distance": float(result.distance),
        "queries_used": int(result.queries_used),
        "start_queries": int(result.start_queries),
        "trace": [[int(q), float(d)] for q, d in result.trace],
        "adversarial": None if result.adversarial is None else [float(v) for v in result.adversarial],
    }


def _result_from_dict(payload: dict) -> AttackResult:
    adv = payload["adversarial"]
    return AttackResult(
        success=payload["success"],
        adversarial=None if adv is None else np.array(adv, dtype=float),
        distance=payload["distance"],
        queries_used=payload["queries_used"],
        trace=[(int(q), float(d)) for q, d in payload["trace"]],
        start_queries=payload["start_queries"],
    )


def write_records(out_dir, spec: ExperimentSpec, records) -> None:
    """Write results.csv and traces.json; both are byte-deterministic for a
    fixed spec because floats are serialized by repr and keys are sorted."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [CSV_HEADER]
    for rec in records:
        rows.append(
            f"{rec.sample_id},{rec.rep},{spec.attack},{spec.norm.value},"
            f"{rec.hyperparameter!r},{int(rec.result.success)},"
            f"{rec.result.distance!r},{rec.result.queries_used}"
        )
    (out / "results.csv").write_text("\n".join(rows) + "\n")
    payload = {
        "spec": dataclasses.asdict(spec),
        "records": [
            {
                "sample_id": rec.sample_id,
                "rep": rec.rep,
                "hyperparameter": rec.hyperparameter,
                "result": _result_to_dict(rec.result),
            }
            for rec in records
        ],
    }
    (out / "traces.json").write_text(json.dumps(payload, sort_keys=True) + "\n")


def load_records(out_dir) -> tuple[ExperimentSpec, list[RunRecord]]:
    """Inverse of write_records, reading the JSON sidecar."""
    payload = json.loads((Path(out_dir) / "traces.json").read_text())
    raw_spec = payload["spec"]
    raw_spec["grid"] = tuple(raw_spec["grid"])
    spec = ExperimentSpec(**raw_spec)
    records = [
        RunRecord(
            sample_id=int(item["sample_id"]),
            rep=int(item["rep"]),
            hyperparameter=float(item["hyperparameter"]),
            result=_result_from_dict(item["result"]),
        )
        for item in payload["records"]
    ]
    return spec, records
