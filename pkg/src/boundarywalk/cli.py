"""Command-line interface.

Subcommands: train (fit a small test model), attack (one attack run),
sweep (full experiment grid from a spec file), curve (query-distortion
readout of a sweep), verify (randomized solver-vs-oracle suite), and
sensitivity (hyperparameter robustness table of a sweep).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .attack import AttackResult
from .core import BoxBounds, NormKind, TrustRegionProblem
from .harness import (
    ATTACK_KINDS,
    CRITERION_MODES,
    DEFAULT_GRID,
    ExperimentSpec,
    _make_criterion,
    _run_single,
    load_records,
    parse_dataset_source,
    query_distortion_curve,
    run_experiment,
    select_samples,
    sensitivity_report,
    summarize,
)
from .models import accuracy, load_model, save_model, train_mlp
from .oracle import GridSpec, grid_solve
from .trust_region import solve

SPEC_KEYS = {
    "model": "model_path",
    "dataset": "dataset",
    "attack": "attack",
    "criterion": "criterion_mode",
    "samples": "samples",
    "repetitions": "repetitions",
    "grid": "grid",
    "epsilon": "epsilon",
    "seed": "seed",
    "budget": "query_budget",
}


def _parse_grid(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def parse_spec_file(path) -> dict:
    """Read a key = value experiment description; # starts a comment."""
    fields = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in SPEC_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        fields[key] = value
    return fields


def _build_spec(fields: dict) -> ExperimentSpec:
    kwargs = {}
    for key, value in fields.items():
        name = SPEC_KEYS[key]
        if key in ("samples", "repetitions", "seed", "budget"):
            kwargs[name] = int(value)
        elif key == "epsilon":
            kwargs[name] = float(value)
        elif key == "grid":
            kwargs[name] = _parse_grid(value) if isinstance(value, str) else tuple(value)
        else:
            kwargs[name] = value
    return ExperimentSpec(**kwargs)


def _cmd_train(args) -> int:
    data = parse_dataset_source(args.dataset, args.seed)
    hidden = tuple(int(h) for h in args.hidden.split(",") if h.strip())
    model = train_mlp(
        data,
        hidden_sizes=hidden,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        activation=args.activation,
    )
    save_model(model, args.out)
    print(f"saved {args.out}: train accuracy {accuracy(model, data):.4f}")
    return 0


def _print_result(result: AttackResult) -> None:
    print(f"success: {result.success}")
    print(f"distance: {result.distance!r}")
    print(f"queries: {result.queries_used} (+{result.start_queries} scanning for a start)")
    for queries, dist in result.trace[-5:]:
        print(f"  improved at query {queries}: {dist!r}")


def _cmd_attack(args) -> int:
    model = load_model(args.model)
    data = parse_dataset_source(args.dataset, args.seed)
    spec = ExperimentSpec(
        model_path=args.model,
        dataset=args.dataset,
        attack=args.attack,
        samples=1,
        criterion_mode=args.criterion,
        grid=(args.hyper,),
        epsilon=args.epsilon,
        seed=args.seed,
        query_budget=args.budget,
    )
    sid = args.sample if args.sample is not None else select_samples(model, data, 1)[0]
    crit = _make_criterion(int(data.labels[sid]), spec.criterion_mode, model.num_classes)
    result = _run_single(model, data.samples[sid], crit, spec, args.hyper, args.seed, data)
    print(f"sample {sid}, attack {spec.attack}, hyperparameter {args.hyper!r}")
    _print_result(result)
    return 0


def _cmd_sweep(args) -> int:
    fields = parse_spec_file(args.spec) if args.spec else {}
    for key in SPEC_KEYS:
        override = getattr(args, key.replace("-", "_"), None)
        if override is not None:
            fields[key] = override
    if "seed" not in fields:
        print("sweep requires a seed (spec file key or --seed)", file=sys.stderr)
        return 2
    spec = _build_spec(fields)
    records = run_experiment(spec, out_dir=args.out)
    print(summarize(spec, records))
    print(f"wrote {Path(args.out) / 'results.csv'} and traces.json")
    return 0


def _cmd_curve(args) -> int:
    spec, records = load_records(args.results)
    budgets = [int(b) for b in args.budgets.split(",") if b.strip()]
    epsilon = args.epsilon if args.epsilon is not None else spec.epsilon
    curve = query_distortion_curve(records, budgets, metric=args.metric, epsilon=epsilon)
    lines = ["budget,value"] + [f"{b},{v!r}" for b, v in curve]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        xs = [b for b, _ in curve]
        ys = [v for _, v in curve]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(xs, ys, marker="o")
        ax.set_xlabel("query budget")
        ax.set_ylabel("accuracy at eps" if args.metric == "accuracy" else "median distance")
        ax.set_title(f"{spec.attack} ({spec.norm.value})")
        fig.tight_layout()
        fig.savefig(args.plot)
        plt.close(fig)
        print(f"wrote {args.plot}")
    return 0


def _verify_instances(rng: np.random.Generator, norm: NormKind, count: int, max_dim: int):
    for _ in range(count):
        n = int(rng.integers(1, max_dim + 1))
        x = rng.uniform(0.0, 1.0, n)
        x_tilde = rng.uniform(0.0, 1.0, n)
        b = rng.normal(size=n)
        while float(np.linalg.norm(b)) < 1e-3:
            b = rng.normal(size=n)
        r = float(rng.uniform(0.05, 1.0))
        lo = float(np.sum(np.minimum(b * (0.0 - x_tilde), b * (1.0 - x_tilde))))
        hi = float(np.sum(np.maximum(b * (0.0 - x_tilde), b * (1.0 - x_tilde))))
        c = 0.6 * float(rng.uniform(lo, hi))
        yield TrustRegionProblem(x=x, x_tilde=x_tilde, b=b, c=c, r=r, bounds=BoxBounds(), norm=norm)


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    norms = [NormKind(v) for v in args.norms.split(",")] if args.norms else list(NormKind)
    failures = 0
    for norm in norms:
        gaps = []
        for problem in _verify_instances(rng, norm, args.instances, args.max_dim):
            sol = solve(problem)
            if not sol.feasible:
                continue
            h = args.resolution
            slack = 2.0 * problem.n * h * np.sqrt(problem.r) if norm is NormKind.L0 else 0.0
            oracle = grid_solve(problem, GridSpec(resolution=h, ball_slack=slack))
            if norm is NormKind.L0:
                gaps.append(round(sol.objective * problem.n) - round(oracle.objective * problem.n))
            else:
                gaps.append(sol.objective - oracle.objective)
        if norm is NormKind.L0:
            # counting gaps may exceed +1 on a small fraction (duality gap)
            # but must never fall below the oracle
            within = sum(1 for g in gaps if g <= 1)
            ok = all(g >= 0 for g in gaps) and within >= 0.9 * len(gaps)
            detail = f"{within}/{len(gaps)} within +1 component, min gap {min(gaps, default=0)}"
        else:
            bad = sum(1 for g in gaps if g > 1e-3 * 1.0)
            ok = bad == 0
            detail = f"worst gap {max(gaps, default=0.0)!r}, {bad} outside tolerance"
        if not ok:
            failures += 1
        print(f"{'PASS' if ok else 'FAIL'} {norm.value}: {len(gaps)} feasible instances, {detail}")
    return 1 if failures else 0


def _cmd_sensitivity(args) -> int:
    _, records = load_records(args.results)
    report = sensitivity_report(records)
    print("hyperparameter  degradation")
    for hyper, deg in sorted(report["by_hyperparameter"].items()):
        print(f"{hyper!r:>14}  {deg * 100.0:+.1f}%")
    print(f"single repetition: {report['single_repetition'] * 100.0:+.1f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boundarywalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a small MLP and save it")
    p_train.add_argument("--dataset", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--hidden", default="16")
    p_train.add_argument("--epochs", type=int, default=20)
    p_train.add_argument("--lr", type=float, default=0.1)
    p_train.add_argument("--activation", default="tanh")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(func=_cmd_train)

    p_attack = sub.add_parser("attack", help="run one attack on one sample")
    p_attack.add_argument("--model", required=True)
    p_attack.add_argument("--dataset", required=True)
    p_attack.add_argument("--attack", required=True, choices=ATTACK_KINDS)
    p_attack.add_argument("--hyper", type=float, required=True,
                          help="trust radius for ours-*, stepsize for pgd")
    p_attack.add_argument("--sample", type=int, default=None)
    p_attack.add_argument("--criterion", default="untargeted", choices=CRITERION_MODES)
    p_attack.add_argument("--epsilon", type=float, default=None)
    p_attack.add_argument("--budget", type=int, default=150)
    p_attack.add_argument("--seed", type=int, default=0)
    p_attack.set_defaults(func=_cmd_attack)

    p_sweep = sub.add_parser("sweep", help="run a full experiment grid")
    p_sweep.add_argument("--spec", default=None, help="key = value experiment file")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--model", dest="model")
    p_sweep.add_argument("--dataset", dest="dataset")
    p_sweep.add_argument("--attack", dest="attack", choices=ATTACK_KINDS)
    p_sweep.add_argument("--criterion", dest="criterion", choices=CRITERION_MODES)
    p_sweep.add_argument("--samples", dest="samples", type=int)
    p_sweep.add_argument("--repetitions", dest="repetitions", type=int)
    p_sweep.add_argument("--grid", dest="grid")
    p_sweep.add_argument("--epsilon", dest="epsilon", type=float)
    p_sweep.add_argument("--seed", dest="seed", type=int)
    p_sweep.add_argument("--budget", dest="budget", type=int)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_curve = sub.add_parser("curve", help="query-distortion curve of a sweep")
    p_curve.add_argument("--results", required=True, help="sweep output directory")
    p_curve.add_argument("--budgets", required=True, help="comma-separated query budgets")
    p_curve.add_argument("--metric", default="median", choices=("median", "accuracy"))
    p_curve.add_argument("--epsilon", type=float, default=None)
    p_curve.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p_curve.add_argument("--plot", default=None, help="write an SVG plot here")
    p_curve.set_defaults(func=_cmd_curve)

    p_verify = sub.add_parser("verify", help="randomized solver-vs-oracle checks")
    p_verify.add_argument("--instances", type=int, default=25)
    p_verify.add_argument("--norms", default=None, help="comma-separated subset of l0,l1,l2,linf")
    p_verify.add_argument("--max-dim", type=int, default=3)
    p_verify.add_argument("--resolution", type=float, default=2e-3)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=_cmd_verify)

    p_sens = sub.add_parser("sensitivity", help="hyperparameter robustness of a sweep")
    p_sens.add_argument("--results", required=True, help="sweep output directory")
    p_sens.set_defaults(func=_cmd_sensitivity)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
