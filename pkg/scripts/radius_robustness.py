#!/usr/bin/env python3
"""Sweep the trust radius over decades and report walk sensitivity.

The walk has one real hyperparameter, the trust radius bounding each step.
This script attacks a handful of digits with the L2 walk across the default
radius grid (3e-4 through 3e-1), prints the median minimal perturbation per
radius, and then the sensitivity report: how much the result degrades when
a single radius or a single repetition is used instead of the whole grid.
Small degradations across decades mean the radius barely needs tuning.

Expects the files produced by scripts/build_digits_idx.py:
    python scripts/build_digits_idx.py --out-dir runs/digits
    python scripts/radius_robustness.py --data-dir runs/digits
"""

import argparse
import time
from pathlib import Path

from boundarywalk.harness import (
    DEFAULT_GRID,
    ExperimentSpec,
    median_perturbation,
    run_experiment,
    sensitivity_report,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", type=Path, default=Path("runs/digits"))
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="also write the sweep CSV and traces here")
    parser.add_argument("--samples", type=int, default=25)
    parser.add_argument("--repetitions", type=int, default=2)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    source = (f"mnist-idx:{args.data_dir / 'digits-heldout-images.idx'},"
              f"{args.data_dir / 'digits-heldout-labels.idx'}")
    spec = ExperimentSpec(
        model_path=str(args.data_dir / "digits-mlp.json"), dataset=source,
        attack="ours-L2", samples=args.samples, repetitions=args.repetitions,
        grid=DEFAULT_GRID, seed=args.seed, query_budget=args.budget)

    start = time.time()
    records = run_experiment(spec, out_dir=args.out_dir)
    print(f"{len(records)} runs in {time.time() - start:.0f}s")

    print(f"{'radius':>10} {'median L2':>12}")
    for h in spec.grid:
        subset = [rec for rec in records if rec.hyperparameter == h]
        print(f"{h:>10g} {median_perturbation(subset):>12.6f}")

    report = sensitivity_report(records)
    print(f"\n{'radius':>10} {'degradation':>12}")
    for h, deg in sorted(report["by_hyperparameter"].items()):
        print(f"{h:>10g} {deg:>11.1%}")
    print(f"single repetition: {report['single_repetition']:.1%}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
