#!/usr/bin/env python3
"""Compare the Linf boundary walk against PGD on the digits task.

Runs the walk over heldout digits, takes the median of its per-sample
minimal perturbations as the budget epsilon, then runs PGD at that epsilon
over a small stepsize grid and reports classifier accuracy under both
attacks (lower is a stronger attack). Sweep outputs land in --out-dir so
the curve CLI subcommand can read them afterwards, e.g.
boundarywalk curve --results <out>/sweep-ours --budgets 20,40,60,80,100.

Expects the files produced by scripts/build_digits_idx.py:
    python scripts/build_digits_idx.py --out-dir runs/digits
    python scripts/digits_experiment.py --data-dir runs/digits
"""

import argparse
import time
from pathlib import Path

import numpy as np

from boundarywalk.harness import (
    ExperimentSpec,
    median_perturbation,
    run_experiment,
    success_rate_at_eps,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", type=Path, default=Path("runs/digits"))
    parser.add_argument("--out-dir", type=Path, default=Path("runs/digits"))
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--repetitions", type=int, default=2)
    parser.add_argument("--trust-radius", type=float, default=3e-2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    model_path = args.data_dir / "digits-mlp.json"
    source = (f"mnist-idx:{args.data_dir / 'digits-heldout-images.idx'},"
              f"{args.data_dir / 'digits-heldout-labels.idx'}")

    ours_spec = ExperimentSpec(
        model_path=str(model_path), dataset=source, attack="ours-Linf",
        samples=args.samples, repetitions=args.repetitions,
        grid=(args.trust_radius,), seed=args.seed, query_budget=args.budget)
    start = time.time()
    ours = run_experiment(ours_spec, out_dir=args.out_dir / "sweep-ours")
    eps = median_perturbation(ours)
    print(f"walk done in {time.time() - start:.0f}s, "
          f"median minimal perturbation eps = {eps:.6f}")

    pgd_spec = ExperimentSpec(
        model_path=str(model_path), dataset=source, attack="pgd",
        samples=args.samples, repetitions=args.repetitions,
        grid=(eps / 4, eps / 10, eps / 40), epsilon=eps, seed=args.seed,
        query_budget=args.budget)
    start = time.time()
    pgd = run_experiment(pgd_spec, out_dir=args.out_dir / "sweep-pgd")
    print(f"pgd done in {time.time() - start:.0f}s")

    # PGD projects onto the eps ball exactly, so scoring at eps itself would
    # let float roundoff flip successes; nudge up by one representable step
    eps_eval = np.nextafter(eps, np.inf)
    acc_ours = 1.0 - success_rate_at_eps(ours, eps_eval)
    acc_pgd = 1.0 - success_rate_at_eps(pgd, eps_eval)
    print(f"accuracy at eps under walk: {acc_ours:.4f}")
    print(f"accuracy at eps under pgd:  {acc_pgd:.4f}")
    print("walk is the stronger attack" if acc_ours <= acc_pgd
          else "pgd is the stronger attack")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
