#!/usr/bin/env python3
"""Walk a linear classifier and compare against closed-form minima.

A two-class linear model is the one setting where the minimal adversarial
perturbation has a pencil-and-paper answer: the distance from x to the
hyperplane w . z + offset = 0 measured in the dual norm, and for L0 the
smallest set of coordinates that crosses it when pushed to the box edges.
This script runs the boundary walk for every norm, prints the ratio to the
exact optimum and the number of model queries spent, and exits nonzero if
any ratio strays outside [0.99, 1.01).

Usage:
    python scripts/linear_demo.py
    python scripts/linear_demo.py --trust-radius 0.02 --max-steps 60
"""

import argparse
import sys

import numpy as np

from boundarywalk.attack import AttackConfig, run_attack
from boundarywalk.core import NormKind
from boundarywalk.criterion import Criterion
from boundarywalk.models import Dataset, Model
from boundarywalk.oracle import l0_minimal_linear, linear_minimal_distance

W = np.array([3.0, 4.0])
OFFSET = -2.0
X = np.array([0.5, 0.45])

# one pool sample on the far side of the hyperplane so the walk has a start
POOL = Dataset(samples=np.array([[0.0, 0.1]]), labels=np.array([1]))


def linear_model() -> Model:
    """Two logits (f, -f) so the decision boundary is exactly f = 0."""
    return Model(
        weights=[np.stack([W, -W]) / 2.0],
        biases=[np.array([OFFSET, -OFFSET]) / 2.0],
        activation="tanh",
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trust-radius", type=float, default=0.01)
    parser.add_argument("--max-steps", type=int, default=38)
    parser.add_argument("--l0-trust-radius", type=float, default=0.2)
    args = parser.parse_args(argv)

    model = linear_model()
    crit = Criterion(original_label=0)
    failures = 0

    print(f"x = {X}, boundary w.z + offset = 0 with w = {W}, offset = {OFFSET}")
    print(f"{'norm':>6} {'walk':>10} {'exact':>10} {'ratio':>8} {'queries':>8}")
    for norm in (NormKind.L1, NormKind.L2, NormKind.LINF):
        exact = linear_minimal_distance(-W, -OFFSET, X, norm)
        config = AttackConfig(norm=norm, trust_radius=args.trust_radius,
                              max_steps=args.max_steps)
        result = run_attack(model, X, crit, config, pool=POOL)
        ratio = result.distance / exact
        if not (result.success and 0.99 <= ratio < 1.01):
            failures += 1
        print(f"{norm.value:>6} {result.distance:>10.6f} {exact:>10.6f} "
              f"{ratio:>8.4f} {result.queries_used:>8}")

    config = AttackConfig(norm=NormKind.L0, trust_radius=args.l0_trust_radius,
                          max_steps=args.max_steps)
    sparse = run_attack(model, X, crit, config, pool=POOL)
    changed = int(round(sparse.distance * X.size))
    reference = l0_minimal_linear(-W, -OFFSET, X)
    if not (sparse.success and changed == reference):
        failures += 1
    print(f"{'l0':>6} {changed:>10d} {reference:>10d} {'':>8} "
          f"{sparse.queries_used:>8}")

    if failures:
        print(f"{failures} norm(s) missed the exact optimum", file=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
