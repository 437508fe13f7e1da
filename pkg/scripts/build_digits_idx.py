#!/usr/bin/env python3
"""Package the scikit-learn digits set as IDX files and train a model on it.

The harness reads image datasets through the IDX container format
(mnist-idx:<images>,<labels> sources). This script converts the bundled
8x8 digits from scikit-learn into that format, quantizing pixel values to
the 256 levels the container stores, then fits a small MLP on the first
part and reports held-out accuracy. The outputs are everything
scripts/digits_experiment.py and the sweep CLI need.

Usage:
    python scripts/build_digits_idx.py --out-dir runs/digits
"""

import argparse
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

from boundarywalk.harness import parse_dataset_source
from boundarywalk.models import Dataset, accuracy, save_model, train_mlp, write_idx


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("runs/digits"))
    parser.add_argument("--train-count", type=int, default=1000)
    parser.add_argument("--hidden", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--lr", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    raw = load_digits()
    images = raw.data / 16.0
    labels = raw.target.astype(np.int64)
    images_path = args.out_dir / "digits-images.idx"
    labels_path = args.out_dir / "digits-labels.idx"
    write_idx(images, labels, images_path, labels_path, rows=8, cols=8)

    # reload through the same path the harness uses so training sees the
    # quantized pixels, not the raw floats
    data = parse_dataset_source(f"mnist-idx:{images_path},{labels_path}")
    train = Dataset(samples=data.samples[:args.train_count],
                    labels=data.labels[:args.train_count], bounds=data.bounds)
    heldout = Dataset(samples=data.samples[args.train_count:],
                      labels=data.labels[args.train_count:], bounds=data.bounds)

    # a separate heldout pair so sweeps can attack unseen samples by source
    # string alone
    heldout_images = args.out_dir / "digits-heldout-images.idx"
    heldout_labels = args.out_dir / "digits-heldout-labels.idx"
    write_idx(heldout.samples, heldout.labels, heldout_images, heldout_labels,
              rows=8, cols=8)

    model = train_mlp(train, hidden_sizes=(args.hidden,), epochs=args.epochs,
                      learning_rate=args.lr, seed=args.seed)
    model_path = args.out_dir / "digits-mlp.json"
    save_model(model, model_path)

    print(f"wrote {images_path} and {labels_path} ({len(data.labels)} samples)")
    print(f"wrote {heldout_images} and {heldout_labels} ({len(heldout)} samples)")
    print(f"wrote {model_path} "
          f"(train acc {accuracy(model, train):.4f}, "
          f"heldout acc {accuracy(model, heldout):.4f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
