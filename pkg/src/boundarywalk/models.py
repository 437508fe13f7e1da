"""Self-contained differentiable classifiers with exact gradients.

Small fully-connected models (linear or MLP) over flat inputs, a plain SGD
trainer for building test models, synthetic dataset generators, and IDX file
ingestion. Everything is numpy; forward and gradient passes are exact.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import BoxBounds, DimensionMismatchError, as_vector, project_box

logger = logging.getLogger(__name__)

ACTIVATIONS = ("identity", "relu", "tanh")

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

WEIGHT_FILE_VERSION = 1


class IdxFormatError(ValueError):
    """IDX file is malformed: bad magic, truncated data, or count mismatch."""


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_deriv(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(z)
    if name == "relu":
        # subgradient 0 at the kink
        return np.where(z > 0.0, 1.0, 0.0)
    t = np.tanh(z)
    return 1.0 - t * t


@dataclass
class Model:
    """Fully-connected classifier: weights[i] is (out, in), activation applied
    between layers, final layer emits logits."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need matching non-empty weight and bias lists")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64).ravel() for b in self.biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or w.shape[0] != b.size:
                raise ValueError(f"layer {i}: weight {w.shape} does not match bias {b.shape}")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input size {w.shape[1]} does not chain")
        if self.num_classes < 2:
            raise ValueError("final layer must emit at least 2 logits")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[0]


def forward(model: Model, x) -> np.ndarray:
    """Logits for a single input."""
    a = as_vector(x)
    if a.size != model.input_dim:
        raise DimensionMismatchError(f"input length {a.size} != model input {model.input_dim}")
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = w @ a + b
        a = z if i == last else _act(model.activation, z)
    return a


def grad_scalar(model: Model, x, coeffs) -> tuple[float, np.ndarray]:
    """Value and exact input-gradient of the scalar coeffs . logits.

    One reverse pass through the stored pre-activations; ReLU uses
    subgradient 0 at its kink.
    """
    a = as_vector(x)
    coeffs = as_vector(coeffs)
    if a.size != model.input_dim:
        raise DimensionMismatchError(f"input length {a.size} != model input {model.input_dim}")
    if coeffs.size != model.num_classes:
        raise DimensionMismatchError(f"coeffs length {coeffs.size} != classes {model.num_classes}")

    last = len(model.weights) - 1
    pre = []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = w @ a + b
        pre.append(z)
        a = z if i == last else _act(model.activation, z)
    value = float(coeffs @ a)

    g = coeffs
    for i in range(last, -1, -1):
        if i != last:
            g = g * _act_deriv(model.activation, pre[i])
        g = model.weights[i].T @ g
    return value, g


def _logits_batch(model: Model, xs: np.ndarray) -> np.ndarray:
    a = xs
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        a = z if i == last else _act(model.activation, z)
    return a


def predict(model: Model, xs: np.ndarray) -> np.ndarray:
    """Argmax class per row of xs."""
    return np.argmax(_logits_batch(model, np.atleast_2d(xs)), axis=1)


@dataclass
class Dataset:
    """Samples (N, n) in box bounds with integer class labels (N,)."""

    samples: np.ndarray
    labels: np.ndarray
    bounds: BoxBounds = field(default_factory=BoxBounds)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.samples.ndim != 2 or self.samples.shape[0] != self.labels.size:
            raise ValueError("samples and labels must have matching first dimension")

    def __len__(self) -> int:
        return self.labels.size


def accuracy(model: Model, data: Dataset) -> float:
    return float(np.mean(predict(model, data.samples) == data.labels))


def _init_model(layer_sizes: list[int], activation: str, rng: np.random.Generator) -> Model:
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return Model(weights, biases, activation)


def train_mlp(
    data: Dataset,
    hidden_sizes=(16,),
    epochs: int = 20,
    learning_rate: float = 0.1,
    seed: int = 0,
    activation: str = "tanh",
    batch_size: int = 32,
    num_classes: int | None = None,
) -> Model:
    """Mini-batch SGD on softmax cross-entropy. Deterministic given seed.

    epochs=0 returns the seeded random initialization untouched.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(seed)
    n_classes = int(num_classes if num_classes is not None else data.labels.max() + 1)
    sizes = [data.samples.shape[1], *hidden_sizes, n_classes]
    model = _init_model(sizes, activation, rng)

    n = len(data)
    last = len(model.weights) - 1
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb, yb = data.samples[idx], data.labels[idx]

            acts = [xb]
            pre = []
            a = xb
            for i, (w, b) in enumerate(zip(model.weights, model.biases)):
                z = a @ w.T + b
                pre.append(z)
                a = z if i == last else _act(model.activation, z)
                acts.append(a)

            logits = acts[-1]
            shifted = logits - logits.max(axis=1, keepdims=True)
            p = np.exp(shifted)
            p /= p.sum(axis=1, keepdims=True)
            g = p
            g[np.arange(len(yb)), yb] -= 1.0
            g /= len(yb)

            for i in range(last, -1, -1):
                if i != last:
                    g = g * _act_deriv(model.activation, pre[i])
                gw = g.T @ acts[i]
                gb = g.sum(axis=0)
                g = g @ model.weights[i]
                model.weights[i] -= learning_rate * gw
                model.biases[i] -= learning_rate * gb

    logger.info("train_mlp: final training accuracy %.4f", accuracy(model, data))
    return model


def make_blobs(
    n_per_class: int,
    num_classes: int = 2,
    dim: int = 2,
    spread: float = 0.1,
    seed: int = 0,
    bounds: BoxBounds = BoxBounds(),
) -> Dataset:
    """Gaussian class clusters clipped to the box. Deterministic given seed."""
    if n_per_class < 1:
        raise ValueError("need n_per_class >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = bounds.lower, bounds.upper
    margin = 0.2 * bounds.diameter
    centers = rng.uniform(lo + margin, hi - margin, size=(num_classes, dim))
    samples = np.vstack(
        [centers[c] + spread * rng.standard_normal((n_per_class, dim)) for c in range(num_classes)]
    )
    labels = np.repeat(np.arange(num_classes), n_per_class)
    return Dataset(project_box(samples.ravel(), lo, hi).reshape(samples.shape), labels, bounds)


def load_mnist_idx(images_path, labels_path) -> Dataset:
    """Read an IDX image/label file pair; pixels are scaled to [0, 1] by /255."""
    with open(images_path, "rb") as f:
        header = f.read(16)
        if len(header) < 16:
            raise IdxFormatError(f"{images_path}: truncated image header")
        magic, count, rows, cols = struct.unpack(">IIII", header)
        if magic != IDX_IMAGES_MAGIC:
            raise IdxFormatError(f"{images_path}: bad image magic 0x{magic:08x}")
        raw = f.read(count * rows * cols)
        if len(raw) < count * rows * cols:
            raise IdxFormatError(f"{images_path}: truncated image data")
    images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols) / 255.0

    with open(labels_path, "rb") as f:
        header = f.read(8)
        if len(header) < 8:
            raise IdxFormatError(f"{labels_path}: truncated label header")
        magic, label_count = struct.unpack(">II", header)
        if magic != IDX_LABELS_MAGIC:
            raise IdxFormatError(f"{labels_path}: bad label magic 0x{magic:08x}")
        raw = f.read(label_count)
        if len(raw) < label_count:
            raise IdxFormatError(f"{labels_path}: truncated label data")
    labels = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)

    if label_count != count:
        raise IdxFormatError(f"count mismatch: {count} images vs {label_count} labels")
    return Dataset(images, labels)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path, rows: int, cols: int):
    """Write an IDX image/label file pair (inverse of load_mnist_idx).

    images must be in [0, 1]; stored as rounded unsigned bytes times 255.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if images.shape[0] != labels.size:
        raise ValueError("count mismatch between images and labels")
    if images.shape[1] != rows * cols:
        raise ValueError(f"image length {images.shape[1]} != rows*cols = {rows * cols}")
    bytes_img = np.clip(np.rint(images * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, images.shape[0], rows, cols))
        f.write(bytes_img.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.size))
        f.write(labels.astype(np.uint8).tobytes())


def save_model(model: Model, path):
    """Write weights as a self-describing JSON document (floats round-trip exactly)."""
    doc = {
        "version": WEIGHT_FILE_VERSION,
        "activation": model.activation,
        "layers": [
            {
                "rows": int(w.shape[0]),
                "cols": int(w.shape[1]),
                "weights": [float(v) for v in w.ravel()],
                "bias": [float(v) for v in b],
            }
            for w, b in zip(model.weights, model.biases)
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("version") != WEIGHT_FILE_VERSION:
        raise ValueError(f"unsupported weight file version {doc.get('version')!r}")
    weights, biases = [], []
    for layer in doc["layers"]:
        w = np.array(layer["weights"], dtype=np.float64).reshape(layer["rows"], layer["cols"])
        weights.append(w)
        biases.append(np.array(layer["bias"], dtype=np.float64))
    return Model(weights, biases, doc["activation"])
