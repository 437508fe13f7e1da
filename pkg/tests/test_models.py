import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundarywalk.core import BoxBounds
from boundarywalk.models import (
    Dataset,
    IdxFormatError,
    Model,
    accuracy,
    forward,
    grad_scalar,
    load_mnist_idx,
    load_model,
    make_blobs,
    predict,
    save_model,
    train_mlp,
    write_idx,
)


def _tiny_mlp(seed=0, activation="tanh"):
    rng = np.random.default_rng(seed)
    return Model(
        weights=[rng.normal(size=(5, 3)), rng.normal(size=(4, 5))],
        biases=[rng.normal(size=5), rng.normal(size=4)],
        activation=activation,
    )


def test_model_validation():
    with pytest.raises(ValueError):
        Model(weights=[np.zeros((3, 2))], biases=[np.zeros(2)])
    with pytest.raises(ValueError):
        Model(weights=[np.zeros((3, 2)), np.zeros((2, 4))], biases=[np.zeros(3), np.zeros(2)])
    with pytest.raises(ValueError):
        Model(weights=[np.zeros((1, 2))], biases=[np.zeros(1)])
    with pytest.raises(ValueError):
        _tiny_mlp(activation="sigmoid")


def test_forward_matches_manual_computation():
    model = Model(
        weights=[np.array([[1.0, 2.0], [0.0, -1.0]]), np.array([[1.0, 1.0], [2.0, 0.0]])],
        biases=[np.array([0.5, 0.0]), np.array([0.0, -1.0])],
        activation="relu",
    )
    x = np.array([1.0, 1.0])
    hidden = np.maximum(np.array([3.5, -1.0]), 0.0)
    expected = np.array([hidden.sum(), 2.0 * hidden[0] - 1.0])
    assert np.allclose(forward(model, x), expected)


def test_identity_model_is_affine():
    model = _tiny_mlp(activation="identity")
    x, y = np.random.default_rng(1).normal(size=(2, 3))
    mid = forward(model, 0.5 * (x + y))
    assert np.allclose(mid, 0.5 * (forward(model, x) + forward(model, y)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from(["identity", "tanh"]))
def test_grad_scalar_matches_finite_differences(seed, activation):
    rng = np.random.default_rng(seed)
    model = _tiny_mlp(seed=seed, activation=activation)
    x = rng.normal(size=3)
    coeffs = rng.normal(size=4)
    value, grad = grad_scalar(model, x, coeffs)
    assert value == pytest.approx(float(coeffs @ forward(model, x)))
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (coeffs @ forward(model, x + e) - coeffs @ forward(model, x - e)) / (2.0 * h)
        assert grad[j] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_grad_scalar_relu_uses_zero_subgradient_at_kink():
    model = Model(
        weights=[np.array([[1.0]]), np.array([[1.0], [0.0]])],
        biases=[np.array([0.0]), np.zeros(2)],
        activation="relu",
    )
    _, grad = grad_scalar(model, np.array([0.0]), np.array([1.0, 0.0]))
    assert grad[0] == 0.0


def test_predict_and_accuracy():
    model = Model(weights=[np.eye(2)], biases=[np.zeros(2)], activation="identity")
    data = Dataset(samples=np.array([[0.9, 0.1], [0.2, 0.7]]), labels=np.array([0, 1]))
    assert np.array_equal(predict(model, data.samples), [0, 1])
    assert accuracy(model, data) == 1.0


def test_train_mlp_learns_separated_blobs():
    data = make_blobs(n_per_class=60, num_classes=2, dim=2, spread=0.05, seed=5)
    model = train_mlp(data, hidden_sizes=(8,), epochs=30, seed=0)
    assert accuracy(model, data) >= 0.95


def test_train_mlp_deterministic_and_zero_epochs():
    data = make_blobs(n_per_class=20, seed=2)
    m1 = train_mlp(data, epochs=3, seed=9)
    m2 = train_mlp(data, epochs=3, seed=9)
    for w1, w2 in zip(m1.weights, m2.weights):
        assert np.array_equal(w1, w2)
    init = train_mlp(data, epochs=0, seed=9)
    trained = train_mlp(data, epochs=1, seed=9)
    assert any(not np.array_equal(a, b) for a, b in zip(init.weights, trained.weights))


def test_make_blobs_respects_bounds_and_seed():
    data = make_blobs(n_per_class=50, num_classes=3, dim=4, spread=0.5, seed=1)
    assert data.samples.shape == (150, 4)
    assert np.all(data.samples >= 0.0) and np.all(data.samples <= 1.0)
    again = make_blobs(n_per_class=50, num_classes=3, dim=4, spread=0.5, seed=1)
    assert np.array_equal(data.samples, again.samples)


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(7, 6)).astype(np.float64) / 255.0
    labels = rng.integers(0, 10, size=7)
    ip, lp = tmp_path / "imgs.idx", tmp_path / "labels.idx"
    write_idx(images, labels, ip, lp, rows=2, cols=3)
    data = load_mnist_idx(ip, lp)
    assert np.allclose(data.samples, images)
    assert np.array_equal(data.labels, labels)


def test_idx_error_cases(tmp_path):
    ip, lp = tmp_path / "imgs.idx", tmp_path / "labels.idx"
    write_idx(np.zeros((2, 4)), np.zeros(2), ip, lp, rows=2, cols=2)

    bad_magic = bytearray(ip.read_bytes())
    bad_magic[3] = 0x99
    (tmp_path / "bad.idx").write_bytes(bytes(bad_magic))
    with pytest.raises(IdxFormatError):
        load_mnist_idx(tmp_path / "bad.idx", lp)

    (tmp_path / "short.idx").write_bytes(ip.read_bytes()[:-3])
    with pytest.raises(IdxFormatError):
        load_mnist_idx(tmp_path / "short.idx", lp)

    write_idx(np.zeros((3, 4)), np.zeros(3), tmp_path / "imgs3.idx", tmp_path / "labels3.idx", rows=2, cols=2)
    with pytest.raises(IdxFormatError):
        load_mnist_idx(tmp_path / "imgs3.idx", lp)


def test_model_file_round_trip(tmp_path):
    model = _tiny_mlp(seed=4)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.activation == model.activation
    for w1, w2 in zip(model.weights, loaded.weights):
        assert np.array_equal(w1, w2)
    for b1, b2 in zip(model.biases, loaded.biases):
        assert np.array_equal(b1, b2)


def test_load_model_rejects_unknown_version(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"version": 99, "activation": "tanh", "layers": []}')
    with pytest.raises(ValueError):
        load_model(path)


def test_dataset_bounds_default():
    data = Dataset(samples=np.zeros((2, 2)), labels=np.zeros(2))
    assert data.bounds == BoxBounds()
    assert len(data) == 2
