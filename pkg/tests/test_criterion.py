import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundarywalk.criterion import (
    Criterion,
    GradientMaskingError,
    adv_value,
    adv_value_and_grad,
    is_adversarial,
)
from boundarywalk.models import Model, forward

logit_lists = st.lists(
    st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=2, max_size=6
)


def test_criterion_validation():
    with pytest.raises(ValueError):
        Criterion(original_label=-1)
    with pytest.raises(ValueError):
        Criterion(original_label=2, target_label=2)
    with pytest.raises(ValueError):
        Criterion(original_label=5).check_classes(3)
    with pytest.raises(ValueError):
        Criterion(original_label=0, target_label=4).check_classes(3)


def test_targeted_margin_is_logit_difference():
    crit = Criterion(original_label=0, target_label=1)
    assert adv_value(np.array([2.0, 1.0, 3.0]), crit) == pytest.approx(1.0)


def test_untargeted_margin_uses_strongest_competitor():
    crit = Criterion(original_label=0)
    assert adv_value(np.array([2.0, 1.0, 3.0]), crit) == pytest.approx(-1.0)
    # ties between competitors resolve to the lowest index
    assert adv_value(np.array([1.0, 2.0, 2.0]), crit) == pytest.approx(-1.0)


def test_zero_margin_is_not_adversarial():
    crit = Criterion(original_label=0)
    assert not is_adversarial(np.array([1.0, 1.0]), crit)
    assert is_adversarial(np.array([1.0, 1.0 + 1e-12]), crit)


@given(logit_lists, st.integers(0, 5))
def test_untargeted_margin_is_min_over_targets(logits, y):
    logits = np.array(logits)
    y = y % logits.size
    crit = Criterion(original_label=y)
    per_target = [
        adv_value(logits, Criterion(original_label=y, target_label=t))
        for t in range(logits.size)
        if t != y
    ]
    assert adv_value(logits, crit) == pytest.approx(min(per_target))


@given(logit_lists, st.floats(min_value=-5, max_value=5, allow_nan=False))
def test_margin_invariant_to_logit_shifts(logits, shift):
    logits = np.array(logits)
    crit = Criterion(original_label=0)
    assert adv_value(logits + shift, crit) == pytest.approx(adv_value(logits, crit), abs=1e-9)


def _rand_model(seed, activation="tanh"):
    rng = np.random.default_rng(seed)
    return Model(
        weights=[rng.normal(size=(6, 4)), rng.normal(size=(3, 6))],
        biases=[rng.normal(size=6), rng.normal(size=3)],
        activation=activation,
    )


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_value_and_grad_agree_with_logit_readout(seed):
    rng = np.random.default_rng(seed)
    model = _rand_model(seed)
    x = rng.uniform(0, 1, 4)
    crit = Criterion(original_label=int(rng.integers(0, 3)))
    value, grad = adv_value_and_grad(model, x, crit)
    assert value == pytest.approx(adv_value(forward(model, x), crit))
    assert grad.shape == (4,)

    h = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        plus, _ = adv_value_and_grad(model, x + e, crit)
        minus, _ = adv_value_and_grad(model, x - e, crit)
        assert grad[j] == pytest.approx((plus - minus) / (2 * h), rel=1e-4, abs=1e-6)


def test_targeted_value_and_grad_uses_requested_target():
    model = _rand_model(3)
    x = np.full(4, 0.4)
    crit = Criterion(original_label=0, target_label=2)
    value, _ = adv_value_and_grad(model, x, crit)
    logits = forward(model, x)
    assert value == pytest.approx(float(logits[0] - logits[2]))


def test_exactly_zero_gradient_raises():
    # constant logits: weights all zero, so the margin has no gradient
    model = Model(weights=[np.zeros((2, 3))], biases=[np.array([1.0, 0.0])], activation="identity")
    with pytest.raises(GradientMaskingError):
        adv_value_and_grad(model, np.full(3, 0.5), Criterion(original_label=0))
