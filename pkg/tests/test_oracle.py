from itertools import product

import numpy as np
import pytest

from stochgrad.errors import CapacityError, ContractError
from stochgrad.losses import LossSpec, register_loss, unregister_loss
from stochgrad.network import BINARY, SIGMOID, Layer, LayeredNetwork, noisy_rectifier, sigmoid, single_unit
from stochgrad.oracle import (
    MAX_UNITS,
    closed_form_single_unit_gradient,
    exact_estimator_moments,
    exact_expected_loss,
    exact_gradient,
    optimal_baseline,
)

from fixtures import binary_net, unbiasedness_suite


@pytest.fixture
def xor_loss():
    register_loss("xor2", lambda h, t: np.logical_xor(h[:, 0] > 0.5, h[:, 1] > 0.5).astype(float), overwrite=True)
    yield "xor2"
    unregister_loss("xor2")


@pytest.fixture
def constant_loss():
    register_loss("const2", lambda h, t: np.full(h.shape[0], 2.0), overwrite=True)
    yield "const2"
    unregister_loss("const2")


def test_single_unit_expected_loss():
    assert exact_expected_loss(single_unit(0.0, "linear", [1.0]), []).expected_loss == 0.5


def test_two_independent_units_xor(xor_loss):
    net = LayeredNetwork(0, (Layer(np.zeros((2, 0)), [0.0, 0.0], BINARY),), LossSpec(xor_loss, [0.0, 0.0]))
    res = exact_expected_loss(net, [])
    assert res.expected_loss == 0.5
    assert res.configurations.shape == (4, 2)


def test_constant_loss(constant_loss):
    net = binary_net([3, 2], "linear", [0, 0], 1)
    net = LayeredNetwork(net.input_size, net.layers, LossSpec(constant_loss, [0.0, 0.0]))
    assert abs(exact_expected_loss(net, [0.5, 0.5]).expected_loss - 2.0) < 1e-12
    assert np.all(np.abs(exact_gradient(net, [0.5, 0.5]).values) < 1e-9)


@pytest.mark.parametrize("name,net,x", unbiasedness_suite(), ids=lambda v: v if isinstance(v, str) else "")
def test_probabilities_form_a_distribution(name, net, x):
    res = exact_expected_loss(net, x)
    assert np.all(res.probabilities >= 0)
    assert abs(res.probabilities.sum() - 1.0) < 1e-12
    assert len(res.probabilities) == 2**res.unit_count


def test_enumeration_matches_brute_force_two_layers():
    net = binary_net([2, 2], "squared_error", [1, 0], 3)
    x = np.array([0.4, -0.8])
    l0, l1 = net.layers
    total = 0.0
    for h1 in product((0.0, 1.0), repeat=2):
        p1 = np.prod([s if h else 1 - s for h, s in zip(h1, sigmoid(l0.W @ x + l0.b))])
        for h2 in product((0.0, 1.0), repeat=2):
            p2 = np.prod([s if h else 1 - s for h, s in zip(h2, sigmoid(l1.W @ np.array(h1) + l1.b))])
            total += p1 * p2 * ((h2[0] - 1) ** 2 + h2[1] ** 2)
    assert abs(exact_expected_loss(net, x).expected_loss - total) < 1e-12


def test_deterministic_layers_are_folded_in():
    layers = (
        Layer([[1.0, -0.5]], [0.2], SIGMOID),
        Layer([[2.0]], [-0.3], BINARY),
        Layer([[1.5]], [0.1], SIGMOID),
    )
    net = LayeredNetwork(2, layers, LossSpec("squared_error", [1.0]))
    x = np.array([0.3, 0.9])
    s0 = sigmoid(0.3 - 0.45 + 0.2)
    p = sigmoid(2 * s0 - 0.3)
    expect = p * (sigmoid(1.6) - 1) ** 2 + (1 - p) * (sigmoid(0.1) - 1) ** 2
    assert abs(exact_expected_loss(net, x).expected_loss - expect) < 1e-12


def test_identity_loss_gradient():
    g = exact_gradient(single_unit(0.0, "linear", [1.0]), []).values
    assert abs(g[0] - 0.25) < 1e-9


def test_flipped_loss_gradient():
    register_loss("one_minus", lambda h, t: 1 - h[:, 0], overwrite=True)
    try:
        g = exact_gradient(single_unit(0.0, "one_minus", [0.0]), []).values
        assert abs(g[0] + 0.25) < 1e-9
    finally:
        unregister_loss("one_minus")


@pytest.mark.parametrize("bias,loss,target", [(0.0, "linear", [1.0]), (1.3, "squared_error", [1.0]),
                                              (-0.7, "cross_entropy", [0.0])])
def test_single_unit_closed_form_cross_check(bias, loss, target):
    net = single_unit(bias, loss, target)
    fd = exact_gradient(net, []).values[-1]
    assert abs(fd - closed_form_single_unit_gradient(net, [])) < 1e-9


def test_richardson_is_at_least_as_accurate():
    net = single_unit(0.8, "squared_error", [1.0])
    exact = closed_form_single_unit_gradient(net, [])
    plain = exact_gradient(net, [], epsilon=1e-2).values[-1]
    rich = exact_gradient(net, [], epsilon=1e-2, richardson=True).values[-1]
    assert abs(rich - exact) < abs(plain - exact)


def test_capacity_cap():
    net = binary_net([MAX_UNITS + 1], "linear", [1.0] * (MAX_UNITS + 1), 0)
    with pytest.raises(CapacityError):
        exact_expected_loss(net, [0.0, 0.0])


def test_noisy_rectifier_rejected_but_deterministic_one_allowed():
    noisy = LayeredNetwork(1, (Layer([[1.0]], [0.0], noisy_rectifier(1.0)),), LossSpec("linear", [1.0]))
    with pytest.raises(ContractError):
        exact_expected_loss(noisy, [1.0])
    flat = LayeredNetwork(
        1,
        (Layer([[1.0]], [0.0], BINARY), Layer([[2.0]], [-1.0], noisy_rectifier(0.0))),
        LossSpec("linear", [1.0]),
    )
    # h2 = max(0, 2 h1 - 1): 1 with probability sigmoid(1), else 0
    assert abs(exact_expected_loss(flat, [1.0]).expected_loss - sigmoid(1.0)) < 1e-12


def test_unbiased_moments_single_unit():
    mean, var = exact_estimator_moments(single_unit(0.0, "linear", [1.0]), [], "unbiased")
    assert abs(mean[0] - 0.25) < 1e-15 and abs(var[0] - 0.0625) < 1e-15


def test_centered_moments_at_half():
    mean, var = exact_estimator_moments(single_unit(0.0, "linear", [1.0]), [], "centered", 0.5)
    assert abs(mean[0] - 0.25) < 1e-15 and var[0] < 1e-30


@pytest.mark.parametrize("kind", ["unbiased", "centered", "straight_through"])
def test_constant_loss_moments_have_zero_mean(kind):
    register_loss("const2d", lambda h, t: np.full(h.shape[0], 2.0), lambda h, t: np.zeros_like(h), overwrite=True)
    try:
        net = single_unit(0.4, "const2d", [0.0])
        mean, _ = exact_estimator_moments(net, [], kind, 2.0)
        assert np.all(np.abs(mean) < 1e-15)
    finally:
        unregister_loss("const2d")


@pytest.mark.parametrize("name,net,x", unbiasedness_suite(), ids=lambda v: v if isinstance(v, str) else "")
def test_unbiased_moments_equal_exact_gradient(name, net, x):
    if net.n_binary_units > 10:
        pytest.skip("more than 10 units")
    mean, _ = exact_estimator_moments(net, x, "unbiased")
    assert np.allclose(mean, exact_gradient(net, x).values, atol=1e-6)


def test_optimal_baseline_closed_form_single_unit():
    net = single_unit(0.7, "squared_error", [1.0])
    s = sigmoid(0.7)
    # E[(h-s)^2 L] / E[(h-s)^2] = (1-s) L(1) + s L(0)
    assert abs(optimal_baseline(net, [])[0] - s * 1.0) < 1e-12


def test_unknown_estimator_lists_options():
    with pytest.raises(ContractError, match="straight_through"):
        exact_estimator_moments(single_unit(), [], "spsa")
