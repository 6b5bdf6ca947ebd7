"""Network fixtures shared by the unit and acceptance tests."""

import numpy as np

from stochgrad.losses import LossSpec
from stochgrad.network import BINARY, SIGMOID, Layer, LayeredNetwork, noisy_rectifier, single_unit
from stochgrad.noise import NoiseStream


def _rand(stream, shape, scale=1.0):
    return stream.gaussian(scale, int(np.prod(shape))).reshape(shape)


def binary_net(sizes, loss, target, seed, kinds=None, input_size=2, scale=1.0):
    """Layered net with random weights; every layer binary unless ``kinds`` says otherwise."""
    s = NoiseStream(seed, 99)
    layers, fan_in = [], input_size
    for i, m in enumerate(sizes):
        kind = BINARY if kinds is None else kinds[i]
        layers.append(Layer(_rand(s, (m, fan_in), scale), _rand(s, (m,), 0.5), kind))
        fan_in = m
    return LayeredNetwork(input_size, tuple(layers), LossSpec(loss, target))


def unbiasedness_suite():
    """Twelve fixtures: 1-8 binary units, 1-3 layers, three losses.

    Outputs are binary and targets in {0, 1}, so every loss here is a
    function of the binary configuration alone.
    """
    x2 = np.array([0.7, -1.2])
    out = [
        ("single-linear", single_unit(0.3, "linear", [1.0]), np.zeros(0)),
        ("single-sq", single_unit(-0.4, "squared_error", [1.0], [0.5, -0.5], 2), x2),
        ("single-ce", single_unit(0.8, "cross_entropy", [0.0], [1.0, 0.3], 2), x2),
        ("wide-sq", binary_net([4], "squared_error", [1, 0, 1, 0], 1), x2),
        ("wide-ce", binary_net([8], "cross_entropy", [1, 0, 1, 1, 0, 0, 1, 0], 2), x2),
        ("wide-linear", binary_net([5], "linear", [1.0, -2.0, 0.5, 3.0, -1.0], 3), x2),
        ("deep2-sq", binary_net([3, 2], "squared_error", [1, 0], 4), x2),
        ("deep2-ce", binary_net([4, 3], "cross_entropy", [0, 1, 1], 5), x2),
        ("deep2-linear", binary_net([2, 1], "linear", [2.0], 6), x2),
        ("deep3-sq", binary_net([3, 2, 1], "squared_error", [1], 7), x2),
        ("deep3-ce", binary_net([2, 3, 2], "cross_entropy", [1, 0], 8), x2),
        ("deep3-linear", binary_net([4, 2, 2], "linear", [1.0, -1.0], 9), x2),
    ]
    return out


def single_layer_suite():
    """Single binary layer, losses separable across units with binary targets."""
    x2 = np.array([0.7, -1.2])
    return [
        ("single-linear", single_unit(0.3, "linear", [1.0]), np.zeros(0)),
        ("single-neg-linear", single_unit(-1.0, "linear", [-2.0], [0.4, 0.1], 2), x2),
        ("single-sq1", single_unit(-0.4, "squared_error", [1.0], [0.5, -0.5], 2), x2),
        ("single-sq0", single_unit(0.9, "squared_error", [0.0], [0.5, -0.5], 2), x2),
        ("single-ce", single_unit(0.8, "cross_entropy", [0.0], [1.0, 0.3], 2), x2),
        ("wide-sq", binary_net([4], "squared_error", [1, 0, 1, 0], 1), x2),
        ("wide-ce", binary_net([6], "cross_entropy", [1, 0, 1, 1, 0, 0], 2), x2),
        ("wide-linear", binary_net([5], "linear", [1.0, -2.0, 0.5, 3.0, -1.0], 3), x2),
    ]


def semihard_net(seed):
    """Random 1-3 layer net of noisy rectifiers (optionally a sigmoid head)."""
    s = NoiseStream(seed, 7)
    n_layers = 1 + int(s.uniform() * 3)
    input_size = 1 + int(s.uniform() * 4)
    layers, fan_in = [], input_size
    for li in range(n_layers):
        m = 1 + int(s.uniform() * 4)
        last = li == n_layers - 1
        kind = SIGMOID if last and s.uniform() < 0.3 else noisy_rectifier(0.5 + s.uniform())
        layers.append(Layer(_rand(s, (m, fan_in)), _rand(s, (m,), 0.5), kind))
        fan_in = m
    target = _rand(s, (fan_in,))
    x = _rand(s, (input_size,))
    return LayeredNetwork(input_size, tuple(layers), LossSpec("squared_error", target)), x
