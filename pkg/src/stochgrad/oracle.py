"""Exact expectations for small networks by exhaustive enumeration.

Binary units are enumerated layer by layer.  Each partial configuration
carries its probability, the product of ``sigmoid(a)^h (1 - sigmoid(a))^(1-h)``
over the units decided so far, where ``a`` is computed from the upstream
configuration.  Deterministic layers (sigmoid, noise-free rectifier) are
folded in exactly.

The enumeration is returned as a probability-weighted :class:`ForwardTrace`,
so any estimator can be evaluated on it to get exact moments.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import CapacityError, ContractError
from .estimators import (
    CorrectorModel,
    GradientEstimate,
    centered_with_baseline,
    corrected_estimate,
    straight_through_backward,
    unbiased_estimate,
)
from .network import NOISY_RECTIFIER, ForwardTrace, LayeredNetwork, sigmoid
from .stats import weighted_moments

MAX_UNITS = 16


@dataclass
class EnumerationResult:
    expected_loss: float
    configurations: np.ndarray  # (K, U) binary states of the stochastic units
    probabilities: np.ndarray
    losses: np.ndarray
    unit_count: int
    trace: ForwardTrace

    def rows(self):
        """Iterate ``(configuration, probability, loss)`` triples."""
        return zip(map(tuple, self.configurations.astype(int)), self.probabilities, self.losses)


def _check_enumerable(net: LayeredNetwork) -> None:
    for i, layer in enumerate(net.layers):
        if layer.kind.name == NOISY_RECTIFIER and layer.kind.sigma > 0:
            raise ContractError(f"layer {i} is a noisy rectifier with sigma > 0; only binary noise can be enumerated")
    if net.n_binary_units > MAX_UNITS:
        raise CapacityError(f"{net.n_binary_units} stochastic units exceed the enumeration cap of {MAX_UNITS}")


def exact_expected_loss(net: LayeredNetwork, x) -> EnumerationResult:
    _check_enumerable(net)
    x = np.asarray(x, dtype=float).reshape(1, -1) if np.size(x) else np.zeros((1, 0))
    if x.shape[1] != net.input_size:
        raise ContractError(f"input width {x.shape[1]} does not match network input size {net.input_size}")
    prob = np.ones(1)
    h = x
    hist = {"inputs": [], "acts": [], "sig": [], "noise": [], "outs": []}
    config_cols = []
    for layer in net.layers:
        a = h @ layer.W.T + layer.b
        if layer.kind.binary:
            m = layer.size
            patterns = np.array(list(product((0.0, 1.0), repeat=m)))  # (2^m, m)
            K = a.shape[0]
            s = sigmoid(a)
            # configuration-major expansion: row k*2^m + p is upstream k with pattern p
            rep = lambda arr: None if arr is None else np.repeat(arr, 2**m, axis=0)
            for key in hist:
                hist[key] = [rep(arr) for arr in hist[key]]
            config_cols = [np.repeat(c, 2**m, axis=0) for c in config_cols]
            new_h = np.tile(patterns, (K, 1))
            s_rep = np.repeat(s, 2**m, axis=0)
            p_units = np.where(new_h == 1.0, s_rep, 1.0 - s_rep)
            prob = np.repeat(prob, 2**m) * p_units.prod(axis=1)
            h_in = np.repeat(h, 2**m, axis=0)
            a = np.repeat(a, 2**m, axis=0)
            hist["inputs"].append(h_in)
            hist["acts"].append(a)
            hist["sig"].append(s_rep)
            hist["noise"].append(np.full_like(a, np.nan))
            hist["outs"].append(new_h)
            config_cols.append(new_h)
            h = new_h
        else:
            hist["inputs"].append(h)
            hist["acts"].append(a)
            hist["sig"].append(None)
            if layer.kind.name == NOISY_RECTIFIER:
                hist["noise"].append(np.zeros_like(a))
                h = np.maximum(0.0, a)
            else:
                hist["noise"].append(None)
                h = sigmoid(a)
            hist["outs"].append(h)
    losses = net.loss.value(h)
    K = losses.shape[0]
    configs = np.hstack(config_cols) if config_cols else np.zeros((K, 0))
    trace = ForwardTrace(
        np.repeat(x, K, axis=0),
        hist["inputs"],
        hist["acts"],
        hist["sig"],
        hist["noise"],
        hist["outs"],
        losses,
        net.loss.target,
        tuple(l.kind for l in net.layers),
        prob,
    )
    return EnumerationResult(float(prob @ losses), configs, prob, losses, net.n_binary_units, trace)


def exact_gradient(net: LayeredNetwork, x, epsilon: float = 1e-5, richardson: bool = False) -> GradientEstimate:
    """Gradient of the enumerated expected loss by central differences.

    With ``richardson`` the steps ``epsilon`` and ``epsilon/2`` are combined
    to cancel the leading truncation term.
    """
    theta = net.params()

    def f(t):
        return exact_expected_loss(net.with_params(t), x).expected_loss

    def central(eps):
        out = np.empty_like(theta)
        for i in range(theta.shape[0]):
            e = np.zeros_like(theta)
            e[i] = eps
            out[i] = (f(theta + e) - f(theta - e)) / (2 * eps)
        return out

    grad = central(epsilon)
    if richardson:
        grad = (4 * central(epsilon / 2) - grad) / 3
    return GradientEstimate(grad[None, :], "oracle")


def closed_form_single_unit_gradient(net: LayeredNetwork, x) -> float:
    """``sigmoid'(a) (L(1) - L(0))`` for a one-unit binary network (bias gradient)."""
    if len(net.layers) != 1 or net.n_binary_units != 1 or not net.layers[0].kind.binary:
        raise ContractError("closed form applies to a single stochastic binary unit")
    layer = net.layers[0]
    a = float(layer.b[0] + layer.W[0] @ np.asarray(x, dtype=float).reshape(-1))
    s = float(sigmoid(a))
    L1, L0 = net.loss.value(np.array([[1.0], [0.0]]))
    return s * (1 - s) * (L1 - L0)


def optimal_baseline(net: LayeredNetwork, x) -> np.ndarray:
    """Exact variance-minimizing baseline per binary unit, ``E[(h-s)^2 L] / E[(h-s)^2]``."""
    res = exact_expected_loss(net, x)
    tr = res.trace
    sq = np.hstack([(o - s) ** 2 for o, s, k in zip(tr.outputs, tr.sigma_a, tr.kinds) if k.binary])
    num = res.probabilities @ (sq * res.losses[:, None])
    den = res.probabilities @ sq
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def exact_estimator_moments(
    net: LayeredNetwork,
    x,
    estimator: str = "unbiased",
    baseline=0.0,
    corrector: CorrectorModel | None = None,
):
    """Exact per-parameter mean and variance of an estimator over all configurations."""
    res = exact_expected_loss(net, x)
    tr = res.trace
    if estimator == "unbiased":
        est = unbiased_estimate(tr, net)
    elif estimator == "centered":
        est = centered_with_baseline(tr, baseline, net)
    elif estimator == "straight_through":
        est = straight_through_backward(tr, net)
    elif estimator == "corrected":
        if corrector is None:
            raise ContractError("corrected estimator needs a CorrectorModel")
        est = corrected_estimate(tr, net, corrector)
    else:
        raise ContractError(
            f"no exact moments for estimator {estimator!r}; valid options: unbiased, centered, straight_through, corrected"
        )
    return weighted_moments(est.samples, res.probabilities)
