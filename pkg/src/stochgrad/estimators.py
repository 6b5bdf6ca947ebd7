"""Gradient estimators for networks of stochastic binary units.

The correlator estimators (``unbiased``, ``centered``) need only the trace:
each binary unit multiplies its own surprise ``h - sigmoid(a)`` by the
broadcast loss, and the result is mapped onto that unit's bias and incoming
weights through ``da/db = 1`` and ``da/dW_j = x_j``.  Nothing is propagated
into a unit's inputs.

Parameters of non-binary layers are handled by the exact pathwise gradient
when every path from them to the loss avoids hard thresholds (i.e. they sit
after the last binary layer).  Non-binary layers feeding a binary layer get
no estimate and are reported in :attr:`GradientEstimate.estimated`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ContractError
from .network import ForwardTrace, LayeredNetwork, backward
from .noise import NoiseStream
from .stats import running_average, weighted_moments

ESTIMATOR_KINDS = ("unbiased", "centered", "straight_through", "corrected", "spsa", "finite_diff")


@dataclass
class GradientEstimate:
    """Per-sample gradient estimates in the network's flat parameter layout.

    ``samples`` has shape ``(n, n_params)``; :attr:`values` is their
    arithmetic mean (probability-weighted when ``weights`` is set, as for
    traces produced by exhaustive enumeration).
    """

    samples: np.ndarray
    kind: str
    estimated: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.estimated is None:
            self.estimated = np.ones(self.samples.shape[1], dtype=bool)

    @property
    def samples_used(self) -> int:
        return self.samples.shape[0]

    @property
    def values(self) -> np.ndarray:
        return weighted_moments(self.samples, self.weights)[0]

    @property
    def variance(self) -> np.ndarray:
        return weighted_moments(self.samples, self.weights)[1]

    @property
    def sem(self) -> np.ndarray:
        """Standard error of :attr:`values`, ``sqrt(var / n)`` with the unbiased variance."""
        n = self.samples_used
        if n < 2:
            return np.full(self.samples.shape[1], np.nan)
        return np.sqrt(self.samples.var(axis=0, ddof=1) / n)


# correlator estimators ----------------------------------------------------


def _layout_from_trace(trace: ForwardTrace):
    shapes = [(a.shape[1], x.shape[1]) for a, x in zip(trace.activations, trace.inputs)]
    offsets, pos = [], 0
    for m, n in shapes:
        offsets.append(pos)
        pos += m * n + m
    return shapes, offsets, pos


def unit_correlator(trace: ForwardTrace, baseline=None) -> np.ndarray:
    """``(h_i - sigmoid(a_i)) (L - baseline_i)`` for every binary unit, shape ``(n, U)``."""
    cols = []
    for li, kind in enumerate(trace.kinds):
        if not kind.binary:
            continue
        s = trace.sigma_a[li]
        if s is None:
            raise ContractError(f"trace has no sigmoid(a) record for binary layer {li}")
        cols.append(trace.outputs[li] - s)
    if not cols:
        raise ContractError("trace contains no stochastic binary units")
    surprise = np.hstack(cols)
    centered = trace.loss[:, None] - (0.0 if baseline is None else np.asarray(baseline, dtype=float))
    return surprise * centered


def _scatter_unit_grads(trace: ForwardTrace, unit_grads: np.ndarray, out: np.ndarray) -> None:
    """Write ``dL/da`` of binary units onto their biases and incoming weights."""
    shapes, offsets, _ = _layout_from_trace(trace)
    B = trace.batch_size
    pos = 0
    for li, kind in enumerate(trace.kinds):
        if not kind.binary:
            continue
        m, n = shapes[li]
        g = unit_grads[:, pos : pos + m]
        off = offsets[li]
        out[:, off : off + m * n] = (g[:, :, None] * trace.inputs[li][:, None, :]).reshape(B, m * n)
        out[:, off + m * n : off + m * n + m] = g
        pos += m


def _correlator_estimate(trace, net, baseline, kind) -> GradientEstimate:
    unit_grads = unit_correlator(trace, baseline)
    shapes, offsets, P = _layout_from_trace(trace)
    out = np.zeros((trace.batch_size, P))
    estimated = np.zeros(P, dtype=bool)
    last_binary = max(i for i, k in enumerate(trace.kinds) if k.binary)
    pathwise = None
    for li, k in enumerate(trace.kinds):
        m, n = shapes[li]
        block = slice(offsets[li], offsets[li] + m * n + m)
        if k.binary:
            estimated[block] = True
        elif li > last_binary and net is not None:
            if pathwise is None:
                pathwise = backward(trace, net, binary="stop")[0]
            out[:, block] = pathwise[:, block]
            estimated[block] = True
    _scatter_unit_grads(trace, unit_grads, out)
    return GradientEstimate(out, kind, estimated, trace.weights)


def unbiased_estimate(trace: ForwardTrace, net: Optional[LayeredNetwork] = None) -> GradientEstimate:
    """``(h_i - sigmoid(a_i)) L`` mapped onto each binary unit's parameters."""
    return _correlator_estimate(trace, net, None, "unbiased")


@dataclass
class BaselineTracker:
    """Running numerator/denominator of the variance-optimal per-unit baseline.

    The baseline for unit i is ``E[(h_i - s_i)^2 L] / E[(h_i - s_i)^2]``,
    estimated by two running averages.  Until the denominator exceeds
    ``epsilon_guard`` the emitted baseline is 0.
    """

    numerator: np.ndarray
    denominator: np.ndarray
    decay: float = 0.99
    epsilon_guard: float = 1e-8
    count: int = 0

    def __post_init__(self):
        if not 0 < self.decay <= 1:
            raise ContractError(f"decay must be in (0, 1], got {self.decay}")
        if not self.epsilon_guard > 0:
            raise ContractError("epsilon_guard must be positive")
        self.numerator = np.asarray(self.numerator, dtype=float)
        self.denominator = np.asarray(self.denominator, dtype=float)

    @classmethod
    def for_units(cls, n_units: int, decay: float = 0.99, epsilon_guard: float = 1e-8) -> "BaselineTracker":
        return cls(np.zeros(n_units), np.zeros(n_units), decay, epsilon_guard)

    @property
    def n_units(self) -> int:
        return self.numerator.shape[0]

    def baseline(self) -> np.ndarray:
        ok = self.denominator > self.epsilon_guard
        out = np.zeros_like(self.numerator)
        out[ok] = self.numerator[ok] / self.denominator[ok]
        return out


def centered_estimate(trace: ForwardTrace, tracker: BaselineTracker, net: Optional[LayeredNetwork] = None) -> GradientEstimate:
    """``(h_i - sigmoid(a_i)) (L - Lbar_i)`` with ``Lbar`` read from ``tracker`` as is.

    Callers update the tracker only after estimating, so the baseline never
    depends on the noise of the trace it centres.
    """
    baseline = tracker.baseline()
    if baseline.shape[0] != _n_binary(trace):
        raise ContractError(f"tracker has {baseline.shape[0]} units, trace has {_n_binary(trace)}")
    return _correlator_estimate(trace, net, baseline, "centered")


def centered_with_baseline(trace: ForwardTrace, baseline, net: Optional[LayeredNetwork] = None) -> GradientEstimate:
    """Centered estimator with a fixed scalar or per-unit baseline."""
    baseline = np.broadcast_to(np.asarray(baseline, dtype=float), (_n_binary(trace),))
    return _correlator_estimate(trace, net, baseline, "centered")


def _n_binary(trace: ForwardTrace) -> int:
    return sum(a.shape[1] for a, k in zip(trace.activations, trace.kinds) if k.binary)


def _binary_column(trace: ForwardTrace, which: list) -> np.ndarray:
    return np.hstack([arr for arr, k in zip(which, trace.kinds) if k.binary])


def update_baseline(tracker: BaselineTracker, trace: ForwardTrace) -> BaselineTracker:
    """Fold every sample of ``trace`` into the tracker's running averages."""
    sq = (_binary_column(trace, trace.outputs) - _binary_column(trace, trace.sigma_a)) ** 2
    num, count = running_average(tracker.numerator, tracker.count, sq * trace.loss[:, None], tracker.decay)
    den, _ = running_average(tracker.denominator, tracker.count, sq, tracker.decay)
    return replace(tracker, numerator=num, denominator=np.maximum(den, 0.0), count=count)


# straight-through and learned correction ----------------------------------


def straight_through_backward(trace: ForwardTrace, net: LayeredNetwork) -> GradientEstimate:
    """Backprop with every hard threshold crossed as the identity."""
    if not net.loss.differentiable:
        raise ContractError(f"loss {net.loss.name!r} is not differentiable")
    grads, _ = backward(trace, net, binary="identity")
    return GradientEstimate(grads, "straight_through", None, trace.weights)


def straight_through_unit_grads(trace: ForwardTrace, net: LayeredNetwork) -> np.ndarray:
    """Straight-through ``dL/da`` of every binary unit, shape ``(n, U)``."""
    _, dL_da = backward(trace, net, binary="identity")
    return _binary_column(trace, dL_da)


@dataclass
class CorrectorModel:
    """Per-unit affine map from the straight-through value to a corrected one.

    The prediction is ``alpha * G + beta`` (plus ``gamma * sigmoid(a)`` when
    ``use_sigma`` is set).  Step t uses the rate
    ``learning_rate / (1 + lr_decay * t)``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    learning_rate: float = 0.05
    lr_decay: float = 0.0
    use_sigma: bool = False
    steps: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ContractError("learning_rate must be non-negative")
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)

    @classmethod
    def identity(cls, n_units: int, **kwargs) -> "CorrectorModel":
        return cls(np.ones(n_units), np.zeros(n_units), np.zeros(n_units), **kwargs)

    def current_rate(self) -> float:
        return self.learning_rate / (1.0 + self.lr_decay * self.steps)

    def predict(self, st_values, sigma_a=None) -> np.ndarray:
        out = self.alpha * st_values + self.beta
        if self.use_sigma:
            if sigma_a is None:
                raise ContractError("corrector uses sigmoid(a) but none was supplied")
            out = out + self.gamma * sigma_a
        return out


def corrector_pairs(trace: ForwardTrace, net: LayeredNetwork):
    """``(straight-through dL/da, unbiased dL/da, sigmoid(a))`` per binary unit."""
    return (
        straight_through_unit_grads(trace, net),
        unit_correlator(trace),
        _binary_column(trace, trace.sigma_a),
    )


def train_corrector(model: CorrectorModel, st_values, unbiased_values, sigma_a=None) -> CorrectorModel:
    """One gradient step on the mean of ``(g - prediction)^2`` over the batch.

    ``st_values`` and ``unbiased_values`` must come from the same traces,
    row for row.
    """
    G = np.atleast_2d(st_values)
    g = np.atleast_2d(unbiased_values)
    if G.shape != g.shape:
        raise ContractError("paired values must have identical shapes")
    s = None if sigma_a is None else np.atleast_2d(sigma_a)
    err = g - model.predict(G, s)
    rate = model.current_rate()
    alpha = model.alpha + rate * 2 * np.mean(err * G, axis=0)
    beta = model.beta + rate * 2 * np.mean(err, axis=0)
    gamma = model.gamma + rate * 2 * np.mean(err * s, axis=0) if model.use_sigma else model.gamma
    return replace(model, alpha=alpha, beta=beta, gamma=gamma, steps=model.steps + 1)


def corrected_estimate(trace: ForwardTrace, net: LayeredNetwork, model: CorrectorModel) -> GradientEstimate:
    """Straight-through gradients with each binary unit's ``dL/da`` passed through ``model``.

    Only the binary units' own parameters receive the corrected value; the
    signal sent further upstream stays the raw straight-through one.
    """
    grads, dL_da = backward(trace, net, binary="identity")
    corrected = model.predict(_binary_column(trace, dL_da), _binary_column(trace, trace.sigma_a))
    _scatter_unit_grads(trace, corrected, grads)
    return GradientEstimate(grads, "corrected", None, trace.weights)


# perturbation baselines ---------------------------------------------------


def spsa_estimate(
    loss_fn: Callable[[np.ndarray], float],
    theta,
    stream: NoiseStream,
    c: float,
    n_draws: int = 1,
) -> GradientEstimate:
    """Simultaneous-perturbation estimate with symmetric ``+-c`` perturbations.

    Perturbation entries are never zero, so ``1/z_i`` stays bounded.
    """
    if not c > 0:
        raise ContractError(f"perturbation size c must be positive, got {c}")
    theta = np.asarray(theta, dtype=float)
    rows = []
    for _ in range(n_draws):
        z = np.where(stream.uniform(theta.shape[0]) < 0.5, c, -c)
        diff = float(loss_fn(theta + z)) - float(loss_fn(theta - z))
        rows.append(diff / (2 * z))
    return GradientEstimate(np.array(rows), "spsa")


def finite_difference(loss_fn: Callable[[np.ndarray], float], theta, epsilon: float = 1e-5) -> GradientEstimate:
    """Central differences, one coordinate at a time."""
    if not epsilon > 0:
        raise ContractError("epsilon must be positive")
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for i in range(theta.shape[0]):
        e = np.zeros_like(theta)
        e[i] = epsilon
        out[i] = (float(loss_fn(theta + e)) - float(loss_fn(theta - e))) / (2 * epsilon)
    return GradientEstimate(out[None, :], "finite_diff")
