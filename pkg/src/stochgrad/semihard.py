"""Noisy rectifier units: exact fixed-noise gradients and bias control.

With its noise sample held fixed, ``h = max(0, z + a)`` is an ordinary
piecewise-linear function, so standard backprop is exact for the realized
noise.  Units stuck in the flat (inactive) region receive no gradient; the
:class:`FiringRateController` nudges their biases until they fire again.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError
from .estimators import GradientEstimate
from .network import NOISY_RECTIFIER, ForwardTrace, LayeredNetwork, backward
from .stats import running_average


def semihard_backward(trace: ForwardTrace, net: LayeredNetwork) -> GradientEstimate:
    """Exact reverse-mode gradient of the realized loss, noise held fixed."""
    if not net.loss.differentiable:
        raise ContractError(f"loss {net.loss.name!r} is not differentiable")
    grads, _ = backward(trace, net, binary="error")
    return GradientEstimate(grads, "semihard")


@dataclass
class FiringRateController:
    """Moving average of each rectifier unit's activity, with bias nudging.

    A unit whose average falls below ``threshold`` has its bias raised by
    ``bias_step``; one whose average exceeds ``1 - threshold`` has it lowered
    (the second rule is a symmetric extension guarding against units that
    never switch off).  ``threshold`` defaults to half the target rate.
    """

    activity: np.ndarray
    target_rate: float = 0.2
    threshold: Optional[float] = None
    bias_step: float = 0.01
    ma_decay: float = 0.99
    count: int = 0

    def __post_init__(self):
        self.activity = np.asarray(self.activity, dtype=float)
        if self.threshold is None:
            self.threshold = self.target_rate / 2
        for name, lo, hi in (("target_rate", 0, 1), ("threshold", 0, 1), ("ma_decay", 0, 1)):
            v = getattr(self, name)
            if not lo < v < hi:
                raise ContractError(f"{name} must lie in ({lo}, {hi}), got {v}")
        if not self.bias_step > 0:
            raise ContractError("bias_step must be positive")

    @classmethod
    def for_network(cls, net: LayeredNetwork, **kwargs) -> "FiringRateController":
        n = sum(layer.size for layer in net.layers if layer.kind.name == NOISY_RECTIFIER)
        return cls(np.zeros(n), **kwargs)


def _rectifier_layers(net: LayeredNetwork) -> list[int]:
    return [i for i, layer in enumerate(net.layers) if layer.kind.name == NOISY_RECTIFIER]


def activity(traces: Sequence[ForwardTrace], net: LayeredNetwork) -> np.ndarray:
    """Indicator ``h > 0`` per sample and rectifier unit, stacked over traces."""
    layers = _rectifier_layers(net)
    if not layers:
        raise ContractError("network has no noisy rectifier layers")
    return np.vstack([np.hstack([(tr.outputs[i] > 0) for i in layers]).astype(float) for tr in traces])


def adjust_bias(
    ctrl: FiringRateController, net: LayeredNetwork, recent_traces: Sequence[ForwardTrace]
) -> tuple[FiringRateController, LayeredNetwork]:
    """Fold recent activity into the moving averages, then nudge biases."""
    act = activity(recent_traces, net)
    if act.shape[1] != ctrl.activity.shape[0]:
        raise ContractError(f"controller tracks {ctrl.activity.shape[0]} units, network has {act.shape[1]}")
    avg, count = running_average(ctrl.activity, ctrl.count, act, ctrl.ma_decay)
    avg = np.clip(avg, 0.0, 1.0)
    step = np.where(avg < ctrl.threshold, ctrl.bias_step, 0.0) - np.where(avg > 1 - ctrl.threshold, ctrl.bias_step, 0.0)
    pos = 0
    for li in _rectifier_layers(net):
        m = net.layers[li].size
        net = net.with_bias(li, net.layers[li].b + step[pos : pos + m])
        pos += m
    return replace(ctrl, activity=avg, count=count), net


def firing_rates(trace: ForwardTrace, net: LayeredNetwork) -> np.ndarray:
    """Fraction of samples in which each rectifier unit is active."""
    return activity([trace], net).mean(axis=0)
