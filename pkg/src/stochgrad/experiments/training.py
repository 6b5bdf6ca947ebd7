"""SGD training loops driven by any of the estimators."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ActivationOverflowError, CapacityError, ContractError, DivergenceError
from ..estimators import (
    BaselineTracker,
    CorrectorModel,
    centered_estimate,
    centered_with_baseline,
    corrected_estimate,
    corrector_pairs,
    finite_difference,
    spsa_estimate,
    straight_through_backward,
    train_corrector,
    unbiased_estimate,
    update_baseline,
)
from ..network import NOISY_RECTIFIER, LayeredNetwork, draw_noise, forward_with_noise, make_unit_streams
from ..noise import SPSA_STREAM_BASE, NoiseStream
from ..oracle import exact_expected_loss, optimal_baseline
from ..semihard import FiringRateController, adjust_bias
from .config import ExperimentConfig

log = logging.getLogger(__name__)


@dataclass
class TrainingResult:
    columns: list
    rows: list = field(default_factory=list)
    net: Optional[LayeredNetwork] = None

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([np.nan if r[i] is None else r[i] for r in self.rows], dtype=float)

    def steps_to_reach(self, level: float) -> Optional[int]:
        """First step whose oracle expected loss is at or below ``level``."""
        for r in self.rows:
            if r[1] is not None and r[1] <= level:
                return r[0]
        return None


def _rate_columns(net: LayeredNetwork) -> list:
    return [
        f"rate_L{li}_{k}"
        for li, layer in enumerate(net.layers)
        if layer.kind.noisy or layer.kind.name == NOISY_RECTIFIER
        for k in range(layer.size)
    ]


def _rates(trace, net: LayeredNetwork) -> list:
    out = []
    for li, layer in enumerate(net.layers):
        if layer.kind.noisy or layer.kind.name == NOISY_RECTIFIER:
            out.extend(float(v) for v in (trace.outputs[li] > 0).mean(axis=0))
    return out


def _expected_loss(net, x) -> Optional[float]:
    try:
        return exact_expected_loss(net, x).expected_loss
    except (CapacityError, ContractError):
        return None


class _Estimator:
    """Holds the online state (baseline tracker, corrector) of one run."""

    def __init__(self, cfg: ExperimentConfig, net: LayeredNetwork, x):
        self.cfg = cfg
        ec = cfg.estimator
        self.kind = ec.kind
        self.tracker = BaselineTracker.for_units(net.n_binary_units, ec.baseline_decay, ec.epsilon_guard)
        self.corrector = CorrectorModel.identity(
            net.n_binary_units, learning_rate=ec.corrector_lr, lr_decay=ec.corrector_lr_decay, use_sigma=ec.corrector_use_sigma
        )
        self.spsa_stream = NoiseStream(cfg.seed, SPSA_STREAM_BASE)
        self.x = x

    def __call__(self, net: LayeredNetwork, trace, noise) -> np.ndarray:
        ec = self.cfg.estimator
        kind = self.kind
        if kind == "unbiased":
            return unbiased_estimate(trace, net).values
        if kind == "centered":
            if ec.baseline is None:
                est = centered_estimate(trace, self.tracker, net)
                self.tracker = update_baseline(self.tracker, trace)
                return est.values
            baseline = optimal_baseline(net, self.x) if ec.baseline == "optimal" else float(ec.baseline)
            return centered_with_baseline(trace, baseline, net).values
        if kind == "straight_through":
            return straight_through_backward(trace, net).values
        if kind == "corrected":
            est = corrected_estimate(trace, net, self.corrector)
            self.corrector = train_corrector(self.corrector, *corrector_pairs(trace, net))
            return est.values
        fn = lambda t: forward_with_noise(net.with_params(t), self.x, noise).loss.mean()
        if kind == "spsa":
            return spsa_estimate(fn, net.params(), self.spsa_stream, ec.spsa_c).values
        return finite_difference(fn, net.params(), ec.fd_epsilon).values


def _diverged(result: TrainingResult, net, message: str) -> DivergenceError:
    result.net = net
    err = DivergenceError(message)
    err.result = result
    return err


def run_training(cfg: ExperimentConfig) -> TrainingResult:
    """Plain SGD; one row per step with the oracle loss of the pre-update parameters.

    A final row holds the oracle loss after the last update.  A non-finite
    loss or parameter raises :class:`DivergenceError` carrying the partial
    result in its ``result`` attribute.
    """
    net, x = cfg.build()
    streams = make_unit_streams(net, cfg.seed)
    estimator = _Estimator(cfg, net, x)
    ctrl = None
    if cfg.firing_rate_controller is not None and any(l.kind.name == NOISY_RECTIFIER for l in net.layers):
        fc = cfg.firing_rate_controller
        ctrl = FiringRateController.for_network(
            net, target_rate=fc.target_rate, threshold=fc.threshold, bias_step=fc.bias_step, ma_decay=fc.ma_decay
        )
    result = TrainingResult(["step", "expected_loss", "empirical_loss"] + _rate_columns(net))
    for step in range(cfg.training_steps):
        noise = draw_noise(net, streams, cfg.batch_size)
        try:
            trace = forward_with_noise(net, np.repeat(x[None, :], cfg.batch_size, axis=0), noise)
        except ActivationOverflowError as exc:
            raise _diverged(result, net, f"step {step}: {exc}") from exc
        empirical = float(trace.loss.mean())
        result.rows.append([step, _expected_loss(net, x), empirical] + _rates(trace, net))
        if not np.isfinite(empirical):
            raise _diverged(result, net, f"non-finite loss at step {step}")
        grad = estimator(net, trace, noise)
        with np.errstate(over="ignore", invalid="ignore"):
            theta = net.params() - cfg.learning_rate * grad
        if not np.all(np.isfinite(theta)):
            raise _diverged(result, net, f"non-finite parameters after step {step}")
        net = net.with_params(theta)
        if ctrl is not None:
            ctrl, net = adjust_bias(ctrl, net, [trace])
    final = [cfg.training_steps, _expected_loss(net, x), None] + [None] * (len(result.columns) - 3)
    result.rows.append(final)
    result.net = net
    return result
