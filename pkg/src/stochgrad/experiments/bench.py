"""Bias/variance benchmark of one estimator against the enumeration oracle."""

from __future__ import annotations

import copy
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import CapacityError, ConfigError, ContractError
from ..estimators import (
    BaselineTracker,
    CorrectorModel,
    GradientEstimate,
    centered_estimate,
    centered_with_baseline,
    corrected_estimate,
    corrector_pairs,
    spsa_estimate,
    straight_through_backward,
    train_corrector,
    unbiased_estimate,
    update_baseline,
)
from ..network import LayeredNetwork, draw_noise, forward, forward_with_noise, make_unit_streams
from ..noise import SPSA_STREAM_BASE, NoiseStream
from ..oracle import exact_gradient, optimal_baseline
from .config import ExperimentConfig
from .tasks import build_task

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("param_id", "estimator_mean", "estimator_var", "sem", "oracle_grad", "bias", "n_samples")
SWEEP_COLUMNS = ("n_units", "mean_estimator_var", "max_estimator_var", "n_samples")


@dataclass
class EstimatorReport:
    estimator: str
    param_ids: list
    mean: np.ndarray
    variance: np.ndarray
    sem: np.ndarray
    n_samples: int
    oracle: Optional[np.ndarray] = None
    oracle_note: str = "exact"
    wall_clock: float = 0.0
    sweep: list = field(default_factory=list)

    @property
    def bias(self) -> Optional[np.ndarray]:
        return None if self.oracle is None else self.mean - self.oracle

    def rows(self):
        bias = self.bias
        for i, pid in enumerate(self.param_ids):
            yield (
                pid,
                self.mean[i],
                self.variance[i],
                self.sem[i],
                None if self.oracle is None else self.oracle[i],
                None if bias is None else bias[i],
                self.n_samples,
            )


def _sampled_estimates(cfg: ExperimentConfig, net: LayeredNetwork, x: np.ndarray, n: int) -> GradientEstimate:
    """Draw ``n`` traces and return the per-trace estimates of the configured kind."""
    ec = cfg.estimator
    streams = make_unit_streams(net, cfg.seed)
    chunk = cfg.chunk_size
    kind = ec.kind
    parts, mask = [], None

    def chunks(total):
        done = 0
        while done < total:
            k = min(chunk, total - done)
            yield k
            done += k

    if kind == "unbiased":
        for k in chunks(n):
            est = unbiased_estimate(forward(net, x, streams, k), net)
            parts.append(est.samples)
            mask = est.estimated
    elif kind == "centered":
        if ec.baseline is None:
            tracker = BaselineTracker.for_units(net.n_binary_units, ec.baseline_decay, ec.epsilon_guard)
            for k in chunks(ec.baseline_warmup):
                tracker = update_baseline(tracker, forward(net, x, streams, k))
            for k in chunks(n):
                tr = forward(net, x, streams, k)
                est = centered_estimate(tr, tracker, net)
                tracker = update_baseline(tracker, tr)
                parts.append(est.samples)
                mask = est.estimated
        else:
            baseline = optimal_baseline(net, x) if ec.baseline == "optimal" else float(ec.baseline)
            for k in chunks(n):
                est = centered_with_baseline(forward(net, x, streams, k), baseline, net)
                parts.append(est.samples)
                mask = est.estimated
    elif kind == "straight_through":
        for k in chunks(n):
            parts.append(straight_through_backward(forward(net, x, streams, k), net).samples)
    elif kind == "corrected":
        model = CorrectorModel.identity(
            net.n_binary_units,
            learning_rate=ec.corrector_lr,
            lr_decay=ec.corrector_lr_decay,
            use_sigma=ec.corrector_use_sigma,
        )
        for _ in range(ec.corrector_warmup):
            model = train_corrector(model, *corrector_pairs(forward(net, x, streams, cfg.batch_size), net))
        for k in chunks(n):
            parts.append(corrected_estimate(forward(net, x, streams, k), net, model).samples)
    elif kind == "finite_diff":
        theta = net.params()
        for k in chunks(n):
            noise = draw_noise(net, streams, k)
            cols = []
            for i in range(theta.shape[0]):
                e = np.zeros_like(theta)
                e[i] = ec.fd_epsilon
                up = forward_with_noise(net.with_params(theta + e), x, noise).loss
                dn = forward_with_noise(net.with_params(theta - e), x, noise).loss
                cols.append((up - dn) / (2 * ec.fd_epsilon))
            parts.append(np.column_stack(cols))
    elif kind == "spsa":
        theta = net.params()
        spsa_stream = NoiseStream(cfg.seed, SPSA_STREAM_BASE)
        for _ in range(n):
            noise = draw_noise(net, streams, 1)
            fn = lambda t: forward_with_noise(net.with_params(t), x, noise).loss[0]
            parts.append(spsa_estimate(fn, theta, spsa_stream, ec.spsa_c).samples)
    else:  # pragma: no cover - validated upstream
        raise ConfigError(f"unknown estimator {kind!r}")
    return GradientEstimate(np.vstack(parts), kind, mask)


def _resize_first_binary(doc: dict, width: int) -> dict:
    doc = copy.deepcopy(doc)
    layers = doc["layers"]
    for i, ld in enumerate(layers):
        if ld.get("kind", "stochastic_binary") == "stochastic_binary":
            if "weights" in ld or (i + 1 < len(layers) and "weights" in layers[i + 1]):
                raise ConfigError("sweep_units needs generated weights around the swept layer")
            ld["size"] = width
            ld.pop("biases", None)
            return doc
    raise ConfigError("sweep_units needs a stochastic binary layer")


def run_variance_bench(cfg: ExperimentConfig) -> EstimatorReport:
    net, x = cfg.build()
    if cfg.estimator.kind in ("unbiased", "centered", "corrected") and net.n_binary_units == 0:
        raise ConfigError(f"estimator {cfg.estimator.kind!r} needs stochastic binary units")
    t0 = time.perf_counter()
    est = _sampled_estimates(cfg, net, x, cfg.n_samples)
    elapsed = time.perf_counter() - t0
    try:
        oracle, note = exact_gradient(net, x, cfg.estimator.fd_epsilon).values, "exact"
    except (CapacityError, ContractError) as exc:
        oracle, note = None, f"unavailable ({exc})"
        log.warning("oracle unavailable: %s", exc)
    keep = est.estimated
    ids = [pid for pid, k in zip(net.param_ids(), keep) if k]
    report = EstimatorReport(
        cfg.estimator.kind,
        ids,
        est.values[keep],
        est.samples.var(axis=0, ddof=1)[keep] if est.samples_used > 1 else np.zeros(keep.sum()),
        est.sem[keep],
        est.samples_used,
        None if oracle is None else oracle[keep],
        note if keep.all() else f"{note}; not estimated: {', '.join(p for p, k in zip(net.param_ids(), keep) if not k)}",
        elapsed,
    )
    if cfg.sweep_units:
        base_doc = cfg.network if cfg.network is not None else build_task(cfg.task)[0]
        for width in cfg.sweep_units:
            sub = copy.copy(cfg)
            sub.network = _resize_first_binary(base_doc, int(width))
            snet, sx = sub.build()
            sest = _sampled_estimates(sub, snet, sx, cfg.n_samples)
            var = sest.samples.var(axis=0, ddof=1)[sest.estimated]
            report.sweep.append((int(width), float(var.mean()), float(var.max()), sest.samples_used))
    log.info("estimate %s: %d samples in %.3fs", cfg.estimator.kind, est.samples_used, elapsed)
    return report
