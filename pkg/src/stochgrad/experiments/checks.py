"""The ``oracle`` and ``bm-check`` reports."""

from __future__ import annotations

import numpy as np

from ..boltzmann import BoltzmannMachine, exact_bm_loglik_gradient, pair_gradient_mc
from ..noise import GIBBS_STREAM_BASE, NoiseStream
from ..oracle import exact_expected_loss, exact_gradient
from .config import BoltzmannConfig, ExperimentConfig

ORACLE_COLUMNS = ("name", "value")
BM_COLUMNS = ("param_id", "exact_grad", "pair_mean", "pair_sem", "correlator_mean", "correlator_sem", "n_samples")


def oracle_rows(cfg: ExperimentConfig):
    net, x = cfg.build()
    expected = exact_expected_loss(net, x).expected_loss
    grad = exact_gradient(net, x, cfg.estimator.fd_epsilon).values
    return [("expected_loss", expected)] + list(zip(net.param_ids(), grad))


def build_machine(bc: BoltzmannConfig, seed: int) -> BoltzmannMachine:
    n = bc.n_visible + bc.n_hidden
    if bc.weights is None or bc.biases is None:
        bm = BoltzmannMachine.random(bc.n_visible, bc.n_hidden, NoiseStream(seed, GIBBS_STREAM_BASE - 1), bc.init_scale)
    else:
        bm = BoltzmannMachine(bc.weights, bc.biases, tuple(range(bc.n_visible)), tuple(range(bc.n_visible, n)))
    return bm


def bm_rows(cfg: ExperimentConfig):
    bc = cfg.boltzmann or BoltzmannConfig()
    bm = build_machine(bc, cfg.seed)
    v = np.ones(bc.n_visible) if bc.v is None else np.asarray(bc.v, dtype=float)
    exact = exact_bm_loglik_gradient(bm, v).values
    pair, corr, sem = pair_gradient_mc(
        bm,
        v,
        NoiseStream(cfg.seed, GIBBS_STREAM_BASE),
        n_chains=bc.n_chains,
        n_samples=bc.n_samples,
        burn_in=bc.burn_in,
        thin=bc.thin,
    )
    # Both estimates are built from the same samples, so they share one SEM.
    n = pair.samples_used
    return [
        (pid, exact[i], pair.values[i], sem[i], corr.values[i], sem[i], n)
        for i, pid in enumerate(bm.param_ids())
    ]
