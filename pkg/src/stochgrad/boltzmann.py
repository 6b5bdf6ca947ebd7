"""Small Boltzmann machines, Gibbs sampling and their gradient estimators.

The pair estimator for a (clamped, free) sample pair is ``X+_i - X-_i`` for
biases and ``X+_i X+_j - X-_i X-_j`` for weights.  Labelling clamped
samples with reward +1 and free samples with -1, the unnormalized reward
correlator ``sum X R`` reproduces it exactly.

Parameter layout: biases ``b_0 .. b_{n-1}`` followed by the upper-triangle
weights ``W_ij`` (``i < j``) in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, ContractError, DegenerateInputError
from .estimators import GradientEstimate
from .network import sigmoid
from .noise import NoiseStream

MAX_BM_UNITS = 16


@dataclass(frozen=True, eq=False)
class BoltzmannMachine:
    W: np.ndarray
    b: np.ndarray
    visible: tuple
    hidden: tuple = ()

    def __post_init__(self):
        W = np.array(self.W, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).reshape(-1)
        n = b.shape[0]
        if W.shape != (n, n):
            raise ContractError(f"W must be {n}x{n}, got {W.shape}")
        if not np.array_equal(W, W.T):
            raise ContractError("W must be symmetric")
        if np.any(np.diag(W) != 0):
            raise ContractError("W must have a zero diagonal")
        vis, hid = tuple(int(i) for i in self.visible), tuple(int(i) for i in self.hidden)
        if set(vis) & set(hid):
            raise ContractError("visible and hidden index sets overlap")
        if sorted(vis + hid) != list(range(n)):
            raise ContractError("visible and hidden indices must partition the units")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "visible", vis)
        object.__setattr__(self, "hidden", hid)

    @property
    def n_units(self) -> int:
        return self.b.shape[0]

    def param_ids(self) -> list[str]:
        n = self.n_units
        return [f"b[{i}]" for i in range(n)] + [f"W[{i},{j}]" for i in range(n) for j in range(i + 1, n)]

    @classmethod
    def random(cls, n_visible: int, n_hidden: int, stream: NoiseStream, scale: float = 0.5) -> "BoltzmannMachine":
        n = n_visible + n_hidden
        upper = np.triu(stream.gaussian(scale, n * n).reshape(n, n), 1)
        b = stream.gaussian(scale, n)
        return cls(upper + upper.T, b, tuple(range(n_visible)), tuple(range(n_visible, n)))

    @classmethod
    def from_dict(cls, doc: dict) -> "BoltzmannMachine":
        return cls(doc["weights"], doc["biases"], tuple(doc["visible"]), tuple(doc.get("hidden", ())))


def _clamp_map(bm: BoltzmannMachine, clamp) -> dict:
    if clamp is None:
        return {}
    if not isinstance(clamp, dict):
        values = np.asarray(clamp).reshape(-1)
        if values.shape[0] != len(bm.visible):
            raise ContractError(f"clamp needs {len(bm.visible)} visible values, got {values.shape[0]}")
        clamp = dict(zip(bm.visible, values))
    for i in clamp:
        if i not in bm.visible:
            raise ContractError(f"unit {i} is not visible and cannot be clamped")
    return {int(i): float(v) for i, v in clamp.items()}


def gibbs_step(bm: BoltzmannMachine, state, stream: NoiseStream, clamp=None) -> np.ndarray:
    """One ascending sweep over the unclamped units.

    ``state`` may be a single configuration or a ``(chains, n)`` batch;
    each unit update draws one uniform per chain.  ``clamp`` is a dict
    ``{visible index: value}`` or a vector over ``bm.visible``.
    """
    state = np.array(state, dtype=float)
    single = state.ndim == 1
    X = state[None, :] if single else state
    if X.shape[1] != bm.n_units:
        raise ContractError(f"state has {X.shape[1]} units, machine has {bm.n_units}")
    fixed = _clamp_map(bm, clamp)
    for i, v in fixed.items():
        X[:, i] = v
    C = X.shape[0]
    for i in range(bm.n_units):
        if i in fixed:
            continue
        a = bm.b[i] + X @ bm.W[i]
        u = stream.uniform(C)
        X[:, i] = (u < sigmoid(a)).astype(float)
    return X[0] if single else X


def gibbs_chain(
    bm: BoltzmannMachine,
    stream: NoiseStream,
    n_samples: int,
    *,
    n_chains: int = 1,
    burn_in: int = 1000,
    thin: int = 10,
    clamp=None,
    init=None,
) -> np.ndarray:
    """Samples of shape ``(n_samples, n_chains, n)`` after burn-in, every ``thin`` sweeps."""
    X = np.zeros((n_chains, bm.n_units)) if init is None else np.array(init, dtype=float).reshape(n_chains, -1)
    for _ in range(burn_in):
        X = gibbs_step(bm, X, stream, clamp)
    out = np.empty((n_samples, n_chains, bm.n_units))
    for k in range(n_samples):
        for _ in range(thin):
            X = gibbs_step(bm, X, stream, clamp)
        out[k] = X
    return out


def _pair_products(X: np.ndarray) -> np.ndarray:
    n = X.shape[-1]
    iu = np.triu_indices(n, 1)
    return (X[..., :, None] * X[..., None, :])[..., iu[0], iu[1]]


def bm_pair_gradient(positive, negative) -> GradientEstimate:
    """Pair estimator; rows of ``positive``/``negative`` are matched pairs."""
    P = np.atleast_2d(np.asarray(positive, dtype=np.int64))
    N = np.atleast_2d(np.asarray(negative, dtype=np.int64))
    if P.shape != N.shape:
        raise ContractError("positive and negative samples must have equal shapes")
    est = np.hstack([P - N, _pair_products(P) - _pair_products(N)])
    return GradientEstimate(est, "bm_pair")


@dataclass(frozen=True)
class RewardedSample:
    state: tuple
    reward: int

    def __post_init__(self):
        if self.reward not in (1, -1):
            raise ContractError(f"reward must be +1 or -1, got {self.reward}")
        object.__setattr__(self, "state", tuple(int(v) for v in self.state))


def rewarded_stream(positive, negative) -> list[RewardedSample]:
    """Clamped samples with reward +1 followed by free samples with reward -1."""
    return [RewardedSample(tuple(x), 1) for x in np.atleast_2d(positive)] + [
        RewardedSample(tuple(x), -1) for x in np.atleast_2d(negative)
    ]


def reward_correlator_gradient(samples: Sequence[RewardedSample]) -> GradientEstimate:
    """``sum X R`` and ``sum X_i X_j R``, divided by the mean count of each reward sign."""
    if not samples:
        raise DegenerateInputError("no samples")
    X = np.array([s.state for s in samples], dtype=np.int64)
    R = np.array([s.reward for s in samples], dtype=np.int64)
    n_pos = int(np.sum(R == 1))
    n_neg = R.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError("reward correlator needs both positive and negative samples")
    total = np.concatenate([R @ X, R @ _pair_products(X)])
    n_pairs = (n_pos + n_neg) / 2
    return GradientEstimate(total[None, :] / n_pairs, "reward_correlator")


def _enumerate(bm: BoltzmannMachine):
    if bm.n_units > MAX_BM_UNITS:
        raise CapacityError(f"{bm.n_units} units exceed the enumeration cap of {MAX_BM_UNITS}")
    states = np.array(list(product((0.0, 1.0), repeat=bm.n_units)))
    # Zero diagonal makes 0.5 * x W x equal to sum_{i<j} W_ij x_i x_j.
    neg_energy = states @ bm.b + 0.5 * np.einsum("ki,ij,kj->k", states, bm.W, states)
    return states, neg_energy


def boltzmann_distribution(bm: BoltzmannMachine):
    """All states and their exact probabilities."""
    states, ne = _enumerate(bm)
    return states, np.exp(ne - logsumexp(ne))


def _stats(states, probs):
    return np.concatenate([probs @ states, probs @ _pair_products(states)])


def exact_bm_loglik_gradient(bm: BoltzmannMachine, v) -> GradientEstimate:
    """``E[X|V=v] - E[X]`` and ``E[X_i X_j|V=v] - E[X_i X_j]`` by enumeration."""
    states, ne = _enumerate(bm)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != len(bm.visible):
        raise ContractError(f"v needs {len(bm.visible)} values, got {v.shape[0]}")
    free = np.exp(ne - logsumexp(ne))
    mask = np.all(states[:, list(bm.visible)] == v, axis=1)
    ne_c = np.where(mask, ne, -np.inf)
    clamped = np.exp(ne_c - logsumexp(ne_c))
    return GradientEstimate((_stats(states, clamped) - _stats(states, free))[None, :], "bm_exact")


def total_variation(samples, bm: BoltzmannMachine) -> float:
    """TV distance between the empirical state distribution and the exact one."""
    states, probs = boltzmann_distribution(bm)
    X = np.asarray(samples).reshape(-1, bm.n_units).astype(np.int64)
    codes = X @ (1 << np.arange(bm.n_units)[::-1])
    emp = np.bincount(codes, minlength=2**bm.n_units) / X.shape[0]
    return 0.5 * float(np.abs(emp - probs).sum())


def pair_gradient_mc(
    bm: BoltzmannMachine,
    v,
    stream: NoiseStream,
    *,
    n_chains: int = 200,
    n_samples: int = 50,
    burn_in: int = 1000,
    thin: int = 10,
    clamp_stream: Optional[NoiseStream] = None,
):
    """Monte Carlo pair and correlator estimates from clamped and free chains.

    Returns ``(pair, correlator, sem)`` where ``sem`` comes from the spread
    of per-chain means, so autocorrelation within a chain cannot shrink it.
    """
    pos_stream = clamp_stream if clamp_stream is not None else NoiseStream(stream.seed, stream.stream_id + 1)
    pos = gibbs_chain(bm, pos_stream, n_samples, n_chains=n_chains, burn_in=burn_in, thin=thin, clamp=v)
    neg = gibbs_chain(bm, stream, n_samples, n_chains=n_chains, burn_in=burn_in, thin=thin)
    flat_pos = pos.reshape(-1, bm.n_units)
    flat_neg = neg.reshape(-1, bm.n_units)
    pair = bm_pair_gradient(flat_pos, flat_neg)
    corr = reward_correlator_gradient(rewarded_stream(flat_pos, flat_neg))
    chain_means = pair.samples.reshape(n_samples, n_chains, -1).mean(axis=0)
    sem = chain_means.std(axis=0, ddof=1) / np.sqrt(n_chains)
    return pair, corr, sem
