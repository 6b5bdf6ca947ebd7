import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochgrad.boltzmann import (
    BoltzmannMachine,
    RewardedSample,
    bm_pair_gradient,
    boltzmann_distribution,
    exact_bm_loglik_gradient,
    gibbs_chain,
    gibbs_step,
    pair_gradient_mc,
    reward_correlator_gradient,
    rewarded_stream,
    total_variation,
)
from stochgrad.errors import CapacityError, ContractError, DegenerateInputError
from stochgrad.network import sigmoid
from stochgrad.noise import NoiseStream

binary_vectors = st.lists(st.integers(0, 1), min_size=4, max_size=4)


def machine(n_visible, n_hidden, seed, scale=0.5):
    return BoltzmannMachine.random(n_visible, n_hidden, NoiseStream(seed, 5), scale)


def test_asymmetric_weights_rejected():
    with pytest.raises(ContractError):
        BoltzmannMachine([[0, 1], [2, 0]], [0, 0], (0, 1))


def test_nonzero_diagonal_rejected():
    with pytest.raises(ContractError):
        BoltzmannMachine([[1, 0], [0, 0]], [0, 0], (0, 1))


def test_index_sets_must_partition():
    with pytest.raises(ContractError):
        BoltzmannMachine(np.zeros((3, 3)), np.zeros(3), (0, 1), (1, 2))


def test_clamping_hidden_unit_rejected():
    bm = BoltzmannMachine(np.zeros((2, 2)), np.zeros(2), (0,), (1,))
    with pytest.raises(ContractError):
        gibbs_step(bm, [0, 0], NoiseStream(0, 0), clamp={1: 1})


def test_fair_coin_marginals():
    bm = BoltzmannMachine(np.zeros((2, 2)), np.zeros(2), (0, 1))
    X = gibbs_chain(bm, NoiseStream(1, 0), 100_000, burn_in=0, thin=1)[:, 0, :]
    sem = np.sqrt(0.25 / X.shape[0])
    assert np.all(np.abs(X.mean(axis=0) - 0.5) < 3 * sem)


def test_saturated_bias_fires_after_one_sweep():
    bm = BoltzmannMachine(np.zeros((3, 3)), [20.0, 0.0, 0.0], (0, 1, 2))
    X = gibbs_step(bm, np.zeros((1000, 3)), NoiseStream(2, 0))
    assert X[:, 0].mean() == 1.0


def test_clamped_units_stay_put():
    bm = machine(2, 2, 0)
    X = gibbs_chain(bm, NoiseStream(3, 0), 50, n_chains=4, burn_in=5, thin=1, clamp=[1, 0])
    assert np.all(X[..., 0] == 1) and np.all(X[..., 1] == 0)


def test_three_unit_gibbs_total_variation():
    bm = machine(3, 0, 7)
    X = gibbs_chain(bm, NoiseStream(4, 0), 200, n_chains=100, burn_in=100, thin=2)
    assert total_variation(X, bm) < 0.02


def test_distribution_sums_to_one():
    _, p = boltzmann_distribution(machine(2, 2, 3))
    assert abs(p.sum() - 1) < 1e-12 and p.shape == (16,)


def test_pair_gradient_identical_phases_is_zero():
    est = bm_pair_gradient([1, 0, 1], [1, 0, 1])
    assert np.all(est.samples == 0)


def test_pair_gradient_direct_evaluation():
    est = bm_pair_gradient([1, 1], [0, 0])
    assert np.array_equal(est.samples[0], [1, 1, 1])


def test_pair_gradient_shape_mismatch():
    with pytest.raises(ContractError):
        bm_pair_gradient([1, 0], [1, 0, 0])


@settings(max_examples=200)
@given(pos=binary_vectors, neg=binary_vectors)
def test_correlator_equals_pair_estimator_on_one_pair(pos, neg):
    corr = reward_correlator_gradient([RewardedSample(pos, 1), RewardedSample(neg, -1)])
    pair = bm_pair_gradient(pos, neg)
    assert np.array_equal(corr.samples, pair.samples)


def test_correlator_invariant_to_sample_order():
    s = NoiseStream(0, 0)
    pos = (s.uniform((20, 3)) < 0.5).astype(int)
    neg = (s.uniform((20, 3)) < 0.5).astype(int)
    stream = rewarded_stream(pos, neg)
    order = np.argsort(s.uniform(len(stream)))
    shuffled = [stream[i] for i in order]
    assert np.array_equal(reward_correlator_gradient(stream).samples, reward_correlator_gradient(shuffled).samples)


def test_correlator_needs_both_signs():
    with pytest.raises(DegenerateInputError):
        reward_correlator_gradient([RewardedSample((1, 0), 1), RewardedSample((0, 1), 1)])


def test_reward_must_be_plus_or_minus_one():
    with pytest.raises(ContractError):
        RewardedSample((1, 0), 0)


def test_single_visible_unit_closed_form():
    b = 0.7
    bm = BoltzmannMachine([[0.0]], [b], (0,))
    assert abs(exact_bm_loglik_gradient(bm, [1]).values[0] - (1 - sigmoid(b))) < 1e-12


def test_zero_machine_clamped_unit():
    bm = BoltzmannMachine(np.zeros((3, 3)), np.zeros(3), (0,), (1, 2))
    g = exact_bm_loglik_gradient(bm, [1]).values
    assert abs(g[0] - 0.5) < 1e-12
    assert np.all(np.abs(g[1:3]) < 1e-12)


def test_model_averaged_gradient_vanishes():
    bm = machine(2, 2, 9)
    states, p = boltzmann_distribution(bm)
    vis = states[:, list(bm.visible)]
    total = np.zeros(len(bm.param_ids()))
    for v in ([0, 0], [0, 1], [1, 0], [1, 1]):
        pv = p[np.all(vis == v, axis=1)].sum()
        total += pv * exact_bm_loglik_gradient(bm, v).values
    assert np.all(np.abs(total) < 1e-12)


def test_capacity_limit():
    bm = BoltzmannMachine(np.zeros((17, 17)), np.zeros(17), tuple(range(17)))
    with pytest.raises(CapacityError):
        exact_bm_loglik_gradient(bm, np.zeros(17))


def test_monte_carlo_pair_gradient_two_units():
    bm = machine(1, 1, 11, scale=1.0)
    pair, corr, sem = pair_gradient_mc(bm, [1], NoiseStream(6, 0), n_chains=200, n_samples=50, burn_in=50, thin=2)
    exact = exact_bm_loglik_gradient(bm, [1]).values
    assert np.all(np.abs(pair.values - exact) <= 4 * sem)
    assert np.allclose(corr.values, pair.values, rtol=0, atol=1e-15)
