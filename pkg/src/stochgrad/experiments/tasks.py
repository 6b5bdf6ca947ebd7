"""Desk-scale training tasks, small enough for the enumeration oracle to score."""

from __future__ import annotations

MATCH_PROBABILITY_TARGET = 0.8


def _match_probability():
    # one bias-only binary unit, L = (h - p*)^2
    net = {
        "input_size": 0,
        "layers": [{"size": 1, "kind": "stochastic_binary", "weights": [[]], "biases": [0.0]}],
        "loss": {"name": "squared_error", "target": [MATCH_PROBABILITY_TARGET]},
    }
    return net, []


def _xor_target():
    net = {
        "input_size": 2,
        "layers": [{"size": 2, "kind": "stochastic_binary"}],
        "loss": {"name": "xor_target", "target": [1.0]},
    }
    return net, [1.0, -1.0]


def _sparse_autoencoder():
    x = [1.0, 0.0, 1.0, 0.0]
    net = {
        "input_size": 4,
        "layers": [
            {"size": 3, "kind": "stochastic_binary", "biases": [-1.0, -1.0, -1.0]},
            {"size": 4, "kind": "deterministic_sigmoid"},
        ],
        "loss": {"name": "cross_entropy", "target": x},
    }
    return net, x


TASKS = {
    "match-probability": _match_probability,
    "xor-target": _xor_target,
    "sparse-autoencoder": _sparse_autoencoder,
}


def build_task(name: str):
    """Network description and input vector for a registered task."""
    return TASKS[name]()
