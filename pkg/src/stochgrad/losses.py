"""Registry of scalar losses over final-layer outputs.

A loss maps outputs ``h`` of shape ``(batch, m)`` and a target vector of
length ``m`` to one value per row.  Differentiable losses also carry
``dL/dh``; the straight-through and semi-hard backward passes need it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ContractError

# Cross-entropy reads outputs through p = eps + (1 - 2 eps) h so that hard
# 0/1 outputs give a finite loss and a non-vanishing derivative.
CE_EPS = 1e-3


@dataclass(frozen=True)
class LossFunction:
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None


def _squared_error(h, t):
    return np.sum((h - t) ** 2, axis=1)


def _squared_error_grad(h, t):
    return 2.0 * (h - t)


def _check_unit_interval(h):
    if np.any(h < 0) or np.any(h > 1):
        raise ContractError("cross_entropy requires outputs in [0, 1]")


def _cross_entropy(h, t):
    _check_unit_interval(h)
    p = CE_EPS + (1 - 2 * CE_EPS) * h
    return -np.sum(t * np.log(p) + (1 - t) * np.log1p(-p), axis=1)


def _cross_entropy_grad(h, t):
    _check_unit_interval(h)
    p = CE_EPS + (1 - 2 * CE_EPS) * h
    return -(1 - 2 * CE_EPS) * (t / p - (1 - t) / (1 - p))


def _linear(h, t):
    return h @ t


def _linear_grad(h, t):
    return np.broadcast_to(t, h.shape).copy()


def _xor_parts(h, t):
    if h.shape[1] != 2:
        raise ContractError("xor_target needs exactly two outputs")
    # Multilinear extension of XOR; agrees with XOR on {0,1}^2.
    y = h[:, 0] + h[:, 1] - 2 * h[:, 0] * h[:, 1]
    return y, y - t[0]


def _xor_target(h, t):
    _, r = _xor_parts(h, t)
    return r**2


def _xor_target_grad(h, t):
    _, r = _xor_parts(h, t)
    g = np.empty_like(h)
    g[:, 0] = 2 * r * (1 - 2 * h[:, 1])
    g[:, 1] = 2 * r * (1 - 2 * h[:, 0])
    return g


_REGISTRY: dict[str, LossFunction] = {
    "squared_error": LossFunction(_squared_error, _squared_error_grad),
    "cross_entropy": LossFunction(_cross_entropy, _cross_entropy_grad),
    "linear": LossFunction(_linear, _linear_grad),
    "xor_target": LossFunction(_xor_target, _xor_target_grad),
}
BUILTIN_LOSSES = tuple(_REGISTRY)


def register_loss(name: str, value, grad=None, *, overwrite: bool = False) -> None:
    """Add a loss closure.  ``value(h, target)`` must return one value per row."""
    if name in _REGISTRY and not overwrite:
        raise ContractError(f"loss {name!r} already registered")
    _REGISTRY[name] = LossFunction(value, grad)


def unregister_loss(name: str) -> None:
    if name in BUILTIN_LOSSES:
        raise ContractError(f"cannot remove built-in loss {name!r}")
    _REGISTRY.pop(name, None)


def available_losses() -> list[str]:
    return sorted(_REGISTRY)


def get_loss(name: str) -> LossFunction:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ContractError(f"unknown loss {name!r}; valid options: {', '.join(available_losses())}") from None


@dataclass(frozen=True, eq=False)
class LossSpec:
    name: str
    target: np.ndarray

    def __post_init__(self):
        get_loss(self.name)
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float).reshape(-1))

    def __eq__(self, other):
        return (
            isinstance(other, LossSpec)
            and self.name == other.name
            and np.array_equal(self.target, other.target)
        )

    @property
    def differentiable(self) -> bool:
        return get_loss(self.name).grad is not None

    def value(self, h: np.ndarray) -> np.ndarray:
        return np.asarray(get_loss(self.name).value(np.atleast_2d(h), self.target), dtype=float)

    def grad(self, h: np.ndarray) -> np.ndarray:
        fn = get_loss(self.name).grad
        if fn is None:
            raise ContractError(f"loss {self.name!r} has no registered derivative")
        return np.asarray(fn(np.atleast_2d(h), self.target), dtype=float)

    def to_dict(self) -> dict:
        return {"name": self.name, "target": self.target.tolist()}
