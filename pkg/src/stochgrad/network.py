"""Layered feedforward networks of affine units and their forward traces.

Each layer computes ``a = b + W x`` and applies one of three nonlinearities:

* deterministic sigmoid, ``h = sigmoid(a)``;
* stochastic binary, ``h = 1`` iff ``z < sigmoid(a)`` with ``z ~ U[0, 1)``,
  so that ``P(h = 1) = sigmoid(a)`` (a tie ``z == sigmoid(a)`` gives 0);
* noisy rectifier, ``h = max(0, z + a)`` with ``z ~ N(0, sigma^2)``.

All passes are batched: a trace stores one row per sample and everything an
estimator needs (inputs, activations, sigmoid of activations, noise, outputs
and the realized loss), so no estimator has to re-run the network.

Parameters are flattened layer by layer, ``W`` row-major followed by ``b``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import ActivationOverflowError, ContractError
from .losses import LossSpec
from .noise import INIT_STREAM_BASE, NoiseStream

DETERMINISTIC_SIGMOID = "deterministic_sigmoid"
STOCHASTIC_BINARY = "stochastic_binary"
NOISY_RECTIFIER = "noisy_rectifier"
UNIT_KINDS = (DETERMINISTIC_SIGMOID, STOCHASTIC_BINARY, NOISY_RECTIFIER)


def sigmoid(u):
    """Logistic function, stable over the whole float range."""
    return expit(u)


@dataclass(frozen=True)
class UnitKind:
    name: str
    sigma: float = 0.0

    def __post_init__(self):
        if self.name not in UNIT_KINDS:
            raise ContractError(f"unknown unit kind {self.name!r}; valid options: {', '.join(UNIT_KINDS)}")
        if not self.sigma >= 0:
            raise ContractError(f"noisy rectifier sigma must be >= 0, got {self.sigma}")
        if self.name != NOISY_RECTIFIER and self.sigma != 0:
            raise ContractError(f"sigma only applies to {NOISY_RECTIFIER}")

    @property
    def binary(self) -> bool:
        return self.name == STOCHASTIC_BINARY

    @property
    def noisy(self) -> bool:
        return self.name == STOCHASTIC_BINARY or (self.name == NOISY_RECTIFIER and self.sigma > 0)


def noisy_rectifier(sigma: float) -> UnitKind:
    return UnitKind(NOISY_RECTIFIER, float(sigma))


SIGMOID = UnitKind(DETERMINISTIC_SIGMOID)
BINARY = UnitKind(STOCHASTIC_BINARY)


@dataclass(frozen=True, eq=False)
class Layer:
    W: np.ndarray
    b: np.ndarray
    kind: UnitKind

    def __post_init__(self):
        W = np.array(self.W, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).reshape(-1)
        if W.shape[0] != b.shape[0]:
            raise ContractError(f"weight rows ({W.shape[0]}) do not match bias length ({b.shape[0]})")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ContractError("layer parameters must be finite")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def size(self) -> int:
        return self.b.shape[0]

    @property
    def fan_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_params(self) -> int:
        return self.W.size + self.b.size


@dataclass(frozen=True, eq=False)
class LayeredNetwork:
    input_size: int
    layers: tuple
    loss: LossSpec

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ContractError("network needs at least one layer")
        width = self.input_size
        for i, layer in enumerate(self.layers):
            if layer.fan_in != width:
                raise ContractError(f"layer {i} expects {layer.fan_in} inputs but receives {width}")
            width = layer.size

    def __eq__(self, other):
        if not isinstance(other, LayeredNetwork):
            return NotImplemented
        return (
            self.input_size == other.input_size
            and self.loss == other.loss
            and len(self.layers) == len(other.layers)
            and all(
                a.kind == b.kind and np.array_equal(a.W, b.W) and np.array_equal(a.b, b.b)
                for a, b in zip(self.layers, other.layers)
            )
        )

    @property
    def output_size(self) -> int:
        return self.layers[-1].size

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    @property
    def n_units(self) -> int:
        return sum(layer.size for layer in self.layers)

    @property
    def n_binary_units(self) -> int:
        return sum(layer.size for layer in self.layers if layer.kind.binary)

    def param_offsets(self) -> list[int]:
        """Start offset of each layer's block in the flat parameter vector."""
        offsets, pos = [], 0
        for layer in self.layers:
            offsets.append(pos)
            pos += layer.n_params
        return offsets

    def unit_offsets(self) -> list[int]:
        offsets, pos = [], 0
        for layer in self.layers:
            offsets.append(pos)
            pos += layer.size
        return offsets

    def binary_unit_offsets(self) -> list[Optional[int]]:
        """Index of each binary layer's first unit among all binary units."""
        offsets, pos = [], 0
        for layer in self.layers:
            if layer.kind.binary:
                offsets.append(pos)
                pos += layer.size
            else:
                offsets.append(None)
        return offsets

    def params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([l.W.ravel(), l.b]) for l in self.layers])

    def with_params(self, theta) -> "LayeredNetwork":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ContractError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        layers, pos = [], 0
        for layer in self.layers:
            nw = layer.W.size
            W = theta[pos : pos + nw].reshape(layer.W.shape)
            b = theta[pos + nw : pos + layer.n_params]
            layers.append(Layer(W, b, layer.kind))
            pos += layer.n_params
        return replace(self, layers=tuple(layers))

    def with_bias(self, layer_index: int, b) -> "LayeredNetwork":
        layers = list(self.layers)
        old = layers[layer_index]
        layers[layer_index] = Layer(old.W, b, old.kind)
        return replace(self, layers=tuple(layers))

    def param_ids(self) -> list[str]:
        ids = []
        for li, layer in enumerate(self.layers):
            m, n = layer.W.shape
            ids.extend(f"L{li}.W[{i},{j}]" for i in range(m) for j in range(n))
            ids.extend(f"L{li}.b[{i}]" for i in range(m))
        return ids

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "layers": [
                {
                    "size": layer.size,
                    "kind": layer.kind.name,
                    **({"sigma": layer.kind.sigma} if layer.kind.name == NOISY_RECTIFIER else {}),
                    "weights": layer.W.tolist(),
                    "biases": layer.b.tolist(),
                }
                for layer in self.layers
            ],
            "loss": self.loss.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict, seed: int = 0) -> "LayeredNetwork":
        """Build a network from its JSON description.

        Layers without explicit ``weights``/``biases`` get Gaussian weights with
        standard deviation ``1/sqrt(fan_in)`` and zero biases, drawn from a
        stream derived from ``seed`` and the layer index.
        """
        _reject_unknown(doc, {"input_size", "layers", "loss"}, "network")
        try:
            input_size = int(doc["input_size"])
            layer_docs = doc["layers"]
            loss_doc = doc["loss"]
        except KeyError as exc:
            raise ContractError(f"network description missing key {exc.args[0]!r}") from None
        _reject_unknown(loss_doc, {"name", "target"}, "network.loss")
        layers, width = [], input_size
        for li, ld in enumerate(layer_docs):
            _reject_unknown(ld, {"size", "kind", "sigma", "weights", "biases"}, f"network.layers[{li}]")
            size = int(ld["size"])
            kind = UnitKind(ld.get("kind", STOCHASTIC_BINARY), float(ld.get("sigma", 0.0)))
            if "weights" in ld:
                W = np.array(ld["weights"], dtype=float).reshape(size, width)
            else:
                stream = NoiseStream(seed, INIT_STREAM_BASE + li)
                W = stream.gaussian(1.0, size * width).reshape(size, width) / np.sqrt(max(width, 1))
            b = np.array(ld["biases"], dtype=float) if "biases" in ld else np.zeros(size)
            layers.append(Layer(W, b, kind))
            width = size
        loss = LossSpec(loss_doc["name"], loss_doc.get("target", np.zeros(width)))
        return cls(input_size, tuple(layers), loss)

    @classmethod
    def from_json(cls, source, seed: int = 0) -> "LayeredNetwork":
        """Load from a JSON string or a path to a JSON file."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            source = Path(source).read_text()
        return cls.from_dict(json.loads(source), seed=seed)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ContractError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}")


def single_unit(bias: float = 0.0, loss: str = "linear", target=(1.0,), weights=None, x_size: int = 0):
    """One stochastic binary unit, handy for fixtures and tasks."""
    W = np.zeros((1, x_size)) if weights is None else np.array(weights, dtype=float).reshape(1, x_size)
    return LayeredNetwork(x_size, (Layer(W, [bias], BINARY),), LossSpec(loss, target))


@dataclass
class ForwardTrace:
    """Per-sample record of one batched forward pass.

    Lists are indexed by layer; arrays have one row per sample.  ``sigma_a``
    is ``None`` for non-binary layers and ``noise`` is ``None`` for
    deterministic ones.  ``weights`` holds configuration probabilities when
    the trace comes from exhaustive enumeration rather than sampling.
    """

    x: np.ndarray
    inputs: list
    activations: list
    sigma_a: list
    noise: list
    outputs: list
    loss: np.ndarray
    target: np.ndarray
    kinds: tuple
    weights: Optional[np.ndarray] = field(default=None)

    @property
    def batch_size(self) -> int:
        return self.loss.shape[0]

    def row(self, i: int) -> "ForwardTrace":
        """The single-sample trace for row ``i``."""
        pick = lambda arrs: [None if a is None else a[i : i + 1] for a in arrs]
        return ForwardTrace(
            self.x[i : i + 1],
            pick(self.inputs),
            pick(self.activations),
            pick(self.sigma_a),
            pick(self.noise),
            pick(self.outputs),
            self.loss[i : i + 1],
            self.target,
            self.kinds,
            None if self.weights is None else self.weights[i : i + 1],
        )


def _as_batch(net: LayeredNetwork, x, n_samples: Optional[int]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        x = x.reshape(1, -1) if x.size else np.zeros((1, 0))
        x = np.repeat(x, 1 if n_samples is None else n_samples, axis=0)
    elif n_samples is not None and x.shape[0] != n_samples:
        raise ContractError(f"x has {x.shape[0]} rows but n_samples={n_samples}")
    if x.shape[1] != net.input_size:
        raise ContractError(f"input width {x.shape[1]} does not match network input size {net.input_size}")
    return x


def make_unit_streams(net: LayeredNetwork, seed: int) -> list:
    """One stream per noisy unit; stream ids are global unit indices."""
    streams = []
    for layer, start in zip(net.layers, net.unit_offsets()):
        if layer.kind.noisy:
            streams.append([NoiseStream(seed, start + k) for k in range(layer.size)])
        else:
            streams.append(None)
    return streams


def draw_noise(net: LayeredNetwork, streams, n_samples: int) -> list:
    noise = []
    for layer, layer_streams in zip(net.layers, streams):
        if not layer.kind.noisy:
            noise.append(None)
        elif layer.kind.binary:
            noise.append(np.column_stack([s.uniform(n_samples) for s in layer_streams]))
        else:
            noise.append(np.column_stack([s.gaussian(layer.kind.sigma, n_samples) for s in layer_streams]))
    return noise


def forward_with_noise(net: LayeredNetwork, x, noise: Sequence) -> ForwardTrace:
    """Deterministic forward pass given explicit per-layer noise arrays."""
    n = None
    for z in noise:
        if z is not None:
            n = np.atleast_2d(z).shape[0]
            break
    xb = _as_batch(net, x, n)
    B = xb.shape[0]
    inputs, acts, sig, zs, outs = [], [], [], [], []
    h = xb
    for li, (layer, z) in enumerate(zip(net.layers, noise)):
        inputs.append(h)
        with np.errstate(over="ignore", invalid="ignore"):
            a = h @ layer.W.T + layer.b
        bad = ~np.isfinite(a)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ActivationOverflowError(li, int(c), float(a[r, c]))
        kind = layer.kind
        if kind.noisy:
            if z is None:
                raise ContractError(f"layer {li} needs noise")
            z = np.broadcast_to(np.asarray(z, dtype=float).reshape(B, -1), a.shape)
        if kind.binary:
            s = sigmoid(a)
            h = (z < s).astype(float)
            sig.append(s)
        elif kind.name == NOISY_RECTIFIER:
            if z is None:
                z = np.zeros_like(a)
            h = np.maximum(0.0, z + a)
            sig.append(None)
        else:
            h = sigmoid(a)
            sig.append(None)
            z = None
        acts.append(a)
        zs.append(z)
        outs.append(h)
    loss = net.loss.value(h)
    return ForwardTrace(xb, inputs, acts, sig, zs, outs, loss, net.loss.target, tuple(l.kind for l in net.layers))


def forward(net: LayeredNetwork, x, streams, n_samples: Optional[int] = None) -> ForwardTrace:
    """Sample a batched forward pass, drawing noise from per-unit streams.

    ``streams`` is the nested list from :func:`make_unit_streams` or an
    integer seed.  With a 1-D ``x`` and no ``n_samples`` a single sample is
    drawn.
    """
    if isinstance(streams, (int, np.integer)):
        streams = make_unit_streams(net, int(streams))
    xb = np.asarray(x, dtype=float)
    if n_samples is None:
        n_samples = xb.shape[0] if xb.ndim == 2 else 1
    noise = draw_noise(net, streams, n_samples)
    if all(z is None for z in noise):
        return forward_with_noise(net, _as_batch(net, x, n_samples), noise)
    return forward_with_noise(net, x, noise)


def forward_stochastic(net: LayeredNetwork, x, streams, n_samples: Optional[int] = None) -> ForwardTrace:
    if not any(layer.kind.binary for layer in net.layers):
        raise ContractError("forward_stochastic needs at least one stochastic binary layer")
    return forward(net, x, streams, n_samples)


def forward_semihard(net: LayeredNetwork, x, streams, n_samples: Optional[int] = None) -> ForwardTrace:
    if any(layer.kind.binary for layer in net.layers):
        raise ContractError("forward_semihard does not accept stochastic binary layers")
    return forward(net, x, streams, n_samples)


def backward(trace: ForwardTrace, net: LayeredNetwork, binary: str = "identity"):
    """Reverse-mode pass over a trace with its noise held fixed.

    ``binary`` selects how the hard threshold is crossed: ``"identity"``
    (straight-through), ``"stop"`` (its true derivative, zero almost
    everywhere) or ``"error"``.  The rectifier derivative at the kink is 0.

    Returns ``(grads, dL_da)``: per-sample flat parameter gradients of shape
    ``(batch, n_params)`` and the per-layer gradients with respect to ``a``.
    """
    B = trace.batch_size
    grads = np.zeros((B, net.n_params))
    dL_da = [None] * len(net.layers)
    upstream = net.loss.grad(trace.outputs[-1])
    for li in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[li]
        kind = layer.kind
        a = trace.activations[li]
        if kind.binary:
            if binary == "error":
                raise ContractError(f"layer {li} is a hard threshold and has no usable derivative")
            local = np.ones_like(a) if binary == "identity" else np.zeros_like(a)
        elif kind.name == NOISY_RECTIFIER:
            z = trace.noise[li]
            if z is None or np.isnan(z).any():
                raise ContractError(f"trace lacks recorded noise for layer {li}")
            local = (z + a > 0).astype(float)
        else:
            s = sigmoid(a)
            local = s * (1 - s)
        g = upstream * local
        dL_da[li] = g
        off = net.param_offsets()[li]
        nw = layer.W.size
        grads[:, off : off + nw] = (g[:, :, None] * trace.inputs[li][:, None, :]).reshape(B, nw)
        grads[:, off + nw : off + layer.n_params] = g
        upstream = g @ layer.W
    return grads, dL_da
