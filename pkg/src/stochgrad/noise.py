"""Seeded, replayable noise streams.

Every stream is keyed by ``(seed, stream_id)`` and backed by a Philox
counter-based generator, so the k-th draw of a stream is a pure function of
``(seed, stream_id, k)``.  Streams never share state; cloning one is cheap and
restoring from :meth:`NoiseStream.state` replays the remaining sequence
bit-for-bit.

Gaussian variates are the inverse normal CDF of a single uniform, so each one
consumes exactly one draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import ContractError

_U64 = 2**64
# Philox emits four 64-bit words per counter increment.
_WORDS_PER_BLOCK = 4

# Offsets keeping stream ids of different consumers disjoint.
INIT_STREAM_BASE = 1_000_000
SPSA_STREAM_BASE = 2_000_000
GIBBS_STREAM_BASE = 3_000_000


def _key(seed: int, stream_id: int) -> np.ndarray:
    return np.random.SeedSequence([seed % _U64, stream_id % _U64]).generate_state(2, np.uint64)


@dataclass
class NoiseStream:
    """Uniform/Gaussian draws for one stochastic unit (or one consumer)."""

    seed: int
    stream_id: int = 0
    draw_count: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.draw_count < 0:
            raise ContractError("draw_count must be non-negative")
        block, offset = divmod(self.draw_count, _WORDS_PER_BLOCK)
        bitgen = np.random.Philox(key=_key(self.seed, self.stream_id), counter=[block, 0, 0, 0])
        self._gen = np.random.Generator(bitgen)
        if offset:
            self._gen.random(offset)

    def uniform(self, size=None):
        """Next uniform variate(s) in [0, 1)."""
        out = self._gen.random(size)
        self.draw_count += 1 if size is None else int(np.prod(size))
        return out

    def gaussian(self, sigma: float = 1.0, size=None):
        """Zero-mean Gaussian variate(s) with standard deviation ``sigma``."""
        if not sigma >= 0:
            raise ContractError(f"sigma must be >= 0, got {sigma}")
        u = self.uniform(size)
        # Uniforms lie in [0, 1); only an exact 0 would send ndtri to -inf.
        z = ndtri(np.maximum(u, 2.0**-54))
        if sigma == 0:
            return np.zeros_like(z)
        return sigma * z

    def state(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id, "draw_count": self.draw_count}

    @classmethod
    def from_state(cls, state: dict) -> "NoiseStream":
        return cls(int(state["seed"]), int(state["stream_id"]), int(state["draw_count"]))

    def clone(self) -> "NoiseStream":
        return NoiseStream(self.seed, self.stream_id, self.draw_count)


def draw_uniform(stream: NoiseStream) -> float:
    return float(stream.uniform())


def draw_gaussian(stream: NoiseStream, sigma: float) -> float:
    return float(stream.gaussian(sigma))


def make_streams(seed: int, count: int, base: int = 0) -> list[NoiseStream]:
    """One independent stream per index, with ids ``base .. base + count - 1``."""
    return [NoiseStream(seed, base + i) for i in range(count)]
