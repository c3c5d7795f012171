"""
Counter-based Gaussian substreams

Every agent of every run owns its own Philox generator. The generator is keyed
by (seed, stream key, agent index) through numpy's SeedSequence, so the draw an
agent receives at a given step never depends on how many other agents, runs or
worker processes exist.
"""
from typing import Iterable, Protocol, Sequence, Tuple

import numpy as np

StreamKey = Tuple[int, ...]

# Stream namespaces below the master seed.
POPULATION_STREAM = 0
NOISE_STREAM = 1


class NoiseSource(Protocol):
    """Anything that yields one standard Gaussian per agent per call"""

    def draw(self) -> np.ndarray:
        ...


def seed_sequence(seed: int, key: Iterable[int] = ()) -> np.random.SeedSequence:
    """SeedSequence for `seed` below the given spawn key"""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def philox(seed: int, key: Iterable[int] = ()) -> np.random.Generator:
    """Philox generator for `seed` below the given spawn key"""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, key)))


class GaussianStreams:
    """
    Standard Gaussian draws for R runs of N agents each

    Args:
        seed: master seed (unsigned 64-bit)
        stream_keys: one spawn key per run; the agent index is appended to it
        n_agents: agents per run
        block: number of steps drawn ahead per agent
    """

    def __init__(self, seed: int, stream_keys: Sequence[StreamKey], n_agents: int, block: int = 256):
        if not stream_keys:
            raise ValueError("at least one stream key is required")
        self._generators = [
            philox(seed, tuple(key) + (agent,))
            for key in stream_keys
            for agent in range(n_agents)
        ]
        self._shape = (len(stream_keys), n_agents)
        self._block = block
        self._buffer = np.empty((len(self._generators), 0))
        self._cursor = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self._shape

    def _refill(self) -> None:
        self._buffer = np.stack([g.standard_normal(self._block) for g in self._generators])
        self._cursor = 0

    def draw(self) -> np.ndarray:
        """Next (R, N) matrix of draws, one per agent of every run"""
        if self._cursor >= self._buffer.shape[1]:
            self._refill()
        column = self._buffer[:, self._cursor]
        self._cursor += 1
        return column.reshape(self._shape)


class SingleRunStreams(GaussianStreams):
    """GaussianStreams for one run; draws come back as an (N,) vector"""

    def __init__(self, seed: int, stream_key: StreamKey, n_agents: int, block: int = 256):
        super().__init__(seed, [stream_key], n_agents, block)

    def draw(self) -> np.ndarray:
        return super().draw()[0]


class ZeroNoise:
    """Noise source for deterministic runs"""

    def __init__(self, shape):
        self._zeros = np.zeros(shape)

    def draw(self) -> np.ndarray:
        return self._zeros
