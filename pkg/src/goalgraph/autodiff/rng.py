"""Counter-based random streams for reproducible, resumable sampling.

Every draw is keyed by (seed, counter) through Philox, so the n-th draw of a
stream is a pure function of those two integers. Restoring a stream after a
checkpoint reload means restoring one integer.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _token_to_int(token) -> int:
    if isinstance(token, (int, np.integer)):
        return int(token)
    if isinstance(token, str):
        return zlib.crc32(token.encode("utf-8"))
    raise TypeError(f"stream tokens must be int or str, got {type(token).__name__}")


class RngStream:
    """Deterministic random stream with an explicit, serializable counter.

    Each call constructs a fresh Philox generator keyed by
    (counter << 64) | seed, then bumps the counter. Identical (seed, counter)
    always reproduces the identical draw regardless of process history.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.counter = int(counter)

    def _next_gen(self) -> np.random.Generator:
        key = (self.counter << 64) | self.seed
        self.counter += 1
        return np.random.Generator(np.random.Philox(key=key))

    def normal(self, shape, dtype=np.float64) -> np.ndarray:
        return self._next_gen().standard_normal(shape).astype(dtype)

    def uniform(self, shape, low: float = 0.0, high: float = 1.0, dtype=np.float64) -> np.ndarray:
        return self._next_gen().uniform(low, high, shape).astype(dtype)

    def integers(self, low: int, high: int, shape=()) -> np.ndarray:
        return self._next_gen().integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._next_gen().permutation(n)

    def gumbel(self, shape, dtype=np.float64) -> np.ndarray:
        """Standard Gumbel(0, 1) noise via the inverse-CDF transform."""
        u = self._next_gen().uniform(0.0, 1.0, shape)
        u = np.clip(u, 1e-12, 1.0 - 1e-12)
        return (-np.log(-np.log(u))).astype(dtype)

    def derive(self, *tokens) -> "RngStream":
        """Independent child stream identified by (seed, *tokens).

        Children with distinct token tuples are statistically independent and
        reproducible without reference to the parent's counter.
        """
        entropy = (self.seed,) + tuple(_token_to_int(t) for t in tokens)
        child_seed = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
        mixed = (int(child_seed[0]) << 32) ^ int(child_seed[1])
        return RngStream(mixed & _MASK64)

    def state(self) -> dict:
        return {"seed": self.seed, "counter": self.counter}

    @classmethod
    def from_state(cls, state: dict) -> "RngStream":
        return cls(state["seed"], state["counter"])
