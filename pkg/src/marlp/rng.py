"""Deterministic random streams for reproducible simulation runs.

Every stochastic decision in this package is drawn from a xoshiro256**
generator seeded through the splitmix64 finalizer.  The scheme is fully
specified below so a port in another language reproduces the same stream
of sampling decisions bit for bit.

* ``mix64(x)`` advances ``x`` by the 64-bit golden-ratio constant
  ``0x9E3779B97F4A7C15`` and applies the splitmix64 output scrambler
  (xor-shift 30, mul ``0xBF58476D1CE4E5B9``, xor-shift 27, mul
  ``0x94D049BB133111EB``, xor-shift 31).
* ``derive_seed(seed, *keys)`` folds integer stream keys into a seed:
  ``x = mix64(seed)`` then ``x = mix64(x ^ mix64(k))`` for each key.
  Stream keys used by this package are listed in ``Stream``.
* A generator's four state words are the first four splitmix64 outputs
  of its (derived) seed.
* ``uniform()`` maps the next 64-bit output to ``[0, 1)`` via
  ``(word >> 11) * 2**-53``.
* Categorical draws use inverse-CDF: the result is the first index whose
  cumulative probability strictly exceeds ``u * total``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class Stream:
    """Integer keys separating the independent random streams of a run."""

    AGENT = 1        # per-agent sampling inside the learners
    ENVIRONMENT = 2  # random-MDP construction
    GRAPH = 3        # per-step Erdos-Renyi edge draws
    EVALUATION = 4   # rollout policy evaluation
    TRIAL = 5        # independent trial seeds of the best-of-K meta loop
    POLICY = 6       # random policies sampled by the constant estimator
    EXECUTION = 7    # shared environment transitions in on-policy mode


def mix64(x: int) -> int:
    """splitmix64 step: advance ``x`` by the golden constant and scramble."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent stream seed from a base seed and integer keys."""
    x = mix64(seed & _MASK64)
    for k in keys:
        x = mix64(x ^ mix64(k & _MASK64))
    return x


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** with splitmix64 state initialization."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        state = seed & _MASK64
        words = []
        for _ in range(4):
            state = (state + _GOLDEN) & _MASK64
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
            words.append((z ^ (z >> 31)) & _MASK64)
        if not any(words):  # all-zero state is invalid for xoshiro
            words[0] = _GOLDEN
        self._s0, self._s1, self._s2, self._s3 = words

    def next64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform(self) -> float:
        """Next float in [0, 1) with 53 bits of precision."""
        return (self.next64() >> 11) * 2.0 ** -53

    def uniforms(self, n: int) -> np.ndarray:
        """Array of ``n`` consecutive uniforms."""
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            out[i] = (self.next64() >> 11) * 2.0 ** -53
        return out

    def categorical(self, cumulative: np.ndarray) -> int:
        """Inverse-CDF draw given a cumulative-weight vector."""
        u = self.uniform() * cumulative[-1]
        idx = int(np.searchsorted(cumulative, u, side="right"))
        return min(idx, len(cumulative) - 1)
