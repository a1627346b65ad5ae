"""Seedable counter-based pseudo-random number generator.

The generator is part of the external contract of this project: any other
implementation must reproduce identical streams from identical seeds, so the
algorithm is fixed here and covered by golden test vectors
(tests/data/rng_vectors.json).

Algorithm
---------
The i-th 64-bit word of the stream with seed ``s`` (both unsigned 64-bit) is

    word(s, i) = mix64((s + (i + 1) * GAMMA) mod 2^64)

where GAMMA = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64 finalizer:

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9  (mod 2^64)
    z ^= z >> 27;  z *= 0x94D049BB133111EB  (mod 2^64)
    z ^= z >> 31

A word maps to a double in [-1, 1) via its top 53 bits:

    value = (word >> 11) * 2^-52 - 1

Independent sub-streams are obtained with ``derive(seed, *labels)``, which
folds each integer label into the seed through mix64; this is how trial
indices, attempt counters and purpose tags are split off a master seed.
Everything is pure and stateless apart from the small ``Stream`` convenience
wrapper.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB
_DERIVE_SALT = 0x632BE59BD9B4E019

_U_GAMMA = np.uint64(GAMMA)
_U_MULT1 = np.uint64(_MULT1)
_U_MULT2 = np.uint64(_MULT2)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a plain Python integer (mod 2^64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def derive(seed: int, *labels: int) -> int:
    """Derive an independent child seed from (seed, labels).

    Labels are folded in order, so derive(s, a, b) != derive(s, b, a) in
    general; negative labels are not allowed.
    """
    s = seed & MASK64
    for label in labels:
        if label < 0:
            raise ValueError("derive labels must be non-negative")
        s = mix64(s ^ mix64((label + _DERIVE_SALT) & MASK64))
    return s


def words(seed: int, start: int, count: int) -> np.ndarray:
    """Words start..start+count-1 of the stream, as a uint64 array."""
    if count < 0 or start < 0:
        raise ValueError("start and count must be non-negative")
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + idx * _U_GAMMA
    z = (z ^ (z >> np.uint64(30))) * _U_MULT1
    z = (z ^ (z >> np.uint64(27))) * _U_MULT2
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Doubles uniform on [-1, 1), one per stream word."""
    w = words(seed, start, count)
    return (w >> np.uint64(11)).astype(np.float64) * 2.0**-52 - 1.0


class Stream:
    """Sequential view over one counter-based stream."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_words(self, count: int) -> np.ndarray:
        out = words(self.seed, self.counter, count)
        self.counter += count
        return out

    def next_uniforms(self, count: int) -> np.ndarray:
        out = uniforms(self.seed, self.counter, count)
        self.counter += count
        return out
