"""Matrix-masking multimedia cipher.

A plaintext is split into P segments of T samples each.  Encryption mixes the
P plaintext segments with Q secret masking signals through a secret
P x (P+Q) matrix A = [A_s | A_k]:

    x(t) = A_s s(t) + A_k k(t)          (column-wise over t)

Decryption inverts A_s:

    s(t) = A_s^-1 (x(t) - A_k k(t))

The "structured" variant sets Q = P, A_s = B, A_k = beta * B, so that
x(t) = B (s(t) + beta k(t)) and s(t) = B^-1 x(t) - beta k(t).

The masking signals k(t) come from the seedable generator in :mod:`rng`,
driven by an L-bit secret seed.  The full secret key is (A, seed).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import rng

MAX_CONDITION = 1e6
STRUCTURED_ATOL = 1e-12
_KEYGEN_LABEL = 0xA11CE
_KEYSTREAM_LABEL = 0xC0FFEE

KINDS = ("plaintext", "ciphertext", "keystream", "differential")
# Sample range [-1,1] applies to plaintext/keystream blocks; it is enforced
# where such blocks are produced (media ingestion, keystream generation) and
# checked again by encrypt().  Reconstructions from wrong keys reuse the
# plaintext kind but may leave the range.


class DimensionError(ValueError):
    pass


class SingularKeyError(ValueError):
    pass


@dataclass(frozen=True)
class SignalBlock:
    """P segments by T samples, plus the pre-padding sample count."""

    samples: np.ndarray
    original_length: int
    kind: str

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError("samples must be a 2-D array")
        if a.shape[0] < 1 or a.shape[1] < 3:
            raise DimensionError("need P >= 1 and T >= 3")
        if self.kind not in KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        if not 0 < self.original_length <= a.size:
            raise ValueError("original_length out of range")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    @property
    def P(self) -> int:
        return self.samples.shape[0]

    @property
    def T(self) -> int:
        return self.samples.shape[1]

    def segment_valid_lengths(self) -> np.ndarray:
        """Valid (non-padding) sample count of each segment."""
        n = np.full(self.P, self.T, dtype=np.int64)
        return np.clip(self.original_length - np.arange(self.P) * self.T, 0, self.T)

    def padding_mask(self) -> np.ndarray:
        """Boolean (P, T) mask, True on padding positions."""
        return np.arange(self.T)[None, :] >= self.segment_valid_lengths()[:, None]

    def with_kind(self, kind: str) -> "SignalBlock":
        return SignalBlock(self.samples, self.original_length, kind)


def _zero_padding(samples: np.ndarray, original_length: int) -> np.ndarray:
    out = samples.copy()
    T = samples.shape[1]
    valid = np.clip(original_length - np.arange(samples.shape[0]) * T, 0, T)
    out[np.arange(T)[None, :] >= valid[:, None]] = 0.0
    return out


@dataclass(frozen=True)
class MixingKey:
    """Secret mixing matrix A = [A_s | A_k], optionally structured [B, beta*B]."""

    A_s: np.ndarray
    A_k: np.ndarray
    structured: tuple[np.ndarray, float] | None = None

    def __post_init__(self):
        A_s = np.array(self.A_s, dtype=np.float64)
        A_k = np.array(self.A_k, dtype=np.float64)
        P = A_s.shape[0]
        if A_s.shape != (P, P) or A_k.ndim != 2 or A_k.shape[0] != P:
            raise DimensionError("A_s must be PxP and A_k PxQ")
        if np.linalg.cond(A_s) > MAX_CONDITION:
            raise SingularKeyError("A_s is singular or too ill-conditioned")
        if self.structured is not None:
            B, beta = self.structured
            B = np.array(B, dtype=np.float64)
            if beta <= 0:
                raise ValueError("beta must be positive")
            if A_k.shape[1] != P:
                raise DimensionError("structured keys require Q = P")
            if not np.allclose(A_s, B, atol=STRUCTURED_ATOL, rtol=0):
                raise ValueError("structured key requires A_s = B")
            if not np.allclose(A_k, beta * B, atol=STRUCTURED_ATOL, rtol=0):
                raise ValueError("structured key requires A_k = beta*B")
            object.__setattr__(self, "structured", (B, float(beta)))
            B.setflags(write=False)
        else:
            # only the unstructured form keeps all entries inside [-1,1];
            # beta*B may legitimately leave the range
            if np.abs(A_s).max() > 1 or np.abs(A_k).max() > 1:
                raise ValueError("mixing matrix entries must lie in [-1,1]")
        A_s.setflags(write=False)
        A_k.setflags(write=False)
        object.__setattr__(self, "A_s", A_s)
        object.__setattr__(self, "A_k", A_k)

    @property
    def P(self) -> int:
        return self.A_s.shape[0]

    @property
    def Q(self) -> int:
        return self.A_k.shape[1]


@dataclass(frozen=True)
class SeedKey:
    """L-bit integer seed driving the masking-signal generator."""

    seed: int
    bits: int = 64

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if not 0 <= self.seed < (1 << self.bits):
            raise ValueError(f"seed does not fit in {self.bits} bits")


@dataclass(frozen=True)
class CipherParams:
    P: int
    Q: int
    mode: str = "general"
    beta: float = 10.0

    def __post_init__(self):
        if self.P < 1 or self.Q < 1:
            raise ValueError("P and Q must be >= 1")
        if self.mode not in ("general", "structured"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "structured":
            if self.Q != self.P:
                raise ValueError("structured mode forces Q = P")
            if self.beta <= 0:
                raise ValueError("beta must be positive")


def generate_key(params: CipherParams, rng_seed: int, max_attempts: int = 1000) -> MixingKey:
    """Sample a mixing key, entries uniform on [-1,1], until well-conditioned."""
    P, Q = params.P, params.Q
    for attempt in range(max_attempts):
        stream_seed = rng.derive(rng_seed, _KEYGEN_LABEL, attempt)
        if params.mode == "structured":
            B = rng.uniforms(stream_seed, 0, P * P).reshape(P, P)
            if np.linalg.cond(B) > MAX_CONDITION:
                continue
            return MixingKey(B, params.beta * B, structured=(B, params.beta))
        A = rng.uniforms(stream_seed, 0, P * (P + Q)).reshape(P, P + Q)
        A_s, A_k = A[:, :P], A[:, P:]
        if np.linalg.cond(A_s) > MAX_CONDITION:
            continue
        return MixingKey(A_s, A_k)
    raise SingularKeyError(f"no well-conditioned key in {max_attempts} attempts")


def generate_keystream(seed: SeedKey, Q: int, T: int) -> SignalBlock:
    """Q masking signals of length T, i.i.d. uniform on [-1,1).

    Row i holds the i-th masking signal; samples are drawn row-major from the
    stream derive(seed, KEYSTREAM_LABEL), so (seed, Q, T) fully determines
    the block.
    """
    if Q < 1 or T < 3:
        raise DimensionError("need Q >= 1 and T >= 3")
    stream_seed = rng.derive(seed.seed, _KEYSTREAM_LABEL)
    k = rng.uniforms(stream_seed, 0, Q * T).reshape(Q, T)
    return SignalBlock(k, Q * T, "keystream")


# Ciphertexts are snapped onto a per-key dyadic lattice before the masking
# term is added.  Both addends then carry at most 48 significant bits, so the
# addition (and any later ciphertext subtraction) is exact in float64: the
# differential of two ciphertexts cancels the masking term bitwise, not just
# approximately.  The lattice step is ~2^-47 relative to the largest possible
# ciphertext magnitude, far below every accuracy contract.

def _lattice_step(key: MixingKey) -> float:
    bound = max(1.0, float(np.abs(np.hstack([key.A_s, key.A_k])).sum(axis=1).max()))
    return 2.0 ** (math.ceil(math.log2(bound)) - 47)


def _snap(a: np.ndarray, step: float) -> np.ndarray:
    return np.rint(a / step) * step


def _check_dims(sig: SignalBlock, key: MixingKey, ks: SignalBlock):
    if sig.P != key.P:
        raise DimensionError(f"block has {sig.P} segments, key expects {key.P}")
    if ks.P != key.Q:
        raise DimensionError(f"keystream has {ks.P} rows, key expects {key.Q}")
    if ks.T != sig.T:
        raise DimensionError("keystream length does not match block length")


def encrypt(plain: SignalBlock, key: MixingKey, ks: SignalBlock) -> SignalBlock:
    """x(t) = A_s s(t) + A_k k(t)."""
    _check_dims(plain, key, ks)
    if np.abs(plain.samples).max() > 1 + 1e-12:
        raise ValueError("plaintext samples must lie in [-1,1]")
    step = _lattice_step(key)
    x = _snap(key.A_s @ plain.samples, step) + _snap(key.A_k @ ks.samples, step)
    return SignalBlock(x, plain.original_length, "ciphertext")


def decrypt(cipher: SignalBlock, key: MixingKey, ks: SignalBlock) -> SignalBlock:
    """s(t) = A_s^-1 (x(t) - A_k k(t)); padding positions are zeroed exactly."""
    _check_dims(cipher, key, ks)
    mask = _snap(key.A_k @ ks.samples, _lattice_step(key))
    s = np.linalg.solve(key.A_s, cipher.samples - mask)
    return SignalBlock(_zero_padding(s, cipher.original_length),
                       cipher.original_length, "plaintext")


def decrypt_structured(cipher: SignalBlock, key: MixingKey, ks: SignalBlock) -> SignalBlock:
    """Structured-form decryption s(t) = B^-1 x(t) - beta k(t)."""
    if key.structured is None:
        raise ValueError("key has no structured form")
    B, beta = key.structured
    _check_dims(cipher, key, ks)
    s = np.linalg.solve(B, cipher.samples) - beta * ks.samples
    return SignalBlock(_zero_padding(s, cipher.original_length),
                       cipher.original_length, "plaintext")


def equivalent_stream_form(cipher: SignalBlock, key: MixingKey) -> SignalBlock:
    """x*(t) = A_s^-1 x(t) = s(t) + A_s^-1 A_k k(t).

    With A known the scheme degrades to this purely additive stream cipher.
    """
    if cipher.P != key.P:
        raise DimensionError("segment count mismatch")
    x_star = np.linalg.solve(key.A_s, cipher.samples)
    return SignalBlock(x_star, cipher.original_length, "ciphertext")


# --- key file serialization ------------------------------------------------
#
# A key file is a JSON document holding P, Q, mode, beta, the seed (decimal
# string) and every matrix entry twice: human-readable decimal plus the exact
# big-endian hex of the float64 bits.  Readers must honor the hex field; the
# decimal is advisory.

KEYFILE_FORMAT = "bssbreak-key"
KEYFILE_VERSION = 1


def _entry(v: float) -> dict:
    return {"dec": repr(float(v)), "hex": struct.pack(">d", float(v)).hex()}


def _entry_value(e: dict) -> float:
    return struct.unpack(">d", bytes.fromhex(e["hex"]))[0]


def _matrix_entries(m: np.ndarray) -> list:
    return [_entry(v) for v in m.ravel(order="C")]


def _matrix_from_entries(entries: list, shape: tuple[int, int]) -> np.ndarray:
    return np.array([_entry_value(e) for e in entries], dtype=np.float64).reshape(shape)


def save_key(path, key: MixingKey, seed: SeedKey, params: CipherParams):
    doc = {
        "format": KEYFILE_FORMAT,
        "version": KEYFILE_VERSION,
        "P": params.P,
        "Q": params.Q,
        "mode": params.mode,
        "beta": _entry(params.beta) if params.mode == "structured" else None,
        "seed": str(seed.seed),
        "seed_bits": seed.bits,
        "A_s": _matrix_entries(key.A_s),
        "A_k": _matrix_entries(key.A_k),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_key(path) -> tuple[MixingKey, SeedKey, CipherParams]:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != KEYFILE_FORMAT:
        raise ValueError("not a key file")
    P, Q, mode = doc["P"], doc["Q"], doc["mode"]
    beta = _entry_value(doc["beta"]) if doc["beta"] is not None else 10.0
    params = CipherParams(P, Q, mode, beta)
    A_s = _matrix_from_entries(doc["A_s"], (P, P))
    A_k = _matrix_from_entries(doc["A_k"], (P, Q))
    structured = (A_s, beta) if mode == "structured" else None
    key = MixingKey(A_s, A_k, structured=structured)
    seed = SeedKey(int(doc["seed"]), doc["seed_bits"])
    return key, seed, params
