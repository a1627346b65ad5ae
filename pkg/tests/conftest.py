import numpy as np
import pytest

from bssbreak import corpus
from bssbreak.cipher import (CipherParams, SeedKey, SignalBlock, generate_key,
                             generate_keystream)
from bssbreak import rng


def random_plaintext(P, T, seed, original_length=None):
    """Plaintext block with samples uniform on [-1,1], deterministic."""
    n = original_length if original_length is not None else P * T
    s = rng.uniforms(rng.derive(seed, 0xF1A7), 0, P * T).reshape(P, T)
    valid = np.clip(n - np.arange(P) * T, 0, T)
    s[np.arange(T)[None, :] >= valid[:, None]] = 0.0
    return SignalBlock(s, n, "plaintext")


def random_instance(P, Q, T, mode, seed, beta=10.0):
    """(plain, key, ks) triple for one seeded cipher instance."""
    params = CipherParams(P, Q, mode, beta)
    key = generate_key(params, rng.derive(seed, 1))
    ks = generate_keystream(SeedKey(rng.derive(seed, 2)), Q, T)
    plain = random_plaintext(P, T, rng.derive(seed, 3))
    return plain, key, ks, params


@pytest.fixture(scope="session")
def image_asset():
    return corpus.load_corpus("blobs.pgm")


@pytest.fixture(scope="session")
def image_asset2():
    return corpus.load_corpus("shapes.pgm")


@pytest.fixture(scope="session")
def speech_asset():
    return corpus.load_corpus("word_one.wav")


@pytest.fixture(scope="session")
def speech_asset2():
    return corpus.load_corpus("word_two.wav")
