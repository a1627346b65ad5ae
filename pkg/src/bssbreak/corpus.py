"""Access to the bundled media corpus (two images, two speech clips)."""

from __future__ import annotations

import hashlib
from importlib import resources

from .media import MediaAsset, load_asset

IMAGE_NAMES = ("blobs.pgm", "shapes.pgm")
SPEECH_NAMES = ("word_one.wav", "word_two.wav")
ALL_NAMES = IMAGE_NAMES + SPEECH_NAMES


def corpus_path(name: str):
    if name not in ALL_NAMES:
        raise KeyError(f"no corpus item {name!r}; have {ALL_NAMES}")
    return resources.files("bssbreak") / "corpus" / name


def load_corpus(name: str) -> MediaAsset:
    return load_asset(corpus_path(name))


def corpus_checksums() -> dict[str, str]:
    return {name: hashlib.sha256(corpus_path(name).read_bytes()).hexdigest()
            for name in ALL_NAMES}
