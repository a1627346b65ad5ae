#!/usr/bin/env python3
"""Regenerate the bundled test corpus (deterministic, numpy-only).

The corpus stands in for classic grayscale test images and short spoken-word
clips: two synthetic 128x128 natural-looking images and two ~0.75 s mono
8 kHz speech-like clips.  Outputs are committed under src/bssbreak/corpus/;
rerun this script only when intentionally changing the corpus.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from bssbreak.media import MediaAsset, store_pgm, store_wav  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "bssbreak" / "corpus"
SIZE = 128
RATE = 8000
NSAMP = 6000


def lowpass_noise(rng, shape, cutoff):
    """Smooth random field via FFT low-pass of white noise."""
    noise = rng.standard_normal(shape)
    f = np.fft.fft2(noise)
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    mask = np.exp(-((fx**2 + fy**2) / (2 * cutoff**2)))
    return np.real(np.fft.ifft2(f * mask))


def normalize_u8(img, lo_pct=1, hi_pct=99):
    lo, hi = np.percentile(img, [lo_pct, hi_pct])
    return np.clip(np.rint((img - lo) / (hi - lo) * 255), 0, 255).astype(np.int64)


def make_image_blobs():
    rng = np.random.default_rng(20260801)
    y, x = np.mgrid[0:SIZE, 0:SIZE] / SIZE
    img = 0.4 * x + 0.25 * y
    for _ in range(9):
        cx, cy = rng.uniform(0.1, 0.9, 2)
        r = rng.uniform(0.07, 0.25)
        amp = rng.uniform(-0.8, 0.9)
        img += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * r**2))
    img += 0.35 * lowpass_noise(rng, (SIZE, SIZE), 0.04)
    return normalize_u8(img)


def make_image_shapes():
    rng = np.random.default_rng(20260802)
    y, x = np.mgrid[0:SIZE, 0:SIZE] / SIZE
    img = 0.55 - 0.3 * y
    # shaded disc
    d = np.sqrt((x - 0.38) ** 2 + (y - 0.42) ** 2)
    img += np.where(d < 0.22, 0.45 * (1 - d / 0.22), 0.0)
    # soft rectangle
    rect = (np.abs(x - 0.72) < 0.16) & (np.abs(y - 0.68) < 0.22)
    img += np.where(rect, -0.35 + 0.5 * (x - 0.56), 0.0)
    # diagonal stripes, low contrast
    img += 0.06 * np.sin(2 * np.pi * (x + y) * 6)
    img += 0.25 * lowpass_noise(rng, (SIZE, SIZE), 0.06)
    return normalize_u8(img)


def make_speech(seed, f0, formants):
    """Voiced word-ish clip: glottal-pulse harmonics shaped by formant bands."""
    rng = np.random.default_rng(seed)
    t = np.arange(NSAMP) / RATE
    # pitch contour with slight fall
    pitch = f0 * (1.0 + 0.08 * np.cos(2 * np.pi * 1.3 * t)) * (1 - 0.12 * t)
    phase = 2 * np.pi * np.cumsum(pitch) / RATE
    sig = np.zeros(NSAMP)
    for h in range(1, 14):
        w = sum(a / (1 + ((h * f0 - fc) / bw) ** 2) for fc, bw, a in formants)
        sig += w * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    # word envelope: two syllable-like bumps
    env = np.exp(-((t - 0.22) / 0.12) ** 2) + 0.8 * np.exp(-((t - 0.5) / 0.14) ** 2)
    sig *= env
    sig += 0.003 * rng.standard_normal(NSAMP)
    sig = sig / np.abs(sig).max() * 0.82
    return np.clip(np.rint(sig * 32767), -32768, 32767).astype(np.int64)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    store_pgm(MediaAsset("image8", make_image_blobs().ravel(), width=SIZE, height=SIZE),
              OUT / "blobs.pgm")
    store_pgm(MediaAsset("image8", make_image_shapes().ravel(), width=SIZE, height=SIZE),
              OUT / "shapes.pgm")
    store_wav(MediaAsset("pcm16", make_speech(11, 120, [(500, 120, 1.0), (1500, 200, 0.5)]),
                         sample_rate=RATE), OUT / "word_one.wav")
    store_wav(MediaAsset("pcm16", make_speech(23, 165, [(700, 150, 1.0), (1900, 250, 0.4)]),
                         sample_rate=RATE), OUT / "word_two.wav")
    print(f"corpus written to {OUT}")


if __name__ == "__main__":
    main()
