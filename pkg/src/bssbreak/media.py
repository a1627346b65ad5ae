"""Media ingestion/emission and the MAE / MANE quality metrics.

Supported containers are binary 8-bit PGM (P5) images and 16-bit little-endian
mono PCM WAV audio; both round-trip losslessly.  Images map to signal samples
via s = 2 v/255 - 1, audio via s = v/32768.

Metric conventions:

* image comparisons happen after per-segment calibration of BOTH operands to
  the 0..255 integer range (min -> 0, max -> 255; a constant segment maps to
  all zeros), so an exact reconstruction scores MAE 0 regardless of the
  original's dynamic range;
* audio comparisons happen on the raw [-1,1] samples;
* padding samples (beyond original_length) are excluded.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .cipher import DimensionError, SignalBlock


@dataclass(frozen=True)
class MediaAsset:
    """Raw integer samples of one image or one mono audio clip."""

    kind: str  # "image8" | "pcm16"
    samples: np.ndarray  # flat int array, native order
    width: int | None = None
    height: int | None = None
    sample_rate: int | None = None

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.int64).ravel()
        if a.size == 0:
            raise ValueError("empty asset")
        if self.kind == "image8":
            if not self.width or not self.height or self.width * self.height != a.size:
                raise ValueError("image dimensions do not match sample count")
            if a.min() < 0 or a.max() > 255:
                raise ValueError("image8 samples must be in 0..255")
        elif self.kind == "pcm16":
            if not self.sample_rate or self.sample_rate <= 0:
                raise ValueError("pcm16 needs a positive sample_rate")
            if a.min() < -32768 or a.max() > 32767:
                raise ValueError("pcm16 samples must be in -32768..32767")
        else:
            raise ValueError(f"unknown media kind {self.kind!r}")
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)


@dataclass(frozen=True)
class QualityReport:
    per_segment_mae: tuple | None = None
    per_segment_mane: tuple | None = None
    aggregate_mae: float | None = None


def to_signal(asset: MediaAsset, P: int) -> SignalBlock:
    """Normalize, split into P contiguous segments of length ceil(N/P), zero-pad."""
    if P < 1:
        raise ValueError("P must be >= 1")
    v = asset.samples.astype(np.float64)
    s = 2.0 * v / 255.0 - 1.0 if asset.kind == "image8" else v / 32768.0
    N = s.size
    T = math.ceil(N / P)
    if T < 3:
        raise ValueError(f"asset too small to split into {P} segments of length >= 3")
    padded = np.zeros(P * T)
    padded[:N] = s
    return SignalBlock(padded.reshape(P, T), N, "plaintext")


def _calibrate_rows(rows: np.ndarray) -> np.ndarray:
    """Affine-map each row onto 0..255 integers; constant rows map to zeros."""
    lo = rows.min(axis=1, keepdims=True)
    hi = rows.max(axis=1, keepdims=True)
    span = hi - lo
    span[span == 0] = 1.0  # constant rows land on 0 below
    return np.rint((rows - lo) / span * 255.0)


def calibrate_block(sig: SignalBlock) -> np.ndarray:
    """Per-segment calibration to 0..255 integers over valid samples only.

    Padding positions come back as 0 and should be masked out by the caller.
    """
    out = np.zeros_like(sig.samples)
    valid = sig.segment_valid_lengths()
    for i in range(sig.P):
        n = int(valid[i])
        if n > 0:
            out[i, :n] = _calibrate_rows(sig.samples[i:i + 1, :n])
    return out


def from_signal(sig: SignalBlock, template: MediaAsset, calibrate: bool = False) -> MediaAsset:
    """Inverse of to_signal, optionally calibrating each segment for display."""
    N = template.samples.size
    if sig.original_length != N or sig.P * sig.T < N:
        raise DimensionError("signal block does not match the template asset")
    if template.kind == "image8":
        if calibrate:
            flat = calibrate_block(sig).ravel()[:N]
        else:
            flat = np.rint((sig.samples.ravel()[:N] + 1.0) * 255.0 / 2.0)
        vals = np.clip(flat, 0, 255).astype(np.int64)
        return MediaAsset("image8", vals, width=template.width, height=template.height)
    flat = np.clip(sig.samples.ravel()[:N], -1.0, 1.0)
    vals = np.clip(np.rint(flat * 32768.0), -32768, 32767).astype(np.int64)
    return MediaAsset("pcm16", vals, sample_rate=template.sample_rate)


def _metric_rows(sig: SignalBlock, representation: str) -> np.ndarray:
    if representation == "raw":
        return np.asarray(sig.samples)
    if representation == "image8":
        return calibrate_block(sig)
    raise ValueError(f"unknown representation {representation!r}")


def mae(a: SignalBlock, b: SignalBlock, representation: str = "raw") -> QualityReport:
    """Per-segment and aggregate mean absolute error over valid samples."""
    if a.samples.shape != b.samples.shape or a.original_length != b.original_length:
        raise DimensionError("blocks must have identical shape and length")
    ra = _metric_rows(a, representation)
    rb = _metric_rows(b, representation)
    valid = a.segment_valid_lengths()
    per = []
    total = 0.0
    for i in range(a.P):
        n = int(valid[i])
        if n == 0:
            per.append(0.0)
            continue
        err = np.abs(ra[i, :n] - rb[i, :n])
        per.append(float(err.mean()))
        total += float(err.sum())
    return QualityReport(per_segment_mae=tuple(per),
                         aggregate_mae=total / a.original_length)


def _mane_row(row: np.ndarray) -> float:
    # (1/(T-2)) * sum_{t=2}^{T-1} (|s(t)-s(t-1)| + |s(t)-s(t+1)|) / 2
    mid, prev, nxt = row[1:-1], row[:-2], row[2:]
    return float(((np.abs(mid - prev) + np.abs(mid - nxt)) / 2.0).mean())


def mane(sig: SignalBlock, representation: str = "raw") -> QualityReport:
    """Mean absolute neighboring error of each segment (blind naturalness score).

    Computed over the valid prefix of each segment when it holds at least 3
    samples, otherwise over the whole padded segment.
    """
    rows = _metric_rows(sig, representation)
    valid = sig.segment_valid_lengths()
    per = []
    for i in range(sig.P):
        n = int(valid[i])
        per.append(_mane_row(rows[i, :n] if n >= 3 else rows[i]))
    return QualityReport(per_segment_mane=tuple(per))


# --- PGM (P5) --------------------------------------------------------------

def _read_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data):
        if data[pos:pos + 1].isspace():
            pos += 1
        elif data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("malformed PGM header")
    return data[start:pos], pos


def load_pgm(path) -> MediaAsset:
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P5":
        raise ValueError("not a binary PGM (P5) file")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_pgm_token(data, pos)
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval} (need 255)")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise ValueError("truncated PGM raster")
    pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    return MediaAsset("image8", pixels, width=width, height=height)


def store_pgm(asset: MediaAsset, path):
    if asset.kind != "image8":
        raise ValueError("store_pgm needs an image8 asset")
    header = f"P5\n{asset.width} {asset.height}\n255\n".encode()
    with open(path, "wb") as f:
        f.write(header)
        f.write(asset.samples.astype(np.uint8).tobytes())


# --- WAV (16-bit LE mono PCM) ----------------------------------------------

def load_wav(path) -> MediaAsset:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ValueError("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    raw = None
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            raw = body
        pos += 8 + size + (size & 1)
    if fmt is None or raw is None:
        raise ValueError("missing fmt or data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if audio_format != 1 or channels != 1 or bits != 16:
        raise ValueError("only 16-bit mono PCM WAV is supported")
    samples = np.frombuffer(raw[:len(raw) & ~1], dtype="<i2").astype(np.int64)
    return MediaAsset("pcm16", samples, sample_rate=rate)


def store_wav(asset: MediaAsset, path):
    if asset.kind != "pcm16":
        raise ValueError("store_wav needs a pcm16 asset")
    raw = asset.samples.astype("<i2").tobytes()
    rate = asset.sample_rate
    hdr = b"RIFF" + struct.pack("<I", 36 + len(raw)) + b"WAVE"
    hdr += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, rate, rate * 2, 2, 16)
    hdr += b"data" + struct.pack("<I", len(raw))
    with open(path, "wb") as f:
        f.write(hdr)
        f.write(raw)


def load_asset(path) -> MediaAsset:
    """Dispatch on magic bytes: PGM (P5) or WAV."""
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic[:2] == b"P5":
        return load_pgm(path)
    if magic == b"RIFF":
        return load_wav(path)
    raise ValueError(f"unrecognized media file {path}")


def store_asset(asset: MediaAsset, path):
    if asset.kind == "image8":
        store_pgm(asset, path)
    else:
        store_wav(asset, path)
