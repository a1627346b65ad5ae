"""Command-line harness: keygen / encrypt / decrypt plus desk-scale experiments.

Every run derives all randomness from --master-seed, so identical invocations
produce byte-identical outputs.  Experiments write a manifest.json recording
the configuration, corpus checksums and tool version next to their reports.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import struct
import sys

import numpy as np

from . import __version__, attacks, corpus
from .cipher import (CipherParams, SeedKey, SignalBlock, decrypt,
                     encrypt, generate_key, generate_keystream, load_key,
                     save_key)
from .media import (MediaAsset, from_signal, load_asset, mae, store_asset,
                    to_signal)
from . import rng

# --- ciphertext container --------------------------------------------------
#
# Ciphertext samples are unbounded reals and must survive bit-exactly, so the
# container is a bespoke binary format: a fixed header followed by the P*T
# float64 samples in little-endian row-major order.
#
#   magic   4s   b"BSSC"
#   version u32  1
#   P, Q    u32, u32
#   T       u64
#   orig    u64  original_length
#   kind    u8   0 = image8, 1 = pcm16
#   width   u32  (image8; else 0)
#   height  u32  (image8; else 0)
#   rate    u32  (pcm16; else 0)

_MAGIC = b"BSSC"
_HEADER = "<4sIIIQQBIII"


def save_cipher(path, sig: SignalBlock, template: MediaAsset):
    kind = 0 if template.kind == "image8" else 1
    hdr = struct.pack(_HEADER, _MAGIC, 1, sig.P, 0, sig.T, sig.original_length,
                      kind, template.width or 0, template.height or 0,
                      template.sample_rate or 0)
    with open(path, "wb") as f:
        f.write(hdr)
        f.write(np.ascontiguousarray(sig.samples, dtype="<f8").tobytes())


def load_cipher(path) -> tuple[SignalBlock, MediaAsset]:
    with open(path, "rb") as f:
        hdr = f.read(struct.calcsize(_HEADER))
        magic, version, P, _, T, orig, kind, w, h, rate = struct.unpack(_HEADER, hdr)
        if magic != _MAGIC or version != 1:
            raise ValueError("not a ciphertext container")
        body = f.read(8 * P * T)
    samples = np.frombuffer(body, dtype="<f8").reshape(P, T)
    sig = SignalBlock(samples, orig, "ciphertext")
    # template asset carries only the metadata needed by from_signal
    if kind == 0:
        template = MediaAsset("image8", np.zeros(w * h, dtype=np.int64), width=w, height=h)
    else:
        template = MediaAsset("pcm16", np.zeros(orig, dtype=np.int64), sample_rate=rate)
    return sig, template


# --- commands --------------------------------------------------------------

def cmd_keygen(args) -> int:
    params = CipherParams(args.P, args.Q if args.mode == "general" else args.P,
                          args.mode, args.beta)
    key = generate_key(params, args.master_seed)
    seed = SeedKey(rng.derive(args.master_seed, 0x5EED) >> (64 - args.seed_bits)
                   if args.seed_bits < 64 else rng.derive(args.master_seed, 0x5EED),
                   args.seed_bits)
    save_key(args.out, key, seed, params)
    print(f"wrote key file {args.out} (P={params.P}, Q={params.Q}, mode={params.mode})")
    return 0


def cmd_encrypt(args) -> int:
    key, seed, params = load_key(args.key)
    asset = load_asset(args.infile)
    plain = to_signal(asset, params.P)
    ks = generate_keystream(seed, params.Q, plain.T)
    cipher = encrypt(plain, key, ks)
    save_cipher(args.out, cipher, asset)
    print(f"encrypted {args.infile} -> {args.out} (P={params.P}, T={plain.T})")
    return 0


def cmd_decrypt(args) -> int:
    key, seed, params = load_key(args.key)
    cipher, template = load_cipher(args.infile)
    ks = generate_keystream(seed, params.Q, cipher.T)
    plain = decrypt(cipher, key, ks)
    store_asset(from_signal(plain, template, calibrate=args.calibrate), args.out)
    print(f"decrypted {args.infile} -> {args.out}")
    return 0


# --- experiments -----------------------------------------------------------

def _outdir(args) -> pathlib.Path:
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: pathlib.Path, config: dict):
    manifest = {
        "tool": "bssbreak",
        "version": __version__,
        "config": config,
        "corpus_sha256": corpus.corpus_checksums(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def _corpus_signal(name: str, P: int) -> tuple[MediaAsset, SignalBlock, str]:
    asset = corpus.load_corpus(name)
    rep = "image8" if asset.kind == "image8" else "raw"
    return asset, to_signal(asset, P), rep


def _export_candidates(out: pathlib.Path, result: attacks.AttackResult,
                       template: MediaAsset):
    ext = "pgm" if template.kind == "image8" else "wav"
    for rank, c in enumerate(result.candidates):
        sig = c.reconstruction
        n = min(sig.original_length, template.samples.size)
        block = SignalBlock(sig.samples, n, sig.kind)
        asset = from_signal(block, template, calibrate=True)
        store_asset(asset, out / f"cand_{rank}_{c.trial_index}.{ext}")


def exp_sensitivity(args, out: pathlib.Path) -> dict:
    params = CipherParams(args.P, args.P, "structured", args.beta)
    summary = {}
    for name in (args.media or ["blobs.pgm", "word_one.wav"]):
        asset, plain, rep = _corpus_signal(name, params.P)
        curve = attacks.sensitivity_scan(plain, params, args.epsilons,
                                         args.trials, args.master_seed, rep)
        stem = name.split(".")[0]
        (out / f"sensitivity_{stem}.csv").write_text(curve.to_csv())
        means = [p[1] for p in curve.points]
        summary[name] = {"epsilons": [p[0] for p in curve.points],
                         "mean_mae": means,
                         "monotone": all(b >= a * 0.95 for a, b in zip(means, means[1:]))}
        print(f"{name}: mean MAE over eps grid -> "
              + ", ".join(f"{p[0]:g}:{p[1]:.4g}" for p in curve.points))
    return summary


def exp_exhaustive(args, out: pathlib.Path) -> dict:
    params = CipherParams(args.P, args.P, "structured", args.beta)
    name = (args.media or ["blobs.pgm"])[0]
    asset, plain, rep = _corpus_signal(name, params.P)
    key = generate_key(params, rng.derive(args.master_seed, 1))
    seed = SeedKey(rng.derive(args.master_seed, 2))
    ks = generate_keystream(seed, params.Q, plain.T)
    cipher = encrypt(plain, key, ks)
    result = attacks.exhaustive_guess_attack(cipher, ks, params, args.trials,
                                             args.master_seed, rep)
    _export_candidates(out, result, asset)
    assembled_asset = from_signal(result.assembled, asset, calibrate=True)
    store_asset(assembled_asset, out / ("assembled." + ("pgm" if rep == "image8" else "wav")))
    (out / "report.json").write_text(json.dumps(result.report_dict(), indent=1) + "\n")
    q = mae(plain, result.assembled, rep)
    print(f"{name}: assembled reconstruction MAE = {q.aggregate_mae:.4g} "
          f"({args.trials} trials)")
    return {"media": name, "assembled_mae": q.aggregate_mae,
            "per_segment_mane": result.assembled_quality.per_segment_mane}


def exp_differential(args, out: pathlib.Path) -> dict:
    params = CipherParams(args.P, args.P, "structured", args.beta)
    names = args.media or ["blobs.pgm", "shapes.pgm"]
    if len(names) != 2:
        raise SystemExit("differential experiment needs exactly 2 media items")
    asset1, plain1, rep = _corpus_signal(names[0], params.P)
    asset2, plain2, _ = _corpus_signal(names[1], params.P)
    key = generate_key(params, rng.derive(args.master_seed, 1))
    seed = SeedKey(rng.derive(args.master_seed, 2))
    ks = generate_keystream(seed, params.Q, plain1.T)
    c1, c2 = encrypt(plain1, key, ks), encrypt(plain2, key, ks)
    result = attacks.differential_attack(c1, c2, args.trials, args.master_seed, rep)
    _export_candidates(out, result, asset1)
    (out / "report.json").write_text(json.dumps(result.report_dict(), indent=1) + "\n")
    print(f"exported {len(result.candidates)} candidate differentials for review")
    return {"media": names, "candidates": len(result.candidates)}


def exp_kpa(args, out: pathlib.Path) -> dict:
    params = CipherParams(args.P, args.P, "structured", args.beta)
    names = args.media or ["blobs.pgm", "shapes.pgm"]
    assets = [_corpus_signal(n, params.P) for n in names]
    key = generate_key(params, rng.derive(args.master_seed, 1))
    seed = SeedKey(rng.derive(args.master_seed, 2))
    T = assets[0][1].T
    ks = generate_keystream(seed, params.Q, T)
    pairs = [(plain, encrypt(plain, key, ks)) for _, plain, _ in assets]
    result = attacks.known_plaintext_attack(pairs)
    err = float(np.abs(result.recovered_As - key.A_s).max())
    (out / "report.json").write_text(json.dumps(result.report_dict(), indent=1) + "\n")
    print(f"recovered A_s with max entry error {err:.3g}")
    return {"max_As_error": err, "pass": err <= 1e-6}


def exp_cpa(args, out: pathlib.Path) -> dict:
    params = CipherParams(args.P, args.P, "structured", args.beta)
    key = generate_key(params, rng.derive(args.master_seed, 1))
    seed = SeedKey(rng.derive(args.master_seed, 2))
    T = args.length
    ks = generate_keystream(seed, params.Q, T)
    result = attacks.chosen_plaintext_attack(lambda s: encrypt(s, key, ks),
                                             params.P, params.Q, T)
    err = float(np.abs(result.recovered_As - key.A_s).max())
    (out / "report.json").write_text(json.dumps(result.report_dict(), indent=1) + "\n")
    print(f"recovered A_s with max entry error {err:.3g} "
          f"in {result.oracle_queries} queries")
    return {"max_As_error": err, "queries": result.oracle_queries,
            "pass": err <= 1e-6 and result.oracle_queries <= params.P + 1}


def exp_keyspace(args, out: pathlib.Path) -> dict:
    model = attacks.KeySpaceModel(args.P, args.Q, args.R, args.L)
    variants = {
        "general": attacks.keyspace_size(model),
        "structured": attacks.keyspace_size(model, structured=True),
        "general_dac": attacks.keyspace_size(model, dac=True),
        "structured_dac": attacks.keyspace_size(model, structured=True, dac=True),
    }
    for name, value in variants.items():
        print(f"{name}: {value}")
    return {k: str(v) for k, v in variants.items()}


_EXPERIMENTS = {
    "sensitivity": exp_sensitivity,
    "exhaustive": exp_exhaustive,
    "differential": exp_differential,
    "kpa": exp_kpa,
    "cpa": exp_cpa,
    "keyspace": exp_keyspace,
}


def cmd_experiment(args) -> int:
    out = _outdir(args)
    config = {k: v for k, v in vars(args).items() if k != "func"}
    summary = _EXPERIMENTS[args.name](args, out)
    (out / "summary.json").write_text(json.dumps(summary, indent=1, default=str) + "\n")
    _write_manifest(out, config)
    return 0


# --- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bssbreak",
                                description="matrix-masking cipher and its cryptanalysis")
    sub = p.add_subparsers(dest="command", required=True)

    kg = sub.add_parser("keygen", help="generate a key file")
    kg.add_argument("--P", type=int, default=2)
    kg.add_argument("--Q", type=int, default=2)
    kg.add_argument("--mode", choices=["general", "structured"], default="structured")
    kg.add_argument("--beta", type=float, default=10.0)
    kg.add_argument("--seed-bits", type=int, default=64)
    kg.add_argument("--master-seed", type=int, default=0)
    kg.add_argument("--out", required=True)
    kg.set_defaults(func=cmd_keygen)

    en = sub.add_parser("encrypt", help="encrypt a PGM/WAV file")
    en.add_argument("--key", required=True)
    en.add_argument("--in", dest="infile", required=True)
    en.add_argument("--out", required=True)
    en.set_defaults(func=cmd_encrypt)

    de = sub.add_parser("decrypt", help="decrypt a ciphertext container")
    de.add_argument("--key", required=True)
    de.add_argument("--in", dest="infile", required=True)
    de.add_argument("--out", required=True)
    de.add_argument("--calibrate", action="store_true")
    de.set_defaults(func=cmd_decrypt)

    ex = sub.add_parser("experiment", help="run a desk-scale experiment")
    ex.add_argument("name", choices=sorted(_EXPERIMENTS))
    ex.add_argument("--out-dir", required=True)
    ex.add_argument("--master-seed", type=int, default=0)
    ex.add_argument("--P", type=int, default=2)
    ex.add_argument("--Q", type=int, default=2)
    ex.add_argument("--beta", type=float, default=10.0)
    ex.add_argument("--trials", type=int, default=100)
    ex.add_argument("--length", type=int, default=200)
    ex.add_argument("--epsilons", type=float, nargs="+",
                    default=[1e-3, 3e-3, 1e-2, 3e-2, 1e-1])
    ex.add_argument("--media", nargs="+",
                    help="bundled corpus names (default depends on experiment)")
    ex.add_argument("--R", type=int, default=2**31)
    ex.add_argument("--L", type=int, default=64)
    ex.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
