"""Cryptanalysis of the matrix-masking cipher.

Implements the whole attack toolbox:

* key-space accounting, with and without the row-wise divide-and-conquer
  (DAC) reduction;
* per-row DAC decryption through Ahat = [A_s^-1, -A_s^-1 A_k];
* key-sensitivity scans (decrypt under A + eps*R for random sign matrices R);
* the MANE-guided exhaustive-guess attack and its hit-probability model
  p(n_eps, r) = 1 - (1 - 1/n_eps)^r;
* the ciphertext-only differential attack (delta_x = A_s delta_s, the
  masking term cancels);
* exact known-plaintext key recovery A_s = DX * DS^-1 plus masking-signal
  and structured-keystream recovery;
* chosen-plaintext / chosen-ciphertext attacks needing at most P+1 queries.

All randomized procedures are pure functions of a master seed; every trial is
reproducible from (master_seed, trial_index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .cipher import (MAX_CONDITION, CipherParams, DimensionError, MixingKey,
                     SignalBlock, SingularKeyError, encrypt,
                     generate_key, generate_keystream, SeedKey)
from .media import QualityReport, mae, mane

_TRIAL_LABEL = 0x7121A1
_SENS_KEY_LABEL = 0x5E5251
_SENS_SEED_LABEL = 0x5E5252
_SENS_PERTURB_LABEL = 0x5E5253

TOP_CANDIDATES = 20


class RankDeficientError(ValueError):
    """Known plaintexts do not span enough directions to determine A_s."""


# --- key-space accounting --------------------------------------------------

@dataclass(frozen=True)
class KeySpaceModel:
    """Counting parameters: R values per matrix entry, L seed bits, eps grid."""

    P: int
    Q: int
    R: int
    L: int
    epsilon: float = 0.1

    def __post_init__(self):
        if self.P < 1 or self.Q < 0:
            raise ValueError("bad P/Q")
        if self.R < 2 or self.L < 1:
            raise ValueError("need R >= 2 and L >= 1")
        if not 0 < self.epsilon < 2:
            raise ValueError("epsilon must be in (0, 2)")

    @property
    def n_eps(self) -> int:
        return math.ceil(2 / self.epsilon)


def keyspace_size(model: KeySpaceModel, structured: bool = False,
                  dac: bool = False) -> int:
    """Exact key-space cardinality for the four closed forms.

    general:            R^(P(P+Q)) * 2^L
    structured:         R^(P^2)    * 2^L
    general + DAC:      P * R^(P+Q) * 2^L
    structured + DAC:   P * R^P    * 2^L
    """
    P, Q, R, L = model.P, model.Q, model.R, model.L
    if dac:
        exponent = P if structured else P + Q
        return P * R**exponent * 2**L
    exponent = P * P if structured else P * (P + Q)
    return R**exponent * 2**L


def hit_probability(n_eps: int, r: int) -> float:
    """p(n_eps, r) = 1 - (1 - 1/n_eps)^r: chance a guessed entry lands in the
    target's precision-eps sub-interval at least once in r rounds."""
    if n_eps < 1 or r < 0:
        raise ValueError("need n_eps >= 1 and r >= 0")
    return 1.0 - (1.0 - 1.0 / n_eps) ** r


def required_plaintexts(P: int) -> tuple[int, int]:
    """(published closed form, exact search) for the plaintext count giving
    at least P pairwise differentials.

    The closed form ceil(sqrt(P - 1/4) + 1/2) undershoots for some P (it
    solves n(n-1) >= P rather than n(n-1)/2 >= P), so both are reported.
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    n_formula = math.ceil(math.sqrt(P - 0.25) + 0.5)
    n_exact = 2
    while n_exact * (n_exact - 1) // 2 < P:
        n_exact += 1
    return n_formula, n_exact


# --- DAC -------------------------------------------------------------------

def ahat_matrix(key: MixingKey) -> np.ndarray:
    """Ahat = [A_s^-1, -A_s^-1 A_k], the P x (P+Q) equivalent decryption key."""
    inv = np.linalg.inv(key.A_s)
    return np.hstack([inv, -inv @ key.A_k])


def dac_row_decrypt(cipher: SignalBlock, ahat_row: np.ndarray,
                    ks: SignalBlock, i: int) -> np.ndarray:
    """Recover segment i alone: s_i(t) = ahat_row . [x(t); k(t)].

    Only the single row is needed, which is what makes the row-by-row
    divide-and-conquer attack possible.
    """
    row = np.asarray(ahat_row, dtype=np.float64).ravel()
    if row.size != cipher.P + ks.P:
        raise DimensionError("row length must be P + Q")
    if ks.T != cipher.T:
        raise DimensionError("keystream length mismatch")
    if not 0 <= i < cipher.P:
        raise ValueError("segment index out of range")
    stacked = np.vstack([cipher.samples, ks.samples])
    return row @ stacked


# --- candidates / results --------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    trial_index: int
    guess: np.ndarray  # the guessed matrix (or row) that produced this
    reconstruction: SignalBlock
    quality: QualityReport
    score: float  # the declared ranking metric (mean MANE)


@dataclass(frozen=True)
class AttackResult:
    recovered_As: np.ndarray | None = None
    recovered_As_inv: np.ndarray | None = None  # row-assembled estimate (DAC/exhaustive)
    recovered_mask: np.ndarray | None = None  # A_k k(t), P x T
    recovered_keystream: SignalBlock | None = None
    assembled: SignalBlock | None = None  # segment-wise best reconstruction
    assembled_quality: QualityReport | None = None
    candidates: tuple = ()
    oracle_queries: int = 0
    master_seed: int | None = None

    def report_dict(self) -> dict:
        """Machine-readable summary (matrices as nested lists)."""
        def arr(a):
            return None if a is None else np.asarray(a).tolist()
        return {
            "recovered_As": arr(self.recovered_As),
            "recovered_As_inv": arr(self.recovered_As_inv),
            "oracle_queries": self.oracle_queries,
            "master_seed": self.master_seed,
            "assembled_quality": None if self.assembled_quality is None
            else self.assembled_quality.__dict__,
            "candidates": [
                {"rank": r, "trial_index": c.trial_index, "score": c.score,
                 "per_segment_mane": c.quality.per_segment_mane}
                for r, c in enumerate(self.candidates)
            ],
        }


# --- sensitivity scan ------------------------------------------------------

@dataclass(frozen=True)
class SensitivityCurve:
    points: tuple  # of (epsilon, mean_mae, std_mae, trials)

    def __post_init__(self):
        eps = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly increasing")
        if any(p[3] < 1 for p in self.points):
            raise ValueError("trials must be >= 1")

    def to_csv(self) -> str:
        lines = ["epsilon,mean_mae,std_mae,trials"]
        for e, m, s, n in self.points:
            lines.append(f"{e!r},{m!r},{s!r},{n}")
        return "\n".join(lines) + "\n"


def _sign_matrix(seed: int, shape: tuple[int, int]) -> np.ndarray:
    w = rng.words(seed, 0, shape[0] * shape[1])
    return np.where((w & np.uint64(1)).astype(bool), 1.0, -1.0).reshape(shape)


def sensitivity_scan(plain: SignalBlock, params: CipherParams,
                     epsilons, trials: int, master_seed: int,
                     representation: str = "raw") -> SensitivityCurve:
    """Recovery error when decrypting with a key perturbed by eps * (+-1 matrix).

    Per trial: generate a fresh key and keystream seed, encrypt, perturb the
    full [A_s | A_k] by eps times a random sign matrix, decrypt with the
    perturbed key and score the aggregate MAE against the true plaintext
    (``representation="image8"`` applies per-segment 0..255 calibration).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    epsilons = [float(e) for e in epsilons]
    if any(not 0 < e < 1 for e in epsilons):
        raise ValueError("epsilons must lie in (0, 1)")
    P, Q, T = params.P, params.Q, plain.T
    points = []
    for ei, eps in enumerate(sorted(epsilons)):
        maes = []
        for j in range(trials):
            key = generate_key(params, rng.derive(master_seed, _SENS_KEY_LABEL, ei, j))
            seed = SeedKey(rng.derive(master_seed, _SENS_SEED_LABEL, ei, j))
            ks = generate_keystream(seed, Q, T)
            x = encrypt(plain, key, ks)
            R = _sign_matrix(rng.derive(master_seed, _SENS_PERTURB_LABEL, ei, j),
                             (P, P + Q))
            A_s2 = key.A_s + eps * R[:, :P]
            A_k2 = key.A_k + eps * R[:, P:]
            s2 = np.linalg.solve(A_s2, x.samples - A_k2 @ ks.samples)
            recon = SignalBlock(s2, plain.original_length, "plaintext")
            maes.append(mae(plain, recon, representation).aggregate_mae)
        maes = np.array(maes)
        points.append((eps, float(maes.mean()), float(maes.std()), trials))
    return SensitivityCurve(tuple(points))


# --- exhaustive-guess attack ----------------------------------------------

def guess_matrix(master_seed: int, trial_index: int, P: int, cols: int | None = None,
                 max_attempts: int = 1000) -> np.ndarray:
    """Deterministic guess matrix for one trial, entries uniform on [-1,1].

    The leading P x P block is resampled until its condition number is at
    most MAX_CONDITION, so every guess is usable for decryption.
    """
    cols = P if cols is None else cols
    for attempt in range(max_attempts):
        seed = rng.derive(master_seed, _TRIAL_LABEL, trial_index, attempt)
        m = rng.uniforms(seed, 0, P * cols).reshape(P, cols)
        if np.linalg.cond(m[:, :P]) <= MAX_CONDITION:
            return m
    raise SingularKeyError("could not draw an invertible guess")


def _guess_decrypt(cipher: SignalBlock, guess: np.ndarray, ks: SignalBlock,
                   params: CipherParams) -> np.ndarray:
    if params.mode == "structured":
        return np.linalg.solve(guess, cipher.samples) - params.beta * ks.samples
    P = params.P
    return np.linalg.solve(guess[:, :P], cipher.samples - guess[:, P:] @ ks.samples)


def exhaustive_guess_attack(cipher: SignalBlock, ks: SignalBlock,
                            params: CipherParams, r: int, master_seed: int,
                            representation: str = "raw") -> AttackResult:
    """Guess-and-rank attack assuming the keystream (seed) is known.

    Draws r random guess matrices, decrypts the ciphertext with each, scores
    every segment by MANE, and assembles the output plaintext from the
    per-segment MANE-minimal trials.  Row i of the winning guess's inverse
    becomes row i of the estimated inverse mixing matrix.  Candidates are
    ranked ascending by mean MANE; the top TOP_CANDIDATES plus all segment
    winners are materialized, everything else is reproducible from
    (master_seed, trial_index).
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    P, Q = params.P, params.Q
    cols = P if params.mode == "structured" else P + Q
    best_seg_score = np.full(P, np.inf)
    best_seg_trial = np.full(P, -1, dtype=np.int64)
    scores = np.empty(r)
    for j in range(r):
        guess = guess_matrix(master_seed, j, P, cols)
        recon = _guess_decrypt(cipher, guess, ks, params)
        block = SignalBlock(recon, cipher.original_length, "plaintext")
        seg = np.array(mane(block, representation).per_segment_mane)
        scores[j] = seg.mean()
        better = seg < best_seg_score
        best_seg_score[better] = seg[better]
        best_seg_trial[better] = j

    # materialize top candidates plus per-segment winners
    order = np.argsort(scores, kind="stable")
    keep = list(dict.fromkeys(list(order[:TOP_CANDIDATES]) + list(best_seg_trial)))
    recons = {}
    for j in keep:
        guess = guess_matrix(master_seed, int(j), P, cols)
        recon = SignalBlock(_guess_decrypt(cipher, guess, ks, params),
                            cipher.original_length, "plaintext")
        recons[int(j)] = (guess, recon)
    candidates = tuple(
        Candidate(int(j), recons[int(j)][0], recons[int(j)][1],
                  mane(recons[int(j)][1], representation), float(scores[j]))
        for j in sorted(keep, key=lambda j: (scores[j], j))
    )

    assembled = np.empty_like(cipher.samples)
    inv_est = np.empty((P, P))
    for i in range(P):
        j = int(best_seg_trial[i])
        guess, recon = recons[j]
        assembled[i] = recon.samples[i]
        inv_est[i] = np.linalg.inv(guess[:, :P])[i]
    assembled_block = SignalBlock(assembled, cipher.original_length, "plaintext")
    return AttackResult(
        recovered_As_inv=inv_est,
        assembled=assembled_block,
        assembled_quality=mane(assembled_block, representation),
        candidates=candidates,
        master_seed=master_seed,
    )


# --- differential attack ---------------------------------------------------

def differential_attack(cipher1: SignalBlock, cipher2: SignalBlock,
                        guesses, master_seed: int = 0,
                        representation: str = "raw") -> AttackResult:
    """Ciphertext-only differential attack: delta_s = guess^-1 (x1 - x2).

    ``guesses`` is either a trial count (random invertible matrices, entries
    uniform on [-1,1]) or an explicit list of P x P matrices.  All candidate
    differentials are returned for human review; no winner is selected,
    since a plaintext differential is itself a natural signal and MANE
    cannot separate good guesses from bad ones here.
    """
    if cipher1.samples.shape != cipher2.samples.shape:
        raise DimensionError("ciphertexts must have the same shape")
    P = cipher1.P
    dx = cipher1.samples - cipher2.samples
    n = min(cipher1.original_length, cipher2.original_length)
    if isinstance(guesses, int):
        mats = [(j, guess_matrix(master_seed, j, P)) for j in range(guesses)]
    else:
        mats = list(enumerate(np.asarray(g, dtype=np.float64) for g in guesses))
        for _, m in mats:
            if m.shape != (P, P):
                raise DimensionError("each guess must be P x P")
            if np.linalg.cond(m) > MAX_CONDITION:
                raise SingularKeyError("singular guess matrix")
    cands = []
    for j, m in mats:
        ds = SignalBlock(np.linalg.solve(m, dx), n, "differential")
        q = mane(ds, representation)
        cands.append(Candidate(j, m, ds, q, float(np.mean(q.per_segment_mane))))
    cands.sort(key=lambda c: (c.score, c.trial_index))
    return AttackResult(candidates=tuple(cands), master_seed=master_seed)


# --- known-plaintext attack ------------------------------------------------

def _greedy_columns(ds_all: np.ndarray, P: int) -> list[int]:
    """Pick P columns of ds_all greedily to maximize conditioning.

    Classic volume-maximizing selection: repeatedly take the column with the
    largest residual after projecting out the span of the columns already
    chosen (modified Gram-Schmidt).
    """
    work = ds_all.astype(np.float64).copy()
    chosen = []
    for _ in range(P):
        norms = np.linalg.norm(work, axis=0)
        norms[chosen] = -1.0
        j = int(np.argmax(norms))
        if norms[j] <= 1e-300:
            break
        chosen.append(j)
        q = work[:, j] / norms[j]
        work -= np.outer(q, q @ work)
    return chosen


def known_plaintext_attack(pairs) -> AttackResult:
    """Exact key recovery from >= 2 known (plaintext, ciphertext) pairs.

    Differentials against the first pair give delta_x(t) = A_s delta_s(t) at
    every t; sampling the differential at P well-conditioned time columns
    yields A_s = DX * DS^-1 exactly, after which the masking signal is
    A_k k(t) = x(t) - A_s s(t), valid up to the longest known pair.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least 2 known pairs")
    P = pairs[0][0].P
    for s, x in pairs:
        if s.P != P or x.P != P or s.T != x.T:
            raise DimensionError("all pairs must share the segment count")
    s0, x0 = pairs[0]
    ds_cols, dx_cols = [], []
    for s, x in pairs[1:]:
        T = min(s.T, s0.T)
        ds_cols.append(s.samples[:, :T] - s0.samples[:, :T])
        dx_cols.append(x.samples[:, :T] - x0.samples[:, :T])
    ds_all = np.hstack(ds_cols)
    dx_all = np.hstack(dx_cols)
    chosen = _greedy_columns(ds_all, P)
    DS = ds_all[:, chosen] if len(chosen) == P else np.zeros((P, P))
    if len(chosen) < P or np.linalg.cond(DS) > MAX_CONDITION:
        raise RankDeficientError(
            "plaintext differentials do not span P well-conditioned directions")
    DX = dx_all[:, chosen]
    A_s = DX @ np.linalg.inv(DS)
    s_long, x_long = max(pairs, key=lambda p: p[0].T)
    mask = x_long.samples - A_s @ s_long.samples
    return AttackResult(recovered_As=A_s, recovered_As_inv=np.linalg.inv(A_s),
                        recovered_mask=mask)


def decrypt_with_recovered(cipher: SignalBlock, A_s: np.ndarray,
                           mask: np.ndarray) -> SignalBlock:
    """Decrypt using recovered key material: s = A_s^-1 (x - mask)."""
    T = cipher.T
    if mask.shape[1] < T:
        raise DimensionError("recovered mask is shorter than the ciphertext")
    s = np.linalg.solve(A_s, cipher.samples - mask[:, :T])
    return SignalBlock(s, cipher.original_length, "plaintext")


def recover_keystream_structured(pair, B: np.ndarray, beta: float,
                                 published_sign: bool = False) -> SignalBlock:
    """Recover k(t) = (B^-1 x(t) - s(t)) / beta from one known pair.

    ``published_sign=True`` evaluates the opposite sign
    (s(t) - B^-1 x(t)) / beta instead, which is inconsistent with the
    scheme's own decryption rule; it exists so the discrepancy can be
    demonstrated by a re-encryption round-trip.
    """
    s, x = pair
    B = np.asarray(B, dtype=np.float64)
    if np.linalg.cond(B) > MAX_CONDITION:
        raise SingularKeyError("B is singular")
    k = (np.linalg.solve(B, x.samples) - s.samples) / beta
    if published_sign:
        k = -k
    return SignalBlock(k, k.size, "keystream")


# --- chosen-plaintext / chosen-ciphertext ----------------------------------

def _impulse_block(P: int, T: int, i: int, amplitude: float = 1.0) -> SignalBlock:
    s = np.zeros((P, T))
    s[i] = amplitude
    return SignalBlock(s, P * T, "plaintext")


def _zero_block(P: int, T: int, kind: str) -> SignalBlock:
    return SignalBlock(np.zeros((P, T)), P * T, kind)


def chosen_plaintext_attack(oracle, P: int, Q: int, T: int) -> AttackResult:
    """Recover (A_s, mask) with P+1 encryption queries.

    Queries the zero plaintext (its ciphertext is the mask A_k k(t) itself)
    plus one constant unit-amplitude block per segment, then delegates to the
    known-plaintext solver; the resulting differential system is the identity,
    so it is perfectly conditioned.
    """
    pairs = [( _zero_block(P, T, "plaintext"),
               oracle(_zero_block(P, T, "plaintext")) )]
    for i in range(P):
        s = _impulse_block(P, T, i)
        pairs.append((s, oracle(s)))
    result = known_plaintext_attack(pairs)
    return AttackResult(recovered_As=result.recovered_As,
                        recovered_As_inv=result.recovered_As_inv,
                        recovered_mask=result.recovered_mask,
                        oracle_queries=P + 1)


def chosen_ciphertext_attack(oracle, P: int, Q: int, T: int) -> AttackResult:
    """Recover the equivalent decryption key with P+1 decryption queries.

    decrypt(0) = -A_s^-1 A_k k(t); decrypt(e_i) - decrypt(0) is column i of
    A_s^-1.  That yields A_s, the mask A_k k(t), and the full Ahat row set.
    """
    d0 = oracle(_zero_block(P, T, "ciphertext"))
    As_inv = np.empty((P, P))
    for i in range(P):
        di = oracle(_impulse_block(P, T, i).with_kind("ciphertext"))
        As_inv[:, i] = (di.samples - d0.samples)[:, 0]
    if np.linalg.cond(As_inv) > MAX_CONDITION:
        raise SingularKeyError("recovered A_s^-1 is singular")
    A_s = np.linalg.inv(As_inv)
    mask = -A_s @ d0.samples
    return AttackResult(recovered_As=A_s, recovered_As_inv=As_inv,
                        recovered_mask=mask, oracle_queries=P + 1)
