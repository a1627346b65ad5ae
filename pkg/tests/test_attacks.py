import numpy as np
import pytest

from bssbreak import attacks, rng
from bssbreak.attacks import (KeySpaceModel, RankDeficientError,
                              ahat_matrix, chosen_ciphertext_attack,
                              chosen_plaintext_attack, dac_row_decrypt,
                              decrypt_with_recovered, differential_attack,
                              exhaustive_guess_attack, guess_matrix,
                              hit_probability, keyspace_size,
                              known_plaintext_attack,
                              recover_keystream_structured,
                              required_plaintexts, sensitivity_scan)
from bssbreak.cipher import (CipherParams, MixingKey, SeedKey, SignalBlock,
                             decrypt, encrypt, generate_keystream)
from bssbreak.media import mae, mane, to_signal
from conftest import random_instance, random_plaintext


class TestKeySpace:
    def test_reference_scale_example(self):
        m = KeySpaceModel(4, 4, 2**31, 64)
        assert keyspace_size(m) == 2**1056
        assert keyspace_size(m, structured=True) == 2**(31 * 16 + 64)
        assert keyspace_size(m, dac=True) == 4 * 2**(31 * 8 + 64)
        assert keyspace_size(m, structured=True, dac=True) == 4 * 2**(31 * 4 + 64)

    def test_smallest_case(self):
        assert keyspace_size(KeySpaceModel(1, 0, 2, 1)) == 4

    def test_dac_never_larger(self):
        for P, Q, R, L in [(1, 1, 2, 1), (2, 2, 16, 8), (4, 4, 2**31, 64)]:
            m = KeySpaceModel(P, Q, R, L)
            assert keyspace_size(m, dac=True) <= keyspace_size(m)
            assert keyspace_size(m, structured=True, dac=True) <= \
                keyspace_size(m, structured=True)

    def test_n_eps(self):
        assert KeySpaceModel(2, 2, 2, 1, epsilon=0.1).n_eps == 20


class TestDac:
    def test_true_row_recovers_segment(self):
        plain, key, ks, _ = random_instance(3, 2, 40, "general", 13)
        cipher = encrypt(plain, key, ks)
        ahat = ahat_matrix(key)
        for i in range(3):
            got = dac_row_decrypt(cipher, ahat[i], ks, i)
            np.testing.assert_allclose(got, plain.samples[i], atol=1e-9)

    def test_other_rows_irrelevant(self):
        plain, key, ks, _ = random_instance(3, 2, 40, "general", 14)
        cipher = encrypt(plain, key, ks)
        ahat = ahat_matrix(key)
        base = dac_row_decrypt(cipher, ahat[1], ks, 1)
        ahat[0] += 100.0
        ahat[2] -= 7.0
        again = dac_row_decrypt(cipher, ahat[1], ks, 1)
        assert np.array_equal(base, again)

    def test_zero_row(self):
        plain, key, ks, _ = random_instance(2, 2, 10, "general", 15)
        cipher = encrypt(plain, key, ks)
        assert np.all(dac_row_decrypt(cipher, np.zeros(4), ks, 0) == 0.0)


class TestHitProbability:
    def test_zero_rounds(self):
        assert hit_probability(20, 0) == 0.0

    def test_exceeds_one_minus_inv_e(self):
        for n in range(1, 1001):
            assert hit_probability(n, n) > 0.6321

    def test_strictly_increasing_in_r(self):
        vals = [hit_probability(20, r) for r in range(0, 100)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_monte_carlo_oracle(self):
        # bin-coincidence model: [-1,1] split into n_eps width-eps bins; a guess
        # "equals" the target under precision eps when it lands in the
        # target's bin, probability 1/n_eps per round
        n_eps, r, sims = 20, 50, 100_000
        u = rng.uniforms(rng.derive(4242, 0), 0, sims * (r + 1)).reshape(sims, r + 1)
        target_bin = np.floor((u[:, 0] + 1) / (2 / n_eps)).clip(0, n_eps - 1)
        guess_bin = np.floor((u[:, 1:] + 1) / (2 / n_eps)).clip(0, n_eps - 1)
        freq = np.any(guess_bin == target_bin[:, None], axis=1).mean()
        assert abs(freq - hit_probability(n_eps, r)) < 0.02


class TestRequiredPlaintexts:
    def test_small_cases(self):
        assert required_plaintexts(1)[1] == 2
        assert required_plaintexts(2) == (2, 3)  # the published formula undershoots
        assert required_plaintexts(4)[1] == 4

    def test_exact_satisfies_inequality(self):
        for P in range(1, 200):
            nf, ne = required_plaintexts(P)
            assert ne * (ne - 1) // 2 >= P
            assert (ne - 1) * (ne - 2) // 2 < P


class TestDifferentialAttack:
    def _setup(self, seed=31, P=2, T=60):
        s1, key, ks, _ = random_instance(P, P, T, "general", seed)
        s2 = random_plaintext(P, T, seed + 1)
        return s1, s2, key, encrypt(s1, key, ks), encrypt(s2, key, ks)

    def test_true_matrix_recovers_differential(self):
        s1, s2, key, c1, c2 = self._setup()
        res = differential_attack(c1, c2, [key.A_s])
        got = res.candidates[0].reconstruction.samples
        np.testing.assert_allclose(got, s1.samples - s2.samples, atol=1e-9)

    def test_scaled_matrix_gives_scaled_differential(self):
        s1, s2, key, c1, c2 = self._setup(32)
        res = differential_attack(c1, c2, [key.A_s, 2.5 * key.A_s])
        a = res.candidates[0].reconstruction.samples
        b = res.candidates[1].reconstruction.samples
        exact, scaled = (a, b) if res.candidates[0].trial_index == 0 else (b, a)
        np.testing.assert_allclose(scaled, exact / 2.5, atol=1e-9)

    def test_published_mismatch_pair(self):
        # the concrete large-mismatch example matrices
        A_s = np.array([[0.7123, -0.4272], [0.1958, 0.1295]])
        A_tilde = np.array([[0.5914, 0.9527], [0.5726, 0.1437]])
        s1, s2, _, _, _ = self._setup(33)
        key = MixingKey(A_s, np.zeros((2, 2)))
        ks = SignalBlock(np.zeros((2, 60)), 120, "keystream")
        c1, c2 = encrypt(s1, key, ks), encrypt(s2, key, ks)
        res = differential_attack(c1, c2, [A_tilde])
        mixing = np.linalg.inv(A_tilde) @ A_s
        want = mixing @ (s1.samples - s2.samples)
        np.testing.assert_allclose(res.candidates[0].reconstruction.samples,
                                   want, atol=1e-9)

    def test_no_winner_selected(self):
        _, _, _, c1, c2 = self._setup(34)
        res = differential_attack(c1, c2, 5, master_seed=9)
        assert res.assembled is None
        assert len(res.candidates) == 5
        scores = [c.score for c in res.candidates]
        assert scores == sorted(scores)

    def test_shape_mismatch(self):
        _, _, _, c1, _ = self._setup(35)
        other = SignalBlock(np.zeros((3, 60)), 180, "ciphertext")
        with pytest.raises(Exception):
            differential_attack(c1, other, 1)


class TestKnownPlaintextAttack:
    @pytest.mark.parametrize("mode", ["general", "structured"])
    @pytest.mark.parametrize("P", [2, 4])
    def test_recovers_key_material(self, mode, P):
        s1, key, ks, params = random_instance(P, P, 80, mode, 41 + P)
        s2 = random_plaintext(P, 80, 4100 + P)
        pairs = [(s1, encrypt(s1, key, ks)), (s2, encrypt(s2, key, ks))]
        res = known_plaintext_attack(pairs)
        assert np.abs(res.recovered_As - key.A_s).max() <= 1e-6
        # held-out ciphertext of covered length decrypts exactly
        s3 = random_plaintext(P, 80, 4200 + P)
        c3 = encrypt(s3, key, ks)
        got = decrypt_with_recovered(c3, res.recovered_As, res.recovered_mask)
        assert np.abs(got.samples - s3.samples).max() <= 1e-6

    def test_identical_plaintexts_rank_deficient(self):
        s1, key, ks, _ = random_instance(2, 2, 20, "general", 44)
        c1 = encrypt(s1, key, ks)
        with pytest.raises(RankDeficientError):
            known_plaintext_attack([(s1, c1), (s1, c1)])

    def test_recovered_material_reencrypts(self):
        s1, key, ks, _ = random_instance(3, 3, 50, "general", 45)
        s2 = random_plaintext(3, 50, 46)
        pairs = [(s1, encrypt(s1, key, ks)), (s2, encrypt(s2, key, ks))]
        res = known_plaintext_attack(pairs)
        again = res.recovered_As @ s1.samples + res.recovered_mask
        assert np.abs(again - pairs[0][1].samples).max() <= 1e-9

    def test_needs_two_pairs(self):
        s1, key, ks, _ = random_instance(2, 2, 20, "general", 47)
        with pytest.raises(ValueError):
            known_plaintext_attack([(s1, encrypt(s1, key, ks))])


class TestKeystreamRecovery:
    def test_matches_generator(self):
        plain, key, ks, params = random_instance(2, 2, 50, "structured", 51)
        cipher = encrypt(plain, key, ks)
        B, beta = key.structured
        rec = recover_keystream_structured((plain, cipher), B, beta)
        assert np.abs(rec.samples - ks.samples).max() <= 1e-9

    def test_reencryption_round_trip(self):
        plain, key, ks, params = random_instance(2, 2, 50, "structured", 52)
        cipher = encrypt(plain, key, ks)
        B, beta = key.structured
        rec = recover_keystream_structured((plain, cipher), B, beta)
        again = B @ (plain.samples + beta * rec.samples)
        assert np.abs(again - cipher.samples).max() <= 1e-9

    def test_published_sign_breaks_round_trip(self):
        plain, key, ks, params = random_instance(2, 2, 50, "structured", 53)
        cipher = encrypt(plain, key, ks)
        B, beta = key.structured
        rec = recover_keystream_structured((plain, cipher), B, beta,
                                           published_sign=True)
        again = B @ (plain.samples + beta * rec.samples)
        assert np.abs(again - cipher.samples).max() > 1e-3

    def test_zero_keystream(self):
        _, key, _, _ = random_instance(2, 2, 10, "structured", 54)
        B, beta = key.structured
        plain = random_plaintext(2, 10, 55)
        zk = SignalBlock(np.zeros((2, 10)), 20, "keystream")
        cipher = encrypt(plain, key, zk)
        rec = recover_keystream_structured((plain, cipher), B, beta)
        assert np.abs(rec.samples).max() <= 1e-12


class TestChosenTextAttacks:
    def test_cpa_exact_in_three_queries(self):
        _, key, ks, params = random_instance(2, 2, 30, "general", 61)
        calls = []

        def oracle(s):
            calls.append(s)
            return encrypt(s, key, ks)

        res = chosen_plaintext_attack(oracle, 2, 2, 30)
        assert len(calls) == 3 and res.oracle_queries == 3
        assert np.abs(res.recovered_As - key.A_s).max() <= 1e-6
        assert np.abs(res.recovered_mask - key.A_k @ ks.samples).max() <= 1e-6

    def test_zero_plaintext_exposes_mask(self):
        _, key, ks, _ = random_instance(2, 2, 30, "general", 62)
        z = SignalBlock(np.zeros((2, 30)), 60, "plaintext")
        c = encrypt(z, key, ks)
        np.testing.assert_allclose(c.samples, key.A_k @ ks.samples, atol=1e-12)

    def test_cca_decrypts_unseen_ciphertext(self):
        _, key, ks, _ = random_instance(2, 2, 30, "general", 63)
        res = chosen_ciphertext_attack(lambda c: decrypt(c, key, ks), 2, 2, 30)
        assert res.oracle_queries == 3
        s = random_plaintext(2, 30, 64)
        c = encrypt(s, key, ks)
        got = decrypt_with_recovered(c, res.recovered_As, res.recovered_mask)
        assert mae(s, got).aggregate_mae <= 1e-6


class TestExhaustiveGuess:
    def test_injected_true_key_wins_every_segment(self, speech_asset):
        plain = to_signal(speech_asset, 2)
        params = CipherParams(2, 2, "structured", 1.0)
        master = 71
        B = guess_matrix(master, 3, 2)  # trial 3 will regenerate exactly this
        key = MixingKey(B, params.beta * B, structured=(B, params.beta))
        ks = generate_keystream(SeedKey(72), 2, plain.T)
        cipher = encrypt(plain, key, ks)
        res = exhaustive_guess_attack(cipher, ks, params, 8, master)
        top = res.candidates[0]
        assert top.trial_index == 3
        plain_mane = mane(plain).per_segment_mane
        assert np.allclose(top.quality.per_segment_mane, plain_mane, atol=1e-6)
        assert np.abs(res.assembled.samples - plain.samples).max() <= 1e-6

    def test_deterministic_given_master_seed(self):
        plain, key, ks, params = random_instance(2, 2, 40, "structured", 73)
        cipher = encrypt(plain, key, ks)
        r1 = exhaustive_guess_attack(cipher, ks, params, 50, 5)
        r2 = exhaustive_guess_attack(cipher, ks, params, 50, 5)
        assert [c.trial_index for c in r1.candidates] == \
            [c.trial_index for c in r2.candidates]
        assert np.array_equal(r1.assembled.samples, r2.assembled.samples)
        assert np.array_equal(r1.recovered_As_inv, r2.recovered_As_inv)

    def test_candidates_sorted_and_bounded(self):
        plain, key, ks, params = random_instance(2, 2, 40, "structured", 74)
        cipher = encrypt(plain, key, ks)
        res = exhaustive_guess_attack(cipher, ks, params, 100, 6)
        scores = [c.score for c in res.candidates]
        assert scores == sorted(scores)
        assert len(res.candidates) <= attacks.TOP_CANDIDATES + params.P

    def test_inverse_rows_come_from_winners(self):
        plain, key, ks, params = random_instance(2, 2, 40, "structured", 75)
        cipher = encrypt(plain, key, ks)
        res = exhaustive_guess_attack(cipher, ks, params, 30, 7)
        winners = {}
        for c in res.candidates:
            seg = np.array(c.quality.per_segment_mane)
            for i in range(2):
                if np.isclose(seg[i], np.array(res.assembled_quality.per_segment_mane)[i]):
                    winners[i] = c
        for i, c in winners.items():
            row = np.linalg.inv(c.guess)[i]
            np.testing.assert_allclose(res.recovered_As_inv[i], row, atol=1e-12)


class TestSensitivityScan:
    def test_tiny_epsilon_limit(self):
        plain = random_plaintext(2, 50, 81)
        params = CipherParams(2, 2, "general")
        curve = sensitivity_scan(plain, params, [1e-12], 5, 82)
        assert curve.points[0][1] <= 1e-6

    def test_deterministic(self):
        plain = random_plaintext(2, 30, 83)
        params = CipherParams(2, 2, "general")
        c1 = sensitivity_scan(plain, params, [0.01, 0.1], 10, 84)
        c2 = sensitivity_scan(plain, params, [0.01, 0.1], 10, 84)
        assert c1.points == c2.points

    def test_csv_format(self):
        plain = random_plaintext(2, 30, 85)
        params = CipherParams(2, 2, "general")
        csv = sensitivity_scan(plain, params, [0.01], 3, 86).to_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "epsilon,mean_mae,std_mae,trials"
        assert len(lines) == 2

    def test_curve_validation(self):
        with pytest.raises(ValueError):
            attacks.SensitivityCurve(((0.1, 1.0, 0.0, 5), (0.05, 2.0, 0.0, 5)))
