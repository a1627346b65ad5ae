"""Matrix-masking multimedia cipher plus the cryptanalysis that breaks it."""

__version__ = "0.1.0"

from .cipher import (CipherParams, MixingKey, SeedKey, SignalBlock, decrypt,
                     decrypt_structured, encrypt, equivalent_stream_form,
                     generate_key, generate_keystream, load_key, save_key)
from .corpus import corpus_path, load_corpus
from .media import (MediaAsset, QualityReport, from_signal, load_asset, mae,
                    mane, store_asset, to_signal)
from .attacks import (AttackResult, KeySpaceModel, SensitivityCurve,
                      chosen_ciphertext_attack, chosen_plaintext_attack,
                      dac_row_decrypt, differential_attack,
                      exhaustive_guess_attack, hit_probability, keyspace_size,
                      known_plaintext_attack, recover_keystream_structured,
                      required_plaintexts, sensitivity_scan)

__all__ = [name for name in dir() if not name.startswith("_")]
