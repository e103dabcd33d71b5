"""Content scrambler stand-in.

The real broadcast scrambling algorithm is licensed under non-disclosure and
cannot be reproduced here, so content protection is modeled with AES-CTR
keyed by the control word, with the counter block derived from the epoch.
Like the real thing it is unauthenticated: descrambling under a wrong key
yields garbage rather than an error. Scramble and descramble are the same
keystream XOR.
"""

from __future__ import annotations

import hashlib

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .encoding import u64


def _counter_block(epoch: int) -> bytes:
    return hashlib.sha512(b"cwbind/scramble" + u64(epoch)).digest()[:16]


def scramble(control_word: bytes, epoch: int, data: bytes) -> bytes:
    enc = Cipher(algorithms.AES(control_word), modes.CTR(_counter_block(epoch))).encryptor()
    return enc.update(data) + enc.finalize()


def descramble(control_word: bytes, epoch: int, data: bytes) -> bytes:
    return scramble(control_word, epoch, data)
