"""Pluggable cryptographic primitives with one deterministic default suite.

The suite bundles four primitive slots, each resolved from a registry by a
string scheme id:

  * public-key encryption  -- default ``x25519-hybrid``: X25519 key agreement
    wrapping the payload with authenticated AES-GCM, so plaintexts of any
    length fit and decryption under a wrong private key fails detectably.
  * signatures             -- default ``ed25519``: signature with appendix;
    the signed message travels with the signature and ``verify_recover``
    returns it after verification.
  * symmetric encryption   -- default ``aesgcm``: AES-GCM with the nonce
    derived from (key, aad, plaintext). Deterministic by construction so
    seeded runs produce byte-identical transcripts; every value encrypted by
    the protocols is fresh random material, so nonce determinism never
    repeats a (key, nonce) pair with two plaintexts.
  * hash                   -- default ``sha512``.

All randomness is drawn from a Drbg, a hash-counter generator: two runs from
equal seeds produce byte-identical output. Production-grade entropy is a
non-goal; reproducibility is the point.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .encoding import Reader, lp, u64
from .errors import CryptoError

_RAW = serialization.Encoding.Raw
_RAW_PUB = serialization.PublicFormat.Raw

GCM_NONCE_LEN = 12
GCM_TAG_LEN = 16

VALID_SECRET_BITS = (128, 192, 256)


class Drbg:
    """Deterministic byte generator: block ``i`` is SHA-512(seed || i)."""

    def __init__(self, seed: bytes):
        self.seed = bytes(seed)
        self.counter = 0
        self._buf = b""

    @classmethod
    def from_int(cls, seed: int) -> "Drbg":
        return cls(u64(seed))

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            self._buf += hashlib.sha512(self.seed + u64(self.counter)).digest()
            self.counter += 1
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def child(self, label: str | bytes) -> "Drbg":
        """Independent generator derived from this seed and a label.

        Child derivation never consumes from the parent stream, so wiring
        order of components does not perturb their draws.
        """
        if isinstance(label, str):
            label = label.encode()
        return Drbg(hashlib.sha512(self.seed + b"/child/" + label).digest())


@dataclass(frozen=True)
class KeyPair:
    scheme: str
    public_key: bytes
    private_key: bytes = field(repr=False)


@dataclass(frozen=True)
class SignedMessage:
    """A message together with its signature (signature with appendix)."""

    message: bytes
    signature: bytes

    def to_bytes(self) -> bytes:
        return lp(self.message) + lp(self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignedMessage":
        r = Reader(data)
        sm = cls(message=r.take_lp(), signature=r.take_lp())
        r.done()
        return sm

    @classmethod
    def read_from(cls, r: Reader) -> "SignedMessage":
        return cls(message=r.take_lp(), signature=r.take_lp())


# ---------------------------------------------------------------------------
# default scheme implementations
# ---------------------------------------------------------------------------


class Ed25519Sig:
    """Signature with appendix over raw 32-byte Ed25519 keys."""

    name = "ed25519"
    public_key_len = 32

    def keygen(self, rng: Drbg) -> KeyPair:
        sk = rng.read(32)
        pk = Ed25519PrivateKey.from_private_bytes(sk).public_key().public_bytes(_RAW, _RAW_PUB)
        return KeyPair(scheme=self.name, public_key=pk, private_key=sk)

    def sign(self, private_key: bytes, message: bytes) -> SignedMessage:
        if not message:
            raise ValueError("refusing to sign an empty message")
        sig = Ed25519PrivateKey.from_private_bytes(private_key).sign(message)
        return SignedMessage(message=message, signature=sig)

    def verify_recover(self, public_key: bytes, sm: SignedMessage) -> bytes:
        try:
            Ed25519PublicKey.from_public_bytes(public_key).verify(sm.signature, sm.message)
        except (InvalidSignature, ValueError) as exc:
            raise CryptoError("signature verification failed") from exc
        return sm.message


class AesGcmSym:
    """AES-GCM with a deterministic nonce derived from (key, aad, plaintext)."""

    name = "aesgcm"

    def _nonce(self, key: bytes, aad: bytes, plaintext: bytes) -> bytes:
        material = b"cwbind/sym-nonce" + lp(key) + lp(aad) + lp(plaintext)
        return hashlib.sha512(material).digest()[:GCM_NONCE_LEN]

    def encrypt(self, key: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
        nonce = self._nonce(key, aad, plaintext)
        return nonce + AESGCM(key).encrypt(nonce, plaintext, aad)

    def decrypt(self, key: bytes, ciphertext: bytes, aad: bytes = b"") -> bytes:
        if len(ciphertext) < GCM_NONCE_LEN + GCM_TAG_LEN:
            raise CryptoError("ciphertext too short")
        nonce, body = ciphertext[:GCM_NONCE_LEN], ciphertext[GCM_NONCE_LEN:]
        try:
            return AESGCM(key).decrypt(nonce, body, aad)
        except InvalidTag as exc:
            raise CryptoError("authenticated decryption failed") from exc

    def tag_only(self, key: bytes, body: bytes, aad: bytes = b"") -> bytes:
        """Integrity-only seal: cleartext body followed by nonce and tag."""
        nonce = self._nonce(key, aad, body)
        tag = AESGCM(key).encrypt(nonce, b"", aad + body)
        return body + nonce + tag

    def check_tag(self, key: bytes, sealed: bytes, aad: bytes = b"") -> bytes:
        trailer = GCM_NONCE_LEN + GCM_TAG_LEN
        if len(sealed) < trailer:
            raise CryptoError("sealed blob too short")
        body = sealed[:-trailer]
        nonce = sealed[-trailer:-GCM_TAG_LEN]
        tag = sealed[-GCM_TAG_LEN:]
        try:
            AESGCM(key).decrypt(nonce, tag, aad + body)
        except InvalidTag as exc:
            raise CryptoError("integrity check failed") from exc
        return body


class X25519HybridPke:
    """X25519 key agreement + AES-GCM payload wrap.

    Ciphertext layout: 32-byte ephemeral public key, then the symmetric
    ciphertext. The wrap key binds the ephemeral and recipient public keys,
    and they are also authenticated as associated data, so any bit flip
    anywhere in the ciphertext is rejected.
    """

    name = "x25519-hybrid"
    public_key_len = 32

    def __init__(self, sym: AesGcmSym):
        self._sym = sym

    def keygen(self, rng: Drbg) -> KeyPair:
        sk = rng.read(32)
        pk = X25519PrivateKey.from_private_bytes(sk).public_key().public_bytes(_RAW, _RAW_PUB)
        return KeyPair(scheme=self.name, public_key=pk, private_key=sk)

    def _wrap_key(self, shared: bytes, eph_pub: bytes, recipient_pub: bytes) -> bytes:
        material = b"cwbind/hybrid-wrap" + lp(shared) + lp(eph_pub) + lp(recipient_pub)
        return hashlib.sha512(material).digest()[:32]

    def encrypt(self, public_key: bytes, plaintext: bytes, rng: Drbg) -> bytes:
        eph = X25519PrivateKey.from_private_bytes(rng.read(32))
        eph_pub = eph.public_key().public_bytes(_RAW, _RAW_PUB)
        shared = eph.exchange(X25519PublicKey.from_public_bytes(public_key))
        wrap = self._wrap_key(shared, eph_pub, public_key)
        body = self._sym.encrypt(wrap, plaintext, aad=eph_pub + public_key)
        return eph_pub + body

    def decrypt(self, private_key: bytes, ciphertext: bytes) -> bytes:
        if len(ciphertext) < self.public_key_len:
            raise CryptoError("hybrid ciphertext too short")
        eph_pub = ciphertext[: self.public_key_len]
        body = ciphertext[self.public_key_len :]
        sk = X25519PrivateKey.from_private_bytes(private_key)
        own_pub = sk.public_key().public_bytes(_RAW, _RAW_PUB)
        try:
            shared = sk.exchange(X25519PublicKey.from_public_bytes(eph_pub))
        except ValueError as exc:
            raise CryptoError("invalid ephemeral public key") from exc
        wrap = self._wrap_key(shared, eph_pub, own_pub)
        return self._sym.decrypt(wrap, body, aad=eph_pub + own_pub)


def _sha512(data: bytes) -> bytes:
    return hashlib.sha512(data).digest()


# ---------------------------------------------------------------------------
# registries and suite resolution
# ---------------------------------------------------------------------------

_DEFAULT_SYM = AesGcmSym()

PKE_SCHEMES = {"x25519-hybrid": X25519HybridPke(_DEFAULT_SYM)}
SIG_SCHEMES = {"ed25519": Ed25519Sig()}
SYM_SCHEMES = {"aesgcm": _DEFAULT_SYM}
HASH_SCHEMES = {"sha512": _sha512}


@dataclass(frozen=True)
class SuiteConfig:
    pke_scheme: str = "x25519-hybrid"
    sig_scheme: str = "ed25519"
    sym_scheme: str = "aesgcm"
    hash_scheme: str = "sha512"
    secret_bits: int = 128

    def __post_init__(self):
        for registry, name in (
            (PKE_SCHEMES, self.pke_scheme),
            (SIG_SCHEMES, self.sig_scheme),
            (SYM_SCHEMES, self.sym_scheme),
            (HASH_SCHEMES, self.hash_scheme),
        ):
            if name not in registry:
                raise ValueError(f"unregistered scheme id: {name!r}")
        if self.secret_bits not in VALID_SECRET_BITS:
            raise ValueError(
                f"secret_bits must be one of {VALID_SECRET_BITS}, got {self.secret_bits}"
            )

    @property
    def secret_bytes(self) -> int:
        return self.secret_bits // 8


class CipherSuite:
    """SuiteConfig resolved against the registries, ready to use.

    Two suites compare equal when their configs do; the resolved scheme
    objects are interchangeable by construction.
    """

    def __init__(self, config: SuiteConfig | None = None):
        self.config = config or SuiteConfig()
        self._pke = PKE_SCHEMES[self.config.pke_scheme]
        self._sig = SIG_SCHEMES[self.config.sig_scheme]
        self._sym = SYM_SCHEMES[self.config.sym_scheme]
        self._hash = HASH_SCHEMES[self.config.hash_scheme]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CipherSuite) and self.config == other.config

    def __hash__(self) -> int:
        return hash(self.config)

    @property
    def secret_bytes(self) -> int:
        return self.config.secret_bytes

    @property
    def secret_bits(self) -> int:
        return self.config.secret_bits

    def keygen(self, purpose: str, rng: Drbg) -> KeyPair:
        if purpose == "pke":
            pair = self._pke.keygen(rng)
            probe = b"\x5a" * 16
            if self.pke_decrypt(pair.private_key, self.pke_encrypt(pair.public_key, probe, rng)) != probe:
                raise CryptoError("fresh pke key pair failed its self-test")
        elif purpose == "sig":
            pair = self._sig.keygen(rng)
            if self.verify_recover(pair.public_key, self.sign(pair.private_key, b"self-test")) != b"self-test":
                raise CryptoError("fresh sig key pair failed its self-test")
        else:
            raise ValueError(f"unknown keygen purpose: {purpose!r}")
        return pair

    def pke_encrypt(self, public_key: bytes, plaintext: bytes, rng: Drbg) -> bytes:
        return self._pke.encrypt(public_key, plaintext, rng)

    def pke_decrypt(self, private_key: bytes, ciphertext: bytes) -> bytes:
        return self._pke.decrypt(private_key, ciphertext)

    def sign(self, private_key: bytes, message: bytes) -> SignedMessage:
        return self._sig.sign(private_key, message)

    def verify_recover(self, public_key: bytes, sm: SignedMessage) -> bytes:
        return self._sig.verify_recover(public_key, sm)

    def sym_encrypt(self, key: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
        if len(key) != self.secret_bytes:
            raise ValueError(f"symmetric key must be {self.secret_bytes} bytes, got {len(key)}")
        return self._sym.encrypt(key, plaintext, aad)

    def sym_decrypt(self, key: bytes, ciphertext: bytes, aad: bytes = b"") -> bytes:
        if len(key) != self.secret_bytes:
            raise ValueError(f"symmetric key must be {self.secret_bytes} bytes, got {len(key)}")
        return self._sym.decrypt(key, ciphertext, aad)

    def seal(self, key: bytes, body: bytes, aad: bytes = b"") -> bytes:
        """Integrity-only protection for broadcast payloads (body stays clear)."""
        return self._sym.tag_only(key, body, aad)

    def open_sealed(self, key: bytes, sealed: bytes, aad: bytes = b"") -> bytes:
        return self._sym.check_tag(key, sealed, aad)

    def hash(self, data: bytes) -> bytes:
        return self._hash(data)


def default_suite() -> CipherSuite:
    return CipherSuite(SuiteConfig())
