"""Certificate-free key transport with hash-bound epoch secrets (the new shape).

Receivers are initialized with nothing but their own decryption private key:
no authority key is installed and none is consulted, which is what lets a
receiver survive a full authority compromise untouched. Phase 1 delivers a
long-term key under the sender's *bare* public key; the receiver files the
key under exactly the public key that verified the delivery. Phase 2
transports a secret random value, and both ends derive the epoch secret by
hashing that value together with the sender public key set.

The derivation is what protects message authenticity: a forger using any
other key pair can make a receiver complete the protocol, but the receiver
then derives a secret bound to the forger's key, never the honest sender's.
Nothing here requires the public key distribution itself to be protected.

Senders that interoperate on one epoch secret necessarily trust each other
already (they share the secret); this module does not model trust between
them beyond accepting a multi-key set in the derivation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .binding import BindingInput, derive_secret
from .encoding import Reader, encode_id, lp
from .errors import ProtocolError
from .suite import CipherSuite, Drbg, KeyPair, SignedMessage
from .ttp import Directory


@dataclass(frozen=True)
class BindBundle:
    """Phase 1 message set: bare sender public key plus the signed key blob."""

    sender_pk: bytes
    signed_blob: SignedMessage

    def to_bytes(self) -> bytes:
        return lp(self.sender_pk) + lp(self.signed_blob.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "BindBundle":
        r = Reader(data)
        sender_pk = r.take_lp()
        blob = SignedMessage.from_bytes(r.take_lp())
        r.done()
        return cls(sender_pk, blob)


@dataclass
class BindSenderState:
    suite: CipherSuite
    sender_id: bytes
    sig_keypair: KeyPair
    directory: Directory
    ltk_store: dict[bytes, bytes] = field(default_factory=dict, repr=False)
    fresh_keys_per_phase1: bool = False


@dataclass
class BindReceiverState:
    # Deliberately no authority key field anywhere in this state.
    suite: CipherSuite
    receiver_id: bytes
    enc_keypair: KeyPair
    ltk_by_sender: dict[bytes, bytes] = field(default_factory=dict, repr=False)
    active_pk_set: tuple[bytes, ...] = ()


def sender_init(suite: CipherSuite, sender_id: bytes | int, rng: Drbg,
                directory: Directory) -> BindSenderState:
    """Generate the sender key pair. No authority interaction happens here."""
    return BindSenderState(suite, encode_id(sender_id), suite.keygen("sig", rng), directory)


def receiver_init(suite: CipherSuite, receiver_id: bytes | int, rng: Drbg) -> BindReceiverState:
    return BindReceiverState(
        suite=suite,
        receiver_id=encode_id(receiver_id),
        enc_keypair=suite.keygen("pke", rng),
    )


def refresh_sender_key(sender: BindSenderState, rng: Drbg) -> bytes:
    """Generate a new sender key pair; returns the new public key."""
    sender.sig_keypair = sender.suite.keygen("sig", rng)
    return sender.sig_keypair.public_key


def _blob_message(receiver_id: bytes, key_ct: bytes) -> bytes:
    return receiver_id + lp(key_ct)


def phase1_send(sender: BindSenderState, receiver_id: bytes | int, rng: Drbg) -> BindBundle:
    """Produce the phase 1 bundle for one receiver and remember the new key."""
    receiver_id = encode_id(receiver_id)
    if sender.fresh_keys_per_phase1:
        refresh_sender_key(sender, rng)
    receiver_cert = sender.directory.receiver_cert(receiver_id)
    if receiver_cert is None:
        raise ProtocolError(f"receiver {int.from_bytes(receiver_id, 'big')} not in directory")
    if receiver_cert.serial in sender.directory.revoked_serials:
        raise ProtocolError("receiver certificate is revoked")

    ltk = rng.read(sender.suite.secret_bytes)
    key_ct = sender.suite.pke_encrypt(receiver_cert.subject_pk, ltk, rng)
    blob = sender.suite.sign(sender.sig_keypair.private_key, _blob_message(receiver_id, key_ct))
    sender.ltk_store[receiver_id] = ltk
    return BindBundle(sender_pk=sender.sig_keypair.public_key, signed_blob=blob)


def phase1_receive(recv: BindReceiverState, bundle: BindBundle) -> None:
    """Verify under the delivered key and file the long-term key under it.

    Filing under the verifying key is load-bearing: a bundle re-signed by an
    interloper stores its key under the interloper's public key, so later
    derivations that name the honest sender's key cannot find or use it.
    A second delivery for the same sender key overwrites the stored key,
    which is how re-enrollment after a sender key change works.
    """
    message = recv.suite.verify_recover(bundle.sender_pk, bundle.signed_blob)
    r = Reader(message)
    intended = r.take(8)
    key_ct = r.take_lp()
    r.done()
    if intended != recv.receiver_id:
        raise ProtocolError("not the intended recipient")
    ltk = recv.suite.pke_decrypt(recv.enc_keypair.private_key, key_ct)
    recv.ltk_by_sender[bundle.sender_pk] = ltk


def shared_epoch_secret(pk_set: tuple[bytes, ...], rng: Drbg,
                        n_bits: int) -> tuple[bytes, bytes]:
    """Draw the secret random value and derive the epoch secret from it.

    This is the head-end's shared step: one random value per epoch, one
    derived secret, identical for every interoperating sender. The random
    value has the same length as the derived secret.
    """
    rand = rng.read(n_bits // 8)
    secret = derive_secret(BindingInput(tuple(sorted(pk_set)), rand), n_bits)
    return rand, secret


def phase2_send(sender: BindSenderState, receiver_id: bytes | int, rand: bytes,
                context: bytes = b"") -> bytes:
    """Wrap the secret random value for one authorized receiver.

    ``context`` is authenticated alongside the value; the transport mapping
    uses it to bind the epoch number so relabeled deliveries are rejected.
    """
    receiver_id = encode_id(receiver_id)
    ltk = sender.ltk_store.get(receiver_id)
    if ltk is None:
        raise ProtocolError("receiver has no long-term key (phase 1 not run)")
    return sender.suite.sym_encrypt(ltk, rand, aad=context)


def phase2_receive(recv: BindReceiverState, sender_pk: bytes, ciphertext: bytes,
                   context: bytes = b"") -> bytes:
    """Unwrap the random value and derive the epoch secret bound to the keys.

    The key set fed to the derivation is the receiver's active set when one
    has been installed, otherwise the singleton of the delivering sender's
    key (the single-sender deployment). The delivering key must be in the
    set either way.
    """
    ltk = recv.ltk_by_sender.get(sender_pk)
    if ltk is None:
        raise ProtocolError("no long-term key stored under this sender key")
    rand = recv.suite.sym_decrypt(ltk, ciphertext, aad=context)
    pk_set = recv.active_pk_set if recv.active_pk_set else (sender_pk,)
    if sender_pk not in pk_set:
        raise ProtocolError("delivering sender key is not in the active key set")
    return derive_secret(BindingInput(tuple(sorted(pk_set)), rand), recv.suite.secret_bits)
