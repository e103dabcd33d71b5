"""Certificate-authenticated key transport (the pre-existing protocol shape).

Receivers are initialized with the authority public key and their own
decryption private key. Phase 1 transports a fresh long-term key to each
receiver under the sender's *certified* signature key; phase 2 wraps each
epoch secret under the long-term key for the authorized receivers.

Receiver-side checks in phase 1, in order: the sender certificate verifies
under the installed authority key, names a sender role, and is not on the
known revocation list; the signed blob verifies under the certified sender
key; this receiver is the intended recipient; the long-term key decrypts.
A failure at any point aborts and leaves the receiver state unchanged.

Signed blob layout (injective): 8-byte recipient id, then the length-prefixed
public-key ciphertext of the long-term key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .encoding import Reader, encode_id, lp
from .errors import ProtocolError
from .suite import CipherSuite, Drbg, KeyPair, SignedMessage
from .ttp import Certificate, Directory, ROLE_SENDER, TtpState, certify_sender, verify_certificate


@dataclass(frozen=True)
class CertBundle:
    """Phase 1 message set: sender certificate plus the signed key blob."""

    sender_cert: Certificate
    signed_blob: SignedMessage

    def to_bytes(self) -> bytes:
        return lp(self.sender_cert.to_bytes()) + lp(self.signed_blob.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "CertBundle":
        r = Reader(data)
        cert = Certificate.from_bytes(r.take_lp())
        blob = SignedMessage.from_bytes(r.take_lp())
        r.done()
        return cls(cert, blob)


@dataclass
class CertSenderState:
    suite: CipherSuite
    sender_id: bytes
    sig_keypair: KeyPair
    sender_cert: Certificate
    directory: Directory
    ltk_store: dict[bytes, bytes] = field(default_factory=dict, repr=False)
    fresh_keys_per_phase1: bool = False


@dataclass
class CertReceiverState:
    suite: CipherSuite
    receiver_id: bytes
    authority_pk: bytes  # installed at initialization, immutable thereafter
    enc_keypair: KeyPair
    ltk: bytes | None = field(default=None, repr=False)
    known_revoked: set[int] = field(default_factory=set)


def sender_init(suite: CipherSuite, sender_id: bytes | int, rng: Drbg,
                ttp: TtpState, directory: Directory) -> CertSenderState:
    """Generate the sender signature key pair and obtain its certificate."""
    sender_id = encode_id(sender_id)
    pair = suite.keygen("sig", rng)
    cert = certify_sender(ttp, sender_id, pair.public_key)
    return CertSenderState(suite, sender_id, pair, cert, directory)


def receiver_init(suite: CipherSuite, receiver_id: bytes | int,
                  authority_pk: bytes, rng: Drbg) -> CertReceiverState:
    return CertReceiverState(
        suite=suite,
        receiver_id=encode_id(receiver_id),
        authority_pk=authority_pk,
        enc_keypair=suite.keygen("pke", rng),
    )


def refresh_sender_key(sender: CertSenderState, rng: Drbg, ttp: TtpState) -> Certificate:
    """Generate a new sender key pair and obtain a fresh certificate."""
    sender.sig_keypair = sender.suite.keygen("sig", rng)
    sender.sender_cert = certify_sender(ttp, sender.sender_id, sender.sig_keypair.public_key)
    return sender.sender_cert


def _blob_message(receiver_id: bytes, key_ct: bytes) -> bytes:
    return receiver_id + lp(key_ct)


def phase1_send(sender: CertSenderState, receiver_id: bytes | int, rng: Drbg,
                ttp: TtpState | None = None) -> CertBundle:
    """Produce the phase 1 bundle for one receiver and remember the new key."""
    receiver_id = encode_id(receiver_id)
    if sender.fresh_keys_per_phase1:
        if ttp is None:
            raise ProtocolError("fresh-keys mode needs the authority to certify the new key")
        refresh_sender_key(sender, rng, ttp)
    receiver_cert = sender.directory.receiver_cert(receiver_id)
    if receiver_cert is None:
        raise ProtocolError(f"receiver {int.from_bytes(receiver_id, 'big')} not in directory")
    if receiver_cert.serial in sender.directory.revoked_serials:
        raise ProtocolError("receiver certificate is revoked")

    ltk = rng.read(sender.suite.secret_bytes)
    key_ct = sender.suite.pke_encrypt(receiver_cert.subject_pk, ltk, rng)
    blob = sender.suite.sign(sender.sig_keypair.private_key, _blob_message(receiver_id, key_ct))
    sender.ltk_store[receiver_id] = ltk
    return CertBundle(sender_cert=sender.sender_cert, signed_blob=blob)


def phase1_receive(recv: CertReceiverState, bundle: CertBundle) -> None:
    """Run all receiver checks, then commit the long-term key."""
    verify_certificate(recv.suite, bundle.sender_cert, recv.authority_pk)
    if bundle.sender_cert.subject_role != ROLE_SENDER:
        raise ProtocolError("certificate subject is not a sender")
    if bundle.sender_cert.serial in recv.known_revoked:
        raise ProtocolError("sender certificate is revoked")
    message = recv.suite.verify_recover(bundle.sender_cert.subject_pk, bundle.signed_blob)
    r = Reader(message)
    intended = r.take(8)
    key_ct = r.take_lp()
    r.done()
    if intended != recv.receiver_id:
        raise ProtocolError("not the intended recipient")
    ltk = recv.suite.pke_decrypt(recv.enc_keypair.private_key, key_ct)
    recv.ltk = ltk


def phase2_send(sender: CertSenderState, receiver_id: bytes | int, secret: bytes,
                context: bytes = b"") -> bytes:
    """Wrap the epoch secret for one authorized receiver.

    ``context`` is authenticated alongside the secret; the transport mapping
    uses it to bind the epoch number so relabeled deliveries are rejected.
    """
    receiver_id = encode_id(receiver_id)
    ltk = sender.ltk_store.get(receiver_id)
    if ltk is None:
        raise ProtocolError("receiver has no long-term key (phase 1 not run)")
    return sender.suite.sym_encrypt(ltk, secret, aad=context)


def phase2_receive(recv: CertReceiverState, ciphertext: bytes, context: bytes = b"") -> bytes:
    """Unwrap the epoch secret; authentication failure raises CryptoError."""
    if recv.ltk is None:
        raise ProtocolError("no long-term key established")
    return recv.suite.sym_decrypt(recv.ltk, ciphertext, aad=context)
