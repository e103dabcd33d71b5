"""Broadcast CA message formats and the protected head-end-to-client channel.

All formats are versioned, big-endian, and length-prefixed; real transport
stream packetization is out of scope. Control-word cadence is a logical epoch
counter: one epoch, one secret.

Entitlement management message (magic ``EM``, version 1)::

    "EM" | u8 version | u16 ca_system_id | u8 kind | 8-byte addressee | lp(payload)

    kind                      addressee   payload protection
    1 BROADCAST_SENDER_PK     broadcast   sealed(group):  raw sender pk
    2 BROADCAST_CERT          broadcast   sealed(group):  certificate bytes
    3 PER_RECEIVER_ENROLL     receiver    protect(recv):  lp(blob) lp(ltk copy)
                                          lp(group key) lp(announce)
    4 PER_RECEIVER_ENTITLEMENT receiver   protect(recv):  u8 flag [lp(ecm key)]
    5 PK_SET_UPDATE           broadcast   sealed(group):  u16 n, n*lp(pk)
    6 CRL_UPDATE              broadcast   sealed(group):  signed serial list

Broadcast kinds are integrity-protected only (the content is public); the
per-receiver kinds are confidentiality- and integrity-protected under the
receiver's provisioning key. The fixed header is bound as associated data in
both cases.

Entitlement control message (magic ``EC``, version 1)::

    "EC" | u8 version | u16 ca_system_id | u32 epoch | lp(protected_secret)

The protected secret carries exactly one n-bit value (the epoch's random
value for binding-protocol systems, the control word otherwise), encrypted
under the entitlement key shared by the clients of currently authorized
decoders.

Broadcast frame (magic ``BF``, version 1), the unit of capture/replay::

    "BF" | u8 version | u32 epoch | lp(scrambled content)
         | u16 n_ecms, n*lp(ecm) | u16 n_emms, n*lp(emm)

Frames flow one way; no field exists for receiver responses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .encoding import BROADCAST_ADDR, Reader, lp, u16, u32, u8
from .errors import WireError
from .suite import CipherSuite, SignedMessage

EMM_MAGIC = b"EM"
ECM_MAGIC = b"EC"
FRAME_MAGIC = b"BF"
WIRE_VERSION = 1


class EmmKind(IntEnum):
    BROADCAST_SENDER_PK = 1
    BROADCAST_CERT = 2
    PER_RECEIVER_ENROLL = 3
    PER_RECEIVER_ENTITLEMENT = 4
    PK_SET_UPDATE = 5
    CRL_UPDATE = 6


BROADCAST_KINDS = frozenset(
    {EmmKind.BROADCAST_SENDER_PK, EmmKind.BROADCAST_CERT, EmmKind.PK_SET_UPDATE, EmmKind.CRL_UPDATE}
)


@dataclass(frozen=True)
class Emm:
    ca_system_id: int
    kind: EmmKind
    addressee: bytes  # 8-byte receiver id, or BROADCAST_ADDR
    payload: bytes

    def header(self) -> bytes:
        return (
            EMM_MAGIC
            + u8(WIRE_VERSION)
            + u16(self.ca_system_id)
            + u8(int(self.kind))
            + self.addressee
        )

    def is_broadcast(self) -> bool:
        return self.addressee == BROADCAST_ADDR


@dataclass(frozen=True)
class Ecm:
    ca_system_id: int
    epoch: int
    protected_secret: bytes

    def header(self) -> bytes:
        return ECM_MAGIC + u8(WIRE_VERSION) + u16(self.ca_system_id) + u32(self.epoch)


@dataclass(frozen=True)
class BroadcastFrame:
    epoch: int
    scrambled_content: bytes
    ecms: tuple[Ecm, ...]
    emms: tuple[Emm, ...]


def emm_aad(ca_system_id: int, kind: EmmKind, addressee: bytes) -> bytes:
    """The fixed EMM header, bound as associated data by payload protection."""
    return EMM_MAGIC + u8(WIRE_VERSION) + u16(ca_system_id) + u8(int(kind)) + addressee


def ecm_aad(ca_system_id: int, epoch: int) -> bytes:
    """The fixed ECM header, bound as associated data by payload protection."""
    return ECM_MAGIC + u8(WIRE_VERSION) + u16(ca_system_id) + u32(epoch)


def encode_emm(emm: Emm) -> bytes:
    if len(emm.addressee) != 8:
        raise ValueError("addressee must be 8 bytes")
    return emm.header() + lp(emm.payload)


def decode_emm(data: bytes) -> Emm:
    r = Reader(data)
    r.expect(EMM_MAGIC, "EMM magic")
    version = r.take_u8()
    if version != WIRE_VERSION:
        raise WireError(f"unsupported EMM version {version} at offset {r.offset - 1}")
    ca_system_id = r.take_u16()
    kind_code = r.take_u8()
    try:
        kind = EmmKind(kind_code)
    except ValueError:
        raise WireError(f"unknown EMM kind {kind_code} at offset {r.offset - 1}") from None
    addressee = r.take(8)
    payload = r.take_lp()
    r.done()
    return Emm(ca_system_id, kind, addressee, payload)


def encode_ecm(ecm: Ecm) -> bytes:
    return ecm.header() + lp(ecm.protected_secret)


def decode_ecm(data: bytes) -> Ecm:
    r = Reader(data)
    r.expect(ECM_MAGIC, "ECM magic")
    version = r.take_u8()
    if version != WIRE_VERSION:
        raise WireError(f"unsupported ECM version {version} at offset {r.offset - 1}")
    ca_system_id = r.take_u16()
    epoch = r.take_u32()
    protected_secret = r.take_lp()
    r.done()
    return Ecm(ca_system_id, epoch, protected_secret)


def encode_frame(frame: BroadcastFrame) -> bytes:
    out = FRAME_MAGIC + u8(WIRE_VERSION) + u32(frame.epoch) + lp(frame.scrambled_content)
    out += u16(len(frame.ecms))
    for ecm in frame.ecms:
        out += lp(encode_ecm(ecm))
    out += u16(len(frame.emms))
    for emm in frame.emms:
        out += lp(encode_emm(emm))
    return out


def decode_frame(data: bytes) -> BroadcastFrame:
    r = Reader(data)
    r.expect(FRAME_MAGIC, "frame magic")
    version = r.take_u8()
    if version != WIRE_VERSION:
        raise WireError(f"unsupported frame version {version} at offset {r.offset - 1}")
    epoch = r.take_u32()
    scrambled = r.take_lp()
    ecms = tuple(decode_ecm(r.take_lp()) for _ in range(r.take_u16()))
    emms = tuple(decode_emm(r.take_lp()) for _ in range(r.take_u16()))
    r.done()
    return BroadcastFrame(epoch, scrambled, ecms, emms)


# ---------------------------------------------------------------------------
# channel protection
# ---------------------------------------------------------------------------


def protect(suite: CipherSuite, key: bytes, plaintext: bytes, aad: bytes) -> bytes:
    """Confidentiality + integrity for per-receiver payloads and ECM secrets."""
    return suite.sym_encrypt(key, plaintext, aad=aad)


def unprotect(suite: CipherSuite, key: bytes, blob: bytes, aad: bytes) -> bytes:
    return suite.sym_decrypt(key, blob, aad=aad)


def seal_broadcast(suite: CipherSuite, key: bytes, body: bytes, aad: bytes) -> bytes:
    """Integrity-only protection for broadcast payloads (body stays clear)."""
    return suite.seal(key, body, aad=aad)


def open_broadcast(suite: CipherSuite, key: bytes, sealed: bytes, aad: bytes) -> bytes:
    return suite.open_sealed(key, sealed, aad=aad)


# ---------------------------------------------------------------------------
# per-kind payload bodies (what goes inside the protection)
# ---------------------------------------------------------------------------


def build_enroll_body(blob: bytes, ltk_copy: bytes, group_key: bytes, announce: bytes) -> bytes:
    """Enrollment body: signed blob, long-term key copy for the client,
    broadcast group key, and the current sender announcement (certificate
    bytes or bare public key) so enrollment is self-contained."""
    return lp(blob) + lp(ltk_copy) + lp(group_key) + lp(announce)


def parse_enroll_body(body: bytes) -> tuple[bytes, bytes, bytes, bytes]:
    r = Reader(body)
    out = (r.take_lp(), r.take_lp(), r.take_lp(), r.take_lp())
    r.done()
    return out


def build_entitlement_body(entitled: bool, ecm_key: bytes = b"") -> bytes:
    if entitled:
        return u8(1) + lp(ecm_key)
    return u8(0)


def parse_entitlement_body(body: bytes) -> tuple[bool, bytes]:
    r = Reader(body)
    flag = r.take_u8()
    if flag == 0:
        r.done()
        return False, b""
    if flag != 1:
        raise WireError(f"bad entitlement flag {flag} at offset 0")
    key = r.take_lp()
    r.done()
    return True, key


def build_pk_set_body(pk_set: tuple[bytes, ...]) -> bytes:
    out = u16(len(pk_set))
    for pk in pk_set:
        out += lp(pk)
    return out


def parse_pk_set_body(body: bytes) -> tuple[bytes, ...]:
    r = Reader(body)
    pks = tuple(r.take_lp() for _ in range(r.take_u16()))
    r.done()
    return pks


def build_crl_body(signed_list: SignedMessage) -> bytes:
    return signed_list.to_bytes()


def parse_crl_body(body: bytes) -> SignedMessage:
    return SignedMessage.from_bytes(body)
