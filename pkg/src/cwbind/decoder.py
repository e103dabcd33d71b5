"""Decoder: updatable CA client plus content-decryption chip.

The two halves are isolated state machines joined by an explicit channel the
adversary can observe and write to, which is why every message crossing it is
a protocol message the chip checks rather than a bare key. The chip holds the
receiver private key and never lets it, a long-term key, or a derived control
word out; the only thing a successful derivation yields is an opaque handle
that the descrambler alone consumes.

Chip channel message (``u8 kind | lp(payload)``)::

    1 LOAD_LTK       phase 1 bundle bytes (protocol-specific layout)
    2 DERIVE         cert: u32 epoch | lp(wrapped control word)
                     bind: u32 epoch | lp(sender pk) | lp(wrapped random value)
    3 PK_SET_UPDATE  u16 n, n*lp(pk)          (bind chips only)
    4 CRL_UPDATE     signed revocation list   (cert chips only)
    5 LOAD_CW        u32 epoch | lp(raw control word)

LOAD_CW is the legacy channel: legacy chips accept it unchecked, which is
exactly their weakness. Compliant chips reject the kind outright, so knowing
a control word's value never lets an adversary feed it to them.

The CA client is replaceable while the chip stays: swapping in a freshly
personalized client models a downloaded client update after a client-side
breach. A repeated phase 1 delivery for the same sender key overwrites the
stored long-term key (re-enrollment after rotation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from . import bindproto, certproto
from .encoding import Reader, encode_id, lp, u32, u8
from .errors import ProtocolError
from .scramble import descramble as _descramble_bytes
from .suite import CipherSuite, Drbg, SignedMessage
from .ttp import parse_revocation_list
from .wire import (
    Ecm,
    Emm,
    EmmKind,
    build_pk_set_body,
    ecm_aad,
    emm_aad,
    open_broadcast,
    parse_enroll_body,
    parse_entitlement_body,
    parse_pk_set_body,
    unprotect,
)

PROTO_CERT = "cert"
PROTO_BIND = "bind"
PROTO_LEGACY = "legacy"


class ChipMsgKind(IntEnum):
    LOAD_LTK = 1
    DERIVE = 2
    PK_SET_UPDATE = 3
    CRL_UPDATE = 4
    LOAD_CW = 5


@dataclass(frozen=True)
class ChipChannelMsg:
    kind: ChipMsgKind
    payload: bytes

    def encode(self) -> bytes:
        return u8(int(self.kind)) + lp(self.payload)

    @classmethod
    def decode(cls, data: bytes) -> "ChipChannelMsg":
        r = Reader(data)
        kind = ChipMsgKind(r.take_u8())
        payload = r.take_lp()
        r.done()
        return cls(kind, payload)


class ControlWordHandle:
    """Epoch-scoped capability to descramble; never reveals the key bytes."""

    __slots__ = ("epoch", "_control_word")

    def __init__(self, epoch: int, control_word: bytes):
        self.epoch = epoch
        self._control_word = control_word

    def __repr__(self) -> str:
        return f"ControlWordHandle(epoch={self.epoch})"


# ---------------------------------------------------------------------------
# CA client
# ---------------------------------------------------------------------------


@dataclass
class CaClientState:
    suite: CipherSuite
    ca_system_id: int
    receiver_id: bytes
    protocol: str
    channel_key: bytes = field(repr=False)
    group_key: bytes | None = field(default=None, repr=False)
    ecm_key: bytes | None = field(default=None, repr=False)
    entitled: bool = False
    announce: bytes | None = None  # current sender cert bytes (cert) or pk (bind)
    co_sender_pks: tuple[bytes, ...] = ()
    ltk_copy: bytes | None = field(default=None, repr=False)  # cert protocol
    ltk_by_sender: dict[bytes, bytes] = field(default_factory=dict, repr=False)  # bind
    last_pk_set_sent: tuple[bytes, ...] = ()


def _client_pk_set(client: CaClientState) -> tuple[bytes, ...]:
    pks = set(client.co_sender_pks)
    if client.announce is not None:
        pks.add(client.announce)
    return tuple(sorted(pks))


def _pk_set_msg_if_changed(client: CaClientState) -> list[ChipChannelMsg]:
    current = _client_pk_set(client)
    if current and current != client.last_pk_set_sent:
        client.last_pk_set_sent = current
        return [ChipChannelMsg(ChipMsgKind.PK_SET_UPDATE, build_pk_set_body(current))]
    return []


def client_process_emm(client: CaClientState, emm: Emm) -> list[ChipChannelMsg]:
    """Turn one EMM into chip channel messages.

    Messages for other systems or other addressees produce nothing; a
    protection failure on a message meant for this client raises.
    """
    if emm.ca_system_id != client.ca_system_id:
        return []
    aad = emm_aad(emm.ca_system_id, emm.kind, emm.addressee)

    if emm.kind in (EmmKind.PER_RECEIVER_ENROLL, EmmKind.PER_RECEIVER_ENTITLEMENT):
        if emm.addressee != client.receiver_id:
            return []
        body = unprotect(client.suite, client.channel_key, emm.payload, aad=aad)
        if emm.kind == EmmKind.PER_RECEIVER_ENTITLEMENT:
            entitled, ecm_key = parse_entitlement_body(body)
            client.entitled = entitled
            client.ecm_key = ecm_key if entitled else None
            return []
        blob, ltk_copy, group_key, announce = parse_enroll_body(body)
        client.group_key = group_key
        if client.protocol == PROTO_LEGACY:
            return []
        client.announce = announce
        msgs = []
        if client.protocol == PROTO_CERT:
            client.ltk_copy = ltk_copy
            msgs.append(ChipChannelMsg(ChipMsgKind.LOAD_LTK, lp(announce) + lp(blob)))
        else:
            client.ltk_by_sender[announce] = ltk_copy
            msgs.append(ChipChannelMsg(ChipMsgKind.LOAD_LTK, lp(announce) + lp(blob)))
            msgs.extend(_pk_set_msg_if_changed(client))
        return msgs

    # broadcast kinds: ignorable until the group key arrives with enrollment
    if client.group_key is None:
        return []
    body = open_broadcast(client.suite, client.group_key, emm.payload, aad=aad)

    if emm.kind == EmmKind.BROADCAST_SENDER_PK and client.protocol == PROTO_BIND:
        client.announce = body  # raw sender public key, fixed length per scheme
        return _pk_set_msg_if_changed(client)
    if emm.kind == EmmKind.BROADCAST_CERT and client.protocol == PROTO_CERT:
        client.announce = body
        return []
    if emm.kind == EmmKind.PK_SET_UPDATE and client.protocol == PROTO_BIND:
        client.co_sender_pks = parse_pk_set_body(body)
        return _pk_set_msg_if_changed(client)
    if emm.kind == EmmKind.CRL_UPDATE and client.protocol == PROTO_CERT:
        return [ChipChannelMsg(ChipMsgKind.CRL_UPDATE, body)]
    return []


def client_process_ecm(client: CaClientState, ecm: Ecm) -> ChipChannelMsg | None:
    """Derive the epoch secret from the ECM and wrap it for the chip.

    An unentitled client emits nothing. The per-chip wrapping step happens
    here, inside the decoder: its output never touches the broadcast.
    """
    if ecm.ca_system_id != client.ca_system_id:
        return None
    if not client.entitled or client.ecm_key is None:
        return None
    secret = unprotect(client.suite, client.ecm_key, ecm.protected_secret,
                       aad=ecm_aad(ecm.ca_system_id, ecm.epoch))
    if client.protocol == PROTO_LEGACY:
        return ChipChannelMsg(ChipMsgKind.LOAD_CW, u32(ecm.epoch) + lp(secret))
    if client.protocol == PROTO_CERT:
        if client.ltk_copy is None:
            raise ProtocolError("client holds no long-term key copy (not enrolled)")
        wrapped = client.suite.sym_encrypt(client.ltk_copy, secret, aad=u32(ecm.epoch))
        return ChipChannelMsg(ChipMsgKind.DERIVE, u32(ecm.epoch) + lp(wrapped))
    sender_pk = client.announce
    if sender_pk is None:
        raise ProtocolError("client knows no sender key (not enrolled)")
    ltk = client.ltk_by_sender.get(sender_pk)
    if ltk is None:
        raise ProtocolError("client holds no long-term key for the current sender key")
    wrapped = client.suite.sym_encrypt(ltk, secret, aad=u32(ecm.epoch))
    return ChipChannelMsg(ChipMsgKind.DERIVE, u32(ecm.epoch) + lp(sender_pk) + lp(wrapped))


# ---------------------------------------------------------------------------
# chips
# ---------------------------------------------------------------------------


@dataclass
class CertChipState:
    receiver: certproto.CertReceiverState
    current_epoch: int = -1


@dataclass
class BindChipState:
    receiver: bindproto.BindReceiverState
    current_epoch: int = -1


@dataclass
class LegacyChipState:
    suite: CipherSuite
    current_epoch: int = -1


ChipState = CertChipState | BindChipState | LegacyChipState


def chip_process(chip: ChipState, msg: ChipChannelMsg) -> ControlWordHandle | None:
    """Run one chip channel message through the protocol checks.

    Every check failure raises and leaves the chip state unchanged. Only a
    DERIVE (or legacy LOAD_CW) yields a handle.
    """
    if isinstance(chip, LegacyChipState):
        if msg.kind != ChipMsgKind.LOAD_CW:
            raise ProtocolError("legacy chip only accepts raw control words")
        r = Reader(msg.payload)
        epoch = r.take_u32()
        control_word = r.take_lp()
        r.done()
        chip.current_epoch = max(chip.current_epoch, epoch)
        return ControlWordHandle(epoch, control_word)

    if msg.kind == ChipMsgKind.LOAD_CW:
        raise ProtocolError("raw control word is not an accepted message kind")

    if isinstance(chip, CertChipState):
        if msg.kind == ChipMsgKind.LOAD_LTK:
            bundle = certproto.CertBundle.from_bytes(msg.payload)
            certproto.phase1_receive(chip.receiver, bundle)
            return None
        if msg.kind == ChipMsgKind.CRL_UPDATE:
            sm = SignedMessage.from_bytes(msg.payload)
            serials = parse_revocation_list(
                chip.receiver.suite, sm, chip.receiver.authority_pk
            )
            chip.receiver.known_revoked = serials
            return None
        if msg.kind == ChipMsgKind.DERIVE:
            r = Reader(msg.payload)
            epoch = r.take_u32()
            wrapped = r.take_lp()
            r.done()
            # the epoch label is authenticated inside the wrap: a relabeled
            # delivery fails before it can move the epoch watermark
            control_word = certproto.phase2_receive(chip.receiver, wrapped, context=u32(epoch))
            chip.current_epoch = max(chip.current_epoch, epoch)
            return ControlWordHandle(epoch, control_word)
        raise ProtocolError(f"certificate chip rejects message kind {msg.kind.name}")

    if isinstance(chip, BindChipState):
        if msg.kind == ChipMsgKind.LOAD_LTK:
            bundle = bindproto.BindBundle.from_bytes(msg.payload)
            bindproto.phase1_receive(chip.receiver, bundle)
            return None
        if msg.kind == ChipMsgKind.PK_SET_UPDATE:
            pks = parse_pk_set_body(msg.payload)
            if not pks:
                raise ProtocolError("empty sender key set")
            chip.receiver.active_pk_set = tuple(sorted(pks))
            return None
        if msg.kind == ChipMsgKind.DERIVE:
            r = Reader(msg.payload)
            epoch = r.take_u32()
            sender_pk = r.take_lp()
            wrapped = r.take_lp()
            r.done()
            control_word = bindproto.phase2_receive(chip.receiver, sender_pk, wrapped,
                                                    context=u32(epoch))
            chip.current_epoch = max(chip.current_epoch, epoch)
            return ControlWordHandle(epoch, control_word)
        raise ProtocolError(f"binding chip rejects message kind {msg.kind.name}")

    raise TypeError(f"unknown chip state {type(chip).__name__}")


def descramble(chip: ChipState, handle: ControlWordHandle, scrambled: bytes) -> bytes:
    """Descramble under a handle; stale (out-of-epoch) handles are refused."""
    if handle.epoch != chip.current_epoch:
        raise ProtocolError(
            f"stale control word handle (epoch {handle.epoch}, chip at {chip.current_epoch})"
        )
    return _descramble_bytes(handle._control_word, handle.epoch, scrambled)


# ---------------------------------------------------------------------------
# whole-decoder assembly
# ---------------------------------------------------------------------------


@dataclass
class Decoder:
    decoder_id: bytes
    ca_index: int
    client: CaClientState
    chip: ChipState

    def chip_public_key(self) -> bytes | None:
        if isinstance(self.chip, LegacyChipState):
            return None
        return self.chip.receiver.enc_keypair.public_key


def make_decoder(suite: CipherSuite, protocol: str, ca_index: int,
                 decoder_id: bytes | int, rng: Drbg, channel_key: bytes,
                 authority_pk: bytes | None = None) -> Decoder:
    """Manufacture a decoder: generate the chip key pair (if any) and
    personalize the CA client with its provisioning key."""
    decoder_id = encode_id(decoder_id)
    chip: ChipState
    if protocol == PROTO_CERT:
        if authority_pk is None:
            raise ValueError("certificate-protocol chips are initialized with the authority key")
        chip = CertChipState(certproto.receiver_init(suite, decoder_id, authority_pk, rng))
    elif protocol == PROTO_BIND:
        chip = BindChipState(bindproto.receiver_init(suite, decoder_id, rng))
    elif protocol == PROTO_LEGACY:
        chip = LegacyChipState(suite)
    else:
        raise ValueError(f"unknown decoder protocol {protocol!r}")
    client = CaClientState(
        suite=suite,
        ca_system_id=ca_index,
        receiver_id=decoder_id,
        protocol=protocol,
        channel_key=channel_key,
    )
    return Decoder(decoder_id=decoder_id, ca_index=ca_index, client=client, chip=chip)


def swap_client(decoder: Decoder, new_channel_key: bytes) -> None:
    """Replace the CA client with a freshly personalized one, keeping the chip.

    Models a client update after a client-side compromise: all client-held
    keys are discarded; the chip state is untouched.
    """
    decoder.client = CaClientState(
        suite=decoder.client.suite,
        ca_system_id=decoder.client.ca_system_id,
        receiver_id=decoder.client.receiver_id,
        protocol=decoder.client.protocol,
        channel_key=new_channel_key,
    )


@dataclass
class FrameResult:
    """What one decoder did with one frame."""

    chip_msgs: list[ChipChannelMsg]
    descrambled: bytes | None
    errors: list[str]
    derive_attempted: bool


def process_frame(decoder: Decoder, frame, chip_filter=None) -> FrameResult:
    """Feed a broadcast frame through client and chip.

    ``chip_filter``, when given, receives the chip channel message list and
    returns the list actually delivered: this is the observable, attackable
    channel between the two halves.
    """
    msgs: list[ChipChannelMsg] = []
    errors: list[str] = []
    for emm in frame.emms:
        try:
            msgs.extend(client_process_emm(decoder.client, emm))
        except Exception as exc:  # noqa: BLE001 - every failure is an outcome
            errors.append(f"emm:{exc}")
    for ecm in frame.ecms:
        try:
            msg = client_process_ecm(decoder.client, ecm)
            if msg is not None:
                msgs.append(msg)
        except Exception as exc:  # noqa: BLE001
            errors.append(f"ecm:{exc}")

    if chip_filter is not None:
        msgs = chip_filter(msgs)

    handle = None
    derive_attempted = False
    for msg in msgs:
        if msg.kind in (ChipMsgKind.DERIVE, ChipMsgKind.LOAD_CW):
            derive_attempted = True
        try:
            result = chip_process(decoder.chip, msg)
        except Exception as exc:  # noqa: BLE001
            errors.append(f"chip:{exc}")
            continue
        if result is not None:
            handle = result

    descrambled = None
    if handle is not None:
        try:
            descrambled = descramble(decoder.chip, handle, frame.scrambled_content)
        except Exception as exc:  # noqa: BLE001
            errors.append(f"descramble:{exc}")
    return FrameResult(msgs, descrambled, errors, derive_attempted)
