"""Head-end orchestration: CA systems, shared components, scrambling, EMM/ECM emission.

One head-end carries any mix of CA systems over a single scrambled stream:

  * ``bind``   -- binding-protocol systems. The shared components draw one
    random value per epoch and derive the control word by hashing it with the
    sorted set of all bind senders' public keys; each bind system's ECM
    carries the random value.
  * ``cert``   -- certificate-protocol systems. Their ECMs carry the control
    word itself.
  * ``legacy`` -- plain systems with no chip-level protocol; their ECMs also
    carry the control word, and their clients pass it to the chip unwrapped.

If no bind system is configured the control word is drawn directly from the
RNG. With at least one, every system observes the same (epoch, control word)
pair: interoperation over one stream requires nothing more.

Per-receiver phase 2 wrapping happens inside the decoder's CA client, never
on the broadcast: the head-end only ships the group-protected ECM, so the
protocol adds no per-receiver broadcast traffic per epoch.

Channel keys: each receiver's CA client is provisioned (factory step) with a
per-receiver key; enrollment delivers the broadcast group key under it, and
entitlement delivers the ECM key. The ECM key rotates whenever a receiver is
de-authorized, so possession of the current key always coincides with the
authorized set. Compliant and legacy ECMs are both emitted every epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import bindproto, certproto
from .binding import BindingInput, derive_secret
from .encoding import BROADCAST_ADDR, encode_id
from .errors import ProtocolError
from .scramble import scramble
from .suite import CipherSuite, Drbg
from .ttp import Directory, TtpState, revoke, signed_revocation_list
from .wire import (
    BroadcastFrame,
    Ecm,
    Emm,
    EmmKind,
    build_crl_body,
    build_enroll_body,
    build_entitlement_body,
    build_pk_set_body,
    ecm_aad,
    emm_aad,
    protect,
    seal_broadcast,
)

KIND_CERT = "cert"
KIND_BIND = "bind"
KIND_LEGACY = "legacy"
CA_KINDS = (KIND_CERT, KIND_BIND, KIND_LEGACY)


@dataclass
class CaSystem:
    index: int
    kind: str
    suite: CipherSuite
    sender: certproto.CertSenderState | bindproto.BindSenderState | None
    group_key: bytes = field(repr=False, default=b"")
    ecm_key: bytes = field(repr=False, default=b"")
    receiver_channel_keys: dict[bytes, bytes] = field(default_factory=dict, repr=False)
    enrolled: set[bytes] = field(default_factory=set)
    authorized: set[bytes] = field(default_factory=set)
    pending_emms: list[Emm] = field(default_factory=list)


@dataclass
class HeadendState:
    suite: CipherSuite
    rng: Drbg
    ca_systems: list[CaSystem]
    epoch: int = 0
    pk_set: tuple[bytes, ...] = ()
    scrambler_key: bytes | None = field(default=None, repr=False)


def _bind_pk_set(headend: HeadendState) -> tuple[bytes, ...]:
    return tuple(sorted(
        ca.sender.sig_keypair.public_key
        for ca in headend.ca_systems
        if ca.kind == KIND_BIND
    ))


def _announce_bytes(ca: CaSystem) -> bytes:
    if ca.kind == KIND_CERT:
        return ca.sender.sender_cert.to_bytes()
    if ca.kind == KIND_BIND:
        return ca.sender.sig_keypair.public_key
    return b""


def _queue_announcement(ca: CaSystem) -> None:
    if ca.kind == KIND_LEGACY:
        return
    kind = EmmKind.BROADCAST_CERT if ca.kind == KIND_CERT else EmmKind.BROADCAST_SENDER_PK
    body = _announce_bytes(ca)
    aad = emm_aad(ca.index, kind, BROADCAST_ADDR)
    sealed = seal_broadcast(ca.suite, ca.group_key, body, aad=aad)
    ca.pending_emms.append(Emm(ca.index, kind, BROADCAST_ADDR, sealed))


def _queue_pk_set_update_for(headend: HeadendState, ca: CaSystem) -> None:
    body = build_pk_set_body(headend.pk_set)
    aad = emm_aad(ca.index, EmmKind.PK_SET_UPDATE, BROADCAST_ADDR)
    sealed = seal_broadcast(ca.suite, ca.group_key, body, aad=aad)
    ca.pending_emms.append(Emm(ca.index, EmmKind.PK_SET_UPDATE, BROADCAST_ADDR, sealed))


def _queue_pk_set_updates(headend: HeadendState) -> None:
    """Distribute the full bind-sender key set through every bind system.

    Only needed when systems interoperate; a lone bind system's decoders
    learn its key from the ordinary announcement.
    """
    bind_systems = [ca for ca in headend.ca_systems if ca.kind == KIND_BIND]
    if len(bind_systems) < 2:
        return
    for ca in bind_systems:
        _queue_pk_set_update_for(headend, ca)


def headend_init(suite: CipherSuite, kinds: list[str], rng: Drbg,
                 ttp: TtpState | None, directory: Directory | None) -> HeadendState:
    """Build the CA systems. Certificate systems need the authority to issue
    their sender certificates; binding systems involve no authority call."""
    systems: list[CaSystem] = []
    for index, kind in enumerate(kinds):
        if kind not in CA_KINDS:
            raise ValueError(f"unknown CA system kind {kind!r}")
        sender = None
        if kind == KIND_CERT:
            if ttp is None or directory is None:
                raise ProtocolError("certificate CA system requires the authority")
            sender = certproto.sender_init(suite, index + 1, rng, ttp, directory)
        elif kind == KIND_BIND:
            if directory is None:
                raise ProtocolError("binding CA system requires a directory snapshot")
            sender = bindproto.sender_init(suite, index + 1, rng, directory)
        ca = CaSystem(index=index, kind=kind, suite=suite, sender=sender)
        ca.group_key = rng.read(suite.secret_bytes)
        ca.ecm_key = rng.read(suite.secret_bytes)
        systems.append(ca)
    headend = HeadendState(suite=suite, rng=rng, ca_systems=systems)
    headend.pk_set = _bind_pk_set(headend)
    for ca in systems:
        _queue_announcement(ca)
    _queue_pk_set_updates(headend)
    return headend


def provision_receiver(headend: HeadendState, ca_index: int,
                       receiver_id: bytes | int, channel_key: bytes) -> None:
    """Factory step: share the per-receiver CA channel key with the system."""
    ca = headend.ca_systems[ca_index]
    ca.receiver_channel_keys[encode_id(receiver_id)] = channel_key


def refresh_directory(headend: HeadendState, directory: Directory) -> None:
    for ca in headend.ca_systems:
        if ca.sender is not None:
            ca.sender.directory = directory


def enroll_receiver(headend: HeadendState, ca_index: int,
                    receiver_id: bytes | int, directory: Directory) -> list[Emm]:
    """Run phase 1 for one receiver and queue its enrollment EMM.

    The enrollment payload carries the signed blob, the long-term key copy
    for the client, the broadcast group key, and the current sender
    announcement, all protected under the receiver's provisioning key.
    """
    ca = headend.ca_systems[ca_index]
    receiver_id = encode_id(receiver_id)
    channel_key = ca.receiver_channel_keys.get(receiver_id)
    if channel_key is None:
        raise ProtocolError(f"receiver {int.from_bytes(receiver_id, 'big')} not provisioned")

    if ca.kind == KIND_LEGACY:
        body = build_enroll_body(b"", b"", ca.group_key, b"")
    else:
        ca.sender.directory = directory
        if ca.kind == KIND_CERT:
            bundle = certproto.phase1_send(ca.sender, receiver_id, headend.rng)
            blob = bundle.signed_blob.to_bytes()
        else:
            bundle = bindproto.phase1_send(ca.sender, receiver_id, headend.rng)
            blob = bundle.signed_blob.to_bytes()
        ltk_copy = ca.sender.ltk_store[receiver_id]
        body = build_enroll_body(blob, ltk_copy, ca.group_key, _announce_bytes(ca))

    aad = emm_aad(ca.index, EmmKind.PER_RECEIVER_ENROLL, receiver_id)
    protected = protect(ca.suite, channel_key, body, aad=aad)
    out = [Emm(ca.index, EmmKind.PER_RECEIVER_ENROLL, receiver_id, protected)]
    ca.pending_emms.extend(out)
    ca.enrolled.add(receiver_id)
    # interoperating deployments: the fresh client needs the co-senders' keys,
    # and any set broadcast that predated its enrollment was unverifiable
    if ca.kind == KIND_BIND and len([c for c in headend.ca_systems if c.kind == KIND_BIND]) > 1:
        _queue_pk_set_update_for(headend, ca)
    return out


def _queue_entitlement(ca: CaSystem, receiver_id: bytes, entitled: bool) -> None:
    body = build_entitlement_body(entitled, ca.ecm_key if entitled else b"")
    aad = emm_aad(ca.index, EmmKind.PER_RECEIVER_ENTITLEMENT, receiver_id)
    protected = protect(ca.suite, ca.receiver_channel_keys[receiver_id], body, aad=aad)
    ca.pending_emms.append(Emm(ca.index, EmmKind.PER_RECEIVER_ENTITLEMENT, receiver_id, protected))


def authorize(headend: HeadendState, ca_index: int,
              receiver_id: bytes | int, entitled: bool) -> None:
    """Update the authorized set and deliver or withdraw the ECM key.

    De-authorizing rotates the ECM key and re-delivers it to the remaining
    authorized receivers, so the key shared by entitled clients always
    matches the authorized set exactly.
    """
    ca = headend.ca_systems[ca_index]
    receiver_id = encode_id(receiver_id)
    if receiver_id not in ca.enrolled:
        raise ProtocolError("cannot change authorization of an unenrolled receiver")
    if entitled:
        # always queue the delivery: re-authorizing a receiver whose client
        # was re-personalized must re-ship the current key
        ca.authorized.add(receiver_id)
        _queue_entitlement(ca, receiver_id, True)
    else:
        if receiver_id in ca.authorized:
            ca.authorized.discard(receiver_id)
            ca.ecm_key = headend.rng.read(headend.suite.secret_bytes)
            _queue_entitlement(ca, receiver_id, False)
            for other in sorted(ca.authorized):
                _queue_entitlement(ca, other, True)


def rotate_sender_key(headend: HeadendState, ca_index: int, rng: Drbg,
                      ttp: TtpState | None = None,
                      directory: Directory | None = None,
                      withhold: set[bytes] | None = None) -> list[Emm]:
    """Replace one CA system's sender key pair and re-run phase 1.

    Certificate systems additionally revoke the old certificate and obtain a
    fresh one from the authority; binding systems touch no authority at all.
    The ECM key is rotated too: a sender-key compromise is assumed to have
    exposed the CA system's channel material. ``withhold`` suppresses the
    per-receiver re-keying EMMs for the named receivers (test hook for
    demonstrating that stale material stops working).
    """
    ca = headend.ca_systems[ca_index]
    withhold = withhold or set()
    if ca.kind == KIND_LEGACY:
        raise ProtocolError("legacy CA system has no sender key")
    before = len(ca.pending_emms)

    if ca.kind == KIND_CERT:
        if ttp is None:
            raise ProtocolError("certificate sender rotation requires the authority")
        old_serial = ca.sender.sender_cert.serial
        certproto.refresh_sender_key(ca.sender, rng, ttp)
        revoke(ttp, old_serial)
        crl = signed_revocation_list(ttp)
        aad = emm_aad(ca.index, EmmKind.CRL_UPDATE, BROADCAST_ADDR)
        sealed = seal_broadcast(ca.suite, ca.group_key, build_crl_body(crl), aad=aad)
        ca.pending_emms.append(Emm(ca.index, EmmKind.CRL_UPDATE, BROADCAST_ADDR, sealed))
    else:
        bindproto.refresh_sender_key(ca.sender, rng)
        headend.pk_set = _bind_pk_set(headend)
        _queue_pk_set_updates(headend)

    _queue_announcement(ca)
    ca.ecm_key = headend.rng.read(headend.suite.secret_bytes)
    current_directory = directory if directory is not None else ca.sender.directory
    for receiver_id in sorted(ca.enrolled):
        if receiver_id in withhold:
            continue
        enroll_receiver(headend, ca_index, receiver_id, current_directory)
    for receiver_id in sorted(ca.authorized):
        if receiver_id in withhold:
            continue
        _queue_entitlement(ca, receiver_id, True)
    return ca.pending_emms[before:]


def epoch_tick(headend: HeadendState, content: bytes) -> BroadcastFrame:
    """Produce one epoch's broadcast frame.

    Draws the epoch randomness, derives or adopts the control word,
    scrambles the content, and emits one ECM per CA system plus all pending
    EMMs. The frame is emitted whether or not anyone is authorized.
    """
    if not headend.ca_systems:
        raise ProtocolError("head-end has no CA system configured")
    suite = headend.suite
    draw = headend.rng.read(suite.secret_bytes)
    if headend.pk_set:
        rand: bytes | None = draw
        control_word = derive_secret(BindingInput(headend.pk_set, draw), suite.secret_bits)
    else:
        rand = None
        control_word = draw
    headend.scrambler_key = control_word

    ecms = []
    for ca in headend.ca_systems:
        secret = rand if ca.kind == KIND_BIND else control_word
        protected = protect(suite, ca.ecm_key, secret, aad=ecm_aad(ca.index, headend.epoch))
        ecms.append(Ecm(ca.index, headend.epoch, protected))

    emms: list[Emm] = []
    for ca in headend.ca_systems:
        emms.extend(ca.pending_emms)
        ca.pending_emms = []

    frame = BroadcastFrame(
        epoch=headend.epoch,
        scrambled_content=scramble(control_word, headend.epoch, content),
        ecms=tuple(ecms),
        emms=tuple(emms),
    )
    headend.epoch += 1
    return frame
