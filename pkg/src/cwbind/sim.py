"""Deterministic scenario runner: authority, head-end, decoders, adversary.

A scenario is a line-oriented text file (``#`` comments, blank lines ignored)::

    scenario <name>
    seed <int>
    epochs <int>
    secret-bits <128|192|256>        # optional, default 128
    content-bytes <int>              # optional, default 64
    ca <index> <cert|bind|legacy>    # one per CA system, indexes 0..n-1
    decoder <id> ca <index>          # one per decoder
    rotate-auth <ca> every <W> count <C>   # rotating authorized subset
    at <epoch> <action ...>

Actions::

    authorize <ca> <decoder>         deauthorize <ca> <decoder>
    enroll <ca> <decoder>            swap-client <decoder>
    rotate-ttp                       rotate-sender <ca>
    recover
    compromise control-word <decoder> | sender-keys <ca> | ttp-key
               | ca-client <decoder>
    tamper <class> <bit>             class: ecm | emm-broadcast | emm-receiver
                                            | chip-derive | chip-load-ltk
    replay <src> <dst> <class>       class: chip-derive | chip-load-ltk
                                            | emm-receiver | ecm
    inject-cw <decoder>              one-shot raw control-word injection
    pirate-probe <decoder>           persistent best-effort pirate injection
    forge-sender <ca> <decoder>      persistent rogue-sender message sets

All decoders are provisioned, registered, and enrolled before epoch 0;
events fire before that epoch's tick. Delivery order is decoder id order.
Every draw of randomness comes from labeled children of one seed, so a
config runs to a byte-identical report every time.

Tamper actions flip a bit inside the target's protected payload (the
cryptographic rejection path); arbitrary-position flips, including headers,
are exercised by the message-level tamper harness in the test suite.

The adversary captures every genuine message it can see (broadcast frames
and the chip channels) and keeps the latest of each class per decoder for
replay. ``compromise control-word`` models ongoing extraction from an
authorized decoder: it survives client swaps and chip replacement, because
extraction is assumed cheap and repeatable; recovery targets key material,
not the extraction capability. ``compromise`` of sender keys and the
authority key takes a snapshot: material rotated afterwards is not leaked.

``recover`` performs the full restoration procedure: swap compromised
clients, rotate the authority key pair (re-issuing receiver certificates),
rotate and re-certify every sender, re-enroll and re-entitle everyone.
Certificate-protocol chips cannot validate anything issued under the new
authority key, so they are replaced (fresh trust anchor, counted in the
report); binding-protocol chips are untouched.

Outcome codes per decoder per epoch: ``K`` descrambled the epoch's content,
``R`` attempted or errored but did not, ``X`` no attempt (not entitled).
Verdicts are recomputed from the outcome rows: implicit key authentication
holds when no unauthorized decoder ever lands on ``K`` and every authorized
decoder whose messages were not interfered with lands on ``K``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from . import certproto, headend as hemod, ttp as ttpmod
from .binding import BindingInput, derive_secret
from .decoder import (
    BindChipState,
    CertChipState,
    ChipChannelMsg,
    ChipMsgKind,
    Decoder,
    LegacyChipState,
    client_process_ecm,
    client_process_emm,
    make_decoder,
    process_frame,
    swap_client,
)
from .encoding import encode_id, id_as_int, lp, u32
from .errors import ProtocolError
from .suite import CipherSuite, Drbg, KeyPair, SuiteConfig
from .ttp import Certificate, Directory, ROLE_SENDER
from .wire import (
    BroadcastFrame,
    Ecm,
    Emm,
    build_pk_set_body,
    ecm_aad,
    encode_ecm,
    encode_emm,
    encode_frame,
    unprotect,
)

TAMPER_CLASSES = ("ecm", "emm-broadcast", "emm-receiver", "chip-derive", "chip-load-ltk")
REPLAY_CLASSES = ("chip-derive", "chip-load-ltk", "emm-receiver", "ecm")

OUTCOME_DERIVED = "K"
OUTCOME_REJECTED = "R"
OUTCOME_EXCLUDED = "X"


# ---------------------------------------------------------------------------
# scenario configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    epoch: int
    verb: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class DecoderSpec:
    decoder_id: int
    ca_index: int


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    epochs: int
    ca_kinds: list[str]
    decoders: list[DecoderSpec]
    events: list[Event]
    secret_bits: int = 128
    content_bytes: int = 64

    def validate(self) -> None:
        if self.epochs <= 0:
            raise ValueError("epochs must be positive")
        if not self.ca_kinds:
            raise ValueError("at least one CA system is required")
        for kind in self.ca_kinds:
            if kind not in hemod.CA_KINDS:
                raise ValueError(f"unknown CA kind {kind!r}")
        ids = [spec.decoder_id for spec in self.decoders]
        if len(ids) != len(set(ids)):
            raise ValueError("decoder ids must be unique")
        for spec in self.decoders:
            if not 0 <= spec.ca_index < len(self.ca_kinds):
                raise ValueError(f"decoder {spec.decoder_id} references missing ca {spec.ca_index}")
        known_ids = set(ids)
        for ev in self.events:
            if not 0 <= ev.epoch < self.epochs:
                raise ValueError(f"event at epoch {ev.epoch} outside run")
            self._validate_event(ev, known_ids)

    def _validate_event(self, ev: Event, known_ids: set[int]) -> None:
        def want_decoder(arg: str) -> None:
            if int(arg) not in known_ids:
                raise ValueError(f"event references unknown decoder {arg}")

        def want_ca(arg: str) -> None:
            if not 0 <= int(arg) < len(self.ca_kinds):
                raise ValueError(f"event references unknown ca {arg}")

        verb, args = ev.verb, ev.args
        if verb in ("authorize", "deauthorize", "enroll"):
            want_ca(args[0]); want_decoder(args[1])
        elif verb == "rotate-sender":
            want_ca(args[0])
        elif verb in ("rotate-ttp", "recover"):
            pass
        elif verb == "swap-client":
            want_decoder(args[0])
        elif verb == "compromise":
            what = args[0]
            if what == "control-word" or what == "ca-client":
                want_decoder(args[1])
            elif what == "sender-keys":
                want_ca(args[1])
            elif what != "ttp-key":
                raise ValueError(f"unknown compromise target {what!r}")
        elif verb == "tamper":
            if args[0] not in TAMPER_CLASSES:
                raise ValueError(f"unknown tamper class {args[0]!r}")
            int(args[1])
        elif verb == "replay":
            want_decoder(args[0]); want_decoder(args[1])
            if args[2] not in REPLAY_CLASSES:
                raise ValueError(f"unknown replay class {args[2]!r}")
        elif verb == "inject-cw":
            want_decoder(args[0])
        elif verb == "pirate-probe":
            want_decoder(args[0])
        elif verb == "forge-sender":
            want_ca(args[0]); want_decoder(args[1])
        else:
            raise ValueError(f"unknown action {verb!r}")


def _expand_rotate_auth(ca_index: int, every: int, count: int,
                        decoders: list[DecoderSpec], epochs: int) -> list[Event]:
    """Rotating authorized subset: at each window start, the set becomes the
    next ``count``-wide wrap-around slice of the system's decoders."""
    ids = sorted(spec.decoder_id for spec in decoders if spec.ca_index == ca_index)
    if not ids:
        raise ValueError(f"rotate-auth for ca {ca_index} with no decoders")
    if count > len(ids):
        raise ValueError("rotate-auth count exceeds decoder population")
    events: list[Event] = []
    previous: frozenset[int] = frozenset()
    for window, epoch in enumerate(range(0, epochs, every)):
        desired = frozenset(ids[(window + j) % len(ids)] for j in range(count))
        for decoder_id in sorted(previous - desired):
            events.append(Event(epoch, "deauthorize", (str(ca_index), str(decoder_id))))
        for decoder_id in sorted(desired - previous):
            events.append(Event(epoch, "authorize", (str(ca_index), str(decoder_id))))
        previous = desired
    return events


def parse_scenario(text: str, name_hint: str = "unnamed") -> ScenarioConfig:
    name = name_hint
    seed: int | None = None
    epochs: int | None = None
    secret_bits = 128
    content_bytes = 64
    ca_kinds: list[str] = []
    decoders: list[DecoderSpec] = []
    events: list[Event] = []
    rotate_auth: list[tuple[int, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            head = fields[0]
            if head == "scenario":
                name = fields[1]
            elif head == "seed":
                seed = int(fields[1])
            elif head == "epochs":
                epochs = int(fields[1])
            elif head == "secret-bits":
                secret_bits = int(fields[1])
            elif head == "content-bytes":
                content_bytes = int(fields[1])
            elif head == "ca":
                index = int(fields[1])
                if index != len(ca_kinds):
                    raise ValueError(f"ca systems must be declared in order, got {index}")
                ca_kinds.append(fields[2])
            elif head == "decoder":
                if fields[2] != "ca":
                    raise ValueError("expected 'decoder <id> ca <index>'")
                decoders.append(DecoderSpec(int(fields[1]), int(fields[3])))
            elif head == "rotate-auth":
                if fields[2] != "every" or fields[4] != "count":
                    raise ValueError("expected 'rotate-auth <ca> every <W> count <C>'")
                rotate_auth.append((int(fields[1]), int(fields[3]), int(fields[5])))
            elif head == "at":
                events.append(Event(int(fields[1]), fields[2], tuple(fields[3:])))
            else:
                raise ValueError(f"unknown directive {head!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"scenario line {lineno}: {exc}") from None

    if seed is None or epochs is None:
        raise ValueError("scenario must declare both seed and epochs")
    for ca_index, every, count in rotate_auth:
        events.extend(_expand_rotate_auth(ca_index, every, count, decoders, epochs))
    events.sort(key=lambda ev: ev.epoch)  # stable: preserves file order per epoch
    config = ScenarioConfig(
        name=name, seed=seed, epochs=epochs, ca_kinds=ca_kinds,
        decoders=decoders, events=events,
        secret_bits=secret_bits, content_bytes=content_bytes,
    )
    config.validate()
    return config


def load_scenario(path) -> ScenarioConfig:
    from pathlib import Path

    p = Path(path)
    return parse_scenario(p.read_text(), name_hint=p.stem)


# ---------------------------------------------------------------------------
# ledger and report
# ---------------------------------------------------------------------------


@dataclass
class BandwidthLedger:
    """Byte counts per message class. Chip-channel bytes travel inside the
    decoder only and are never part of the broadcast totals."""

    ecm: int = 0
    emm_broadcast: int = 0
    emm_receiver: int = 0
    content: int = 0
    chip_channel: int = 0

    def add_frame(self, frame: BroadcastFrame) -> None:
        self.content += len(frame.scrambled_content)
        for ecm in frame.ecms:
            self.ecm += len(encode_ecm(ecm))
        for emm in frame.emms:
            size = len(encode_emm(emm))
            if emm.is_broadcast():
                self.emm_broadcast += size
            else:
                self.emm_receiver += size

    def broadcast_total(self) -> int:
        return self.ecm + self.emm_broadcast + self.emm_receiver + self.content


@dataclass
class EpochRow:
    epoch: int
    authorized: frozenset[int]
    interfered: frozenset[int]
    outcomes: dict[int, str]


@dataclass
class RunReport:
    scenario: str
    seed: int
    epochs: int
    secret_bits: int
    ca_kinds: list[str]
    decoder_ids: list[int]
    rows: list[EpochRow]
    ledger: BandwidthLedger
    implicit_key_auth: bool
    authenticity_violations: int
    recovery_epoch: int | None
    recovery_success: bool | None
    decoders_replaced: int

    def to_text(self) -> str:
        def csv(ids) -> str:
            return ",".join(str(i) for i in sorted(ids)) if ids else "-"

        lines = [
            "cwbind-report 1",
            f"scenario {self.scenario}",
            f"seed {self.seed}",
            f"epochs {self.epochs}",
            f"secret-bits {self.secret_bits}",
        ]
        for index, kind in enumerate(self.ca_kinds):
            lines.append(f"ca {index} {kind}")
        lines.append("decoders " + " ".join(str(i) for i in self.decoder_ids))
        for row in self.rows:
            outcomes = " ".join(f"{i}={row.outcomes[i]}" for i in self.decoder_ids)
            lines.append(
                f"epoch {row.epoch} auth {csv(row.authorized)} "
                f"interfered {csv(row.interfered)} outcomes {outcomes}"
            )
        lines.append(f"bandwidth ecm {self.ledger.ecm}")
        lines.append(f"bandwidth emm-broadcast {self.ledger.emm_broadcast}")
        lines.append(f"bandwidth emm-receiver {self.ledger.emm_receiver}")
        lines.append(f"bandwidth content {self.ledger.content}")
        lines.append(f"bandwidth chip-channel {self.ledger.chip_channel}")
        lines.append(f"verdict implicit-key-auth {'pass' if self.implicit_key_auth else 'fail'}")
        lines.append(f"verdict authenticity-violations {self.authenticity_violations}")
        lines.append(f"verdict authenticity {'pass' if self.authenticity_violations == 0 else 'fail'}")
        if self.recovery_epoch is None:
            lines.append("verdict recovery-success n/a")
        else:
            lines.append(f"verdict recovery-success {'pass' if self.recovery_success else 'fail'}")
        lines.append(f"verdict decoders-replaced {self.decoders_replaced}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# adversary
# ---------------------------------------------------------------------------


@dataclass
class SenderSnapshot:
    """Everything taken from one CA system at sender-keys compromise time."""

    kind: str
    sig_keypair: KeyPair
    ltk_store: dict[bytes, bytes]
    group_key: bytes
    ecm_key: bytes


@dataclass
class AdversaryState:
    rng: Drbg
    cw_taps: set[bytes] = field(default_factory=set)
    client_taps: set[bytes] = field(default_factory=set)
    sender_snapshots: dict[int, SenderSnapshot] = field(default_factory=dict)
    authority_key: tuple[int, KeyPair] | None = None  # (generation, key pair)
    known_cw: bytes | None = None
    known_rand: dict[int, bytes] = field(default_factory=dict)  # per bind ca
    captured: dict[tuple[str, bytes], object] = field(default_factory=dict)
    probes: dict[bytes, tuple[str, int]] = field(default_factory=dict)  # id -> (type, ca)
    minted_serial: int = 0x7F000000

    def capture_chip_msgs(self, decoder_id: bytes, msgs: list[ChipChannelMsg]) -> None:
        for msg in msgs:
            if msg.kind in (ChipMsgKind.DERIVE, ChipMsgKind.LOAD_CW):
                self.captured[("chip-derive", decoder_id)] = msg
            elif msg.kind == ChipMsgKind.LOAD_LTK:
                self.captured[("chip-load-ltk", decoder_id)] = msg

    def capture_frame(self, frame: BroadcastFrame, decoder_ids_by_ca: dict[int, list[bytes]]) -> None:
        for emm in frame.emms:
            if not emm.is_broadcast():
                self.captured[("emm-receiver", emm.addressee)] = emm
        for ecm in frame.ecms:
            for decoder_id in decoder_ids_by_ca.get(ecm.ca_system_id, []):
                self.captured[("ecm", decoder_id)] = ecm


# ---------------------------------------------------------------------------
# world
# ---------------------------------------------------------------------------


@dataclass
class World:
    config: ScenarioConfig
    suite: CipherSuite
    master: Drbg
    ttp: ttpmod.TtpState
    directory: Directory
    headend: hemod.HeadendState
    decoders: dict[bytes, Decoder]
    adversary: AdversaryState
    ledger: BandwidthLedger = field(default_factory=BandwidthLedger)
    rows: list[EpochRow] = field(default_factory=list)
    recovery_epoch: int | None = None
    decoders_replaced: int = 0
    swap_counts: dict[bytes, int] = field(default_factory=dict)
    frames: list[bytes] | None = None
    # per-epoch scratch, reset each tick
    epoch_interfered: set[bytes] = field(default_factory=set)
    epoch_one_shots: list[Event] = field(default_factory=list)

    def decoder_ids_by_ca(self) -> dict[int, list[bytes]]:
        out: dict[int, list[bytes]] = {}
        for decoder_id, decoder in sorted(self.decoders.items()):
            out.setdefault(decoder.ca_index, []).append(decoder_id)
        return out

    def refresh_directory(self) -> None:
        self.directory = ttpmod.parse_directory(self.suite, ttpmod.export_directory(self.ttp))
        hemod.refresh_directory(self.headend, self.directory)


def build_world(config: ScenarioConfig, capture_frames: bool = False) -> World:
    config.validate()
    suite = CipherSuite(SuiteConfig(secret_bits=config.secret_bits))
    master = Drbg(hashlib.sha512(b"cwbind/scenario/" + str(config.seed).encode()).digest())
    ttp = ttpmod.ttp_init(suite, master.child("ttp"))

    decoders: dict[bytes, Decoder] = {}
    channel_keys: dict[bytes, bytes] = {}
    for spec in config.decoders:
        protocol = config.ca_kinds[spec.ca_index]
        decoder_id = encode_id(spec.decoder_id)
        channel_key = master.child(f"provision-{spec.decoder_id}").read(suite.secret_bytes)
        decoder = make_decoder(
            suite, protocol, spec.ca_index, decoder_id,
            master.child(f"chip-{spec.decoder_id}"), channel_key,
            authority_pk=ttp.keypair.public_key if protocol == hemod.KIND_CERT else None,
        )
        decoders[decoder_id] = decoder
        channel_keys[decoder_id] = channel_key
        if decoder.chip_public_key() is not None:
            ttpmod.register_receiver(ttp, decoder_id, decoder.chip_public_key())

    directory = ttpmod.parse_directory(suite, ttpmod.export_directory(ttp))
    headend = hemod.headend_init(suite, list(config.ca_kinds), master.child("headend"),
                                 ttp, directory)
    for spec in config.decoders:
        decoder_id = encode_id(spec.decoder_id)
        hemod.provision_receiver(headend, spec.ca_index, decoder_id, channel_keys[decoder_id])
        hemod.enroll_receiver(headend, spec.ca_index, decoder_id, directory)

    world = World(
        config=config, suite=suite, master=master, ttp=ttp, directory=directory,
        headend=headend, decoders=decoders,
        adversary=AdversaryState(rng=master.child("adversary")),
    )
    if capture_frames:
        world.frames = []
    return world


# ---------------------------------------------------------------------------
# adversary actions
# ---------------------------------------------------------------------------


def _fresh_channel_key(world: World, decoder_id: bytes) -> bytes:
    count = world.swap_counts.get(decoder_id, 0) + 1
    world.swap_counts[decoder_id] = count
    label = f"swap-{id_as_int(decoder_id)}-{count}"
    return world.master.child(label).read(world.suite.secret_bytes)


def _do_swap_client(world: World, decoder_id: bytes, enroll: bool = True) -> None:
    decoder = world.decoders[decoder_id]
    new_key = _fresh_channel_key(world, decoder_id)
    swap_client(decoder, new_key)
    ca = world.headend.ca_systems[decoder.ca_index]
    was_authorized = decoder_id in ca.authorized
    hemod.provision_receiver(world.headend, decoder.ca_index, decoder_id, new_key)
    if enroll:
        hemod.enroll_receiver(world.headend, decoder.ca_index, decoder_id, world.directory)
        if was_authorized:
            hemod.authorize(world.headend, decoder.ca_index, decoder_id, True)
    world.adversary.client_taps.discard(decoder_id)


def _do_recover(world: World, epoch: int) -> None:
    """Restore every compromised component except the chips themselves."""
    # fresh clients for every compromised one; the sender re-keying pass
    # below re-enrolls and re-entitles the whole population
    for decoder_id in sorted(world.adversary.client_taps):
        _do_swap_client(world, decoder_id, enroll=False)
    world.adversary.client_taps.clear()

    ttpmod.rotate(world.ttp, world.master.child(f"ttp-rotate-{world.ttp.generation}"))
    world.refresh_directory()

    # certificate chips hold the retired trust anchor; replace them
    replaced = 0
    for decoder_id, decoder in sorted(world.decoders.items()):
        if isinstance(decoder.chip, CertChipState):
            if decoder.chip.receiver.authority_pk != world.ttp.keypair.public_key:
                old = decoder.chip.receiver
                decoder.chip = CertChipState(
                    certproto.CertReceiverState(
                        suite=old.suite,
                        receiver_id=old.receiver_id,
                        authority_pk=world.ttp.keypair.public_key,
                        enc_keypair=old.enc_keypair,
                    )
                )
                _do_swap_client(world, decoder_id, enroll=False)
                replaced += 1
    world.decoders_replaced += replaced

    for ca in world.headend.ca_systems:
        if ca.kind == hemod.KIND_LEGACY:
            continue
        hemod.rotate_sender_key(
            world.headend, ca.index,
            world.master.child(f"sender-rekey-{ca.index}-{epoch}"),
            ttp=world.ttp if ca.kind == hemod.KIND_CERT else None,
            directory=world.directory,
        )
    world.recovery_epoch = epoch


def adversary_step(world: World, event: Event) -> World:
    """Apply one adversary action to the world (state-changing actions act
    immediately; message-level actions are queued for this epoch's delivery)."""
    adv = world.adversary
    if event.verb == "compromise":
        what = event.args[0]
        if what == "control-word":
            adv.cw_taps.add(encode_id(int(event.args[1])))
        elif what == "ca-client":
            adv.client_taps.add(encode_id(int(event.args[1])))
        elif what == "sender-keys":
            ca = world.headend.ca_systems[int(event.args[1])]
            if ca.sender is None:
                raise ProtocolError("legacy CA system has no sender keys to compromise")
            adv.sender_snapshots[ca.index] = SenderSnapshot(
                kind=ca.kind,
                sig_keypair=ca.sender.sig_keypair,
                ltk_store=dict(ca.sender.ltk_store),
                group_key=ca.group_key,
                ecm_key=ca.ecm_key,
            )
        elif what == "ttp-key":
            adv.authority_key = (world.ttp.generation, world.ttp.keypair)
    elif event.verb == "pirate-probe":
        decoder_id = encode_id(int(event.args[0]))
        adv.probes[decoder_id] = ("pirate", world.decoders[decoder_id].ca_index)
    elif event.verb == "forge-sender":
        adv.probes[encode_id(int(event.args[1]))] = ("forge", int(event.args[0]))
    elif event.verb in ("tamper", "replay", "inject-cw"):
        world.epoch_one_shots.append(event)
    else:
        raise ValueError(f"not an adversary action: {event.verb}")
    return world


def _apply_event(world: World, event: Event, epoch: int) -> None:
    if event.verb == "authorize":
        hemod.authorize(world.headend, int(event.args[0]), encode_id(int(event.args[1])), True)
    elif event.verb == "deauthorize":
        hemod.authorize(world.headend, int(event.args[0]), encode_id(int(event.args[1])), False)
    elif event.verb == "enroll":
        hemod.enroll_receiver(world.headend, int(event.args[0]),
                              encode_id(int(event.args[1])), world.directory)
    elif event.verb == "rotate-ttp":
        ttpmod.rotate(world.ttp, world.master.child(f"ttp-rotate-{world.ttp.generation}"))
        world.refresh_directory()
    elif event.verb == "rotate-sender":
        ca_index = int(event.args[0])
        ca = world.headend.ca_systems[ca_index]
        hemod.rotate_sender_key(
            world.headend, ca_index,
            world.master.child(f"sender-rotate-{ca_index}-{epoch}"),
            ttp=world.ttp if ca.kind == hemod.KIND_CERT else None,
            directory=world.directory,
        )
    elif event.verb == "swap-client":
        _do_swap_client(world, encode_id(int(event.args[0])))
    elif event.verb == "recover":
        _do_recover(world, epoch)
    else:
        adversary_step(world, event)


# ---------------------------------------------------------------------------
# pirate message construction
# ---------------------------------------------------------------------------


def _mint_certificate(world: World, rogue_pk: bytes) -> Certificate:
    """Forge a sender certificate under the stolen authority key."""
    adv = world.adversary
    generation, keypair = adv.authority_key
    adv.minted_serial += 1
    payload = Certificate.signed_payload(adv.minted_serial, encode_id(0xAD), ROLE_SENDER,
                                         rogue_pk, generation)
    return Certificate(adv.minted_serial, encode_id(0xAD), ROLE_SENDER, rogue_pk,
                       generation, world.suite.sign(keypair.private_key, payload))


def _wrap_ltk_blob(world: World, sig_private: bytes, decoder_id: bytes,
                   ltk: bytes, rng: Drbg) -> bytes:
    """Phase-1 style signed blob delivering an adversary-chosen long-term key."""
    suite = world.suite
    receiver_pk = world.directory.receiver_pk(decoder_id)
    key_ct = suite.pke_encrypt(receiver_pk, ltk, rng)
    blob = suite.sign(sig_private, decoder_id + lp(key_ct))
    return blob.to_bytes()


def _probe_msgs(world: World, decoder: Decoder, epoch: int,
                probe: tuple[str, int]) -> list[ChipChannelMsg]:
    """Best-effort pirate message set for one decoder, from current knowledge."""
    adv = world.adversary
    suite = world.suite
    kind, ca_index = probe
    rng = adv.rng.child(f"probe-{id_as_int(decoder.decoder_id)}-{epoch}")

    if isinstance(decoder.chip, LegacyChipState):
        if adv.known_cw is None:
            return []
        return [ChipChannelMsg(ChipMsgKind.LOAD_CW, u32(epoch) + lp(adv.known_cw))]

    if kind == "forge":
        # rogue sender with its own keys: full message set, own randomness
        rogue = suite.keygen("sig", rng)
        ltk = rng.read(suite.secret_bytes)
        rand = rng.read(suite.secret_bytes)
        blob = _wrap_ltk_blob(world, rogue.private_key, decoder.decoder_id, ltk, rng)
        if isinstance(decoder.chip, BindChipState):
            return [
                ChipChannelMsg(ChipMsgKind.LOAD_LTK, lp(rogue.public_key) + lp(blob)),
                ChipChannelMsg(ChipMsgKind.PK_SET_UPDATE, build_pk_set_body((rogue.public_key,))),
                ChipChannelMsg(ChipMsgKind.DERIVE,
                               u32(epoch) + lp(rogue.public_key)
                               + lp(suite.sym_encrypt(ltk, rand, aad=u32(epoch)))),
            ]
        if isinstance(decoder.chip, CertChipState) and adv.authority_key is not None:
            cert = _mint_certificate(world, rogue.public_key)
            secret = adv.known_cw if adv.known_cw is not None else rand
            return [
                ChipChannelMsg(ChipMsgKind.LOAD_LTK, lp(cert.to_bytes()) + lp(blob)),
                ChipChannelMsg(ChipMsgKind.DERIVE,
                               u32(epoch) + lp(suite.sym_encrypt(ltk, secret, aad=u32(epoch)))),
            ]
        return []

    # pirate probe: use whatever was compromised
    if isinstance(decoder.chip, CertChipState):
        if adv.authority_key is not None and adv.known_cw is not None:
            rogue = suite.keygen("sig", rng)
            ltk = rng.read(suite.secret_bytes)
            cert = _mint_certificate(world, rogue.public_key)
            blob = _wrap_ltk_blob(world, rogue.private_key, decoder.decoder_id, ltk, rng)
            return [
                ChipChannelMsg(ChipMsgKind.LOAD_LTK, lp(cert.to_bytes()) + lp(blob)),
                ChipChannelMsg(ChipMsgKind.DERIVE,
                               u32(epoch) + lp(suite.sym_encrypt(ltk, adv.known_cw,
                                                                 aad=u32(epoch)))),
            ]
        snapshot = adv.sender_snapshots.get(ca_index)
        if snapshot is not None and adv.known_cw is not None:
            stolen_ltk = snapshot.ltk_store.get(decoder.decoder_id)
            if stolen_ltk is not None:
                return [ChipChannelMsg(
                    ChipMsgKind.DERIVE,
                    u32(epoch) + lp(suite.sym_encrypt(stolen_ltk, adv.known_cw,
                                                      aad=u32(epoch))))]
        if adv.known_cw is not None:
            return [ChipChannelMsg(ChipMsgKind.LOAD_CW, u32(epoch) + lp(adv.known_cw))]
        return []

    if isinstance(decoder.chip, BindChipState):
        snapshot = adv.sender_snapshots.get(ca_index)
        if snapshot is not None:
            old_pk = snapshot.sig_keypair.public_key
            ltk = rng.read(suite.secret_bytes)
            blob = _wrap_ltk_blob(world, snapshot.sig_keypair.private_key,
                                  decoder.decoder_id, ltk, rng)
            rand_guess = adv.known_rand.get(ca_index)
            if rand_guess is None:
                rand_guess = rng.read(suite.secret_bytes)
            return [
                ChipChannelMsg(ChipMsgKind.LOAD_LTK, lp(old_pk) + lp(blob)),
                ChipChannelMsg(ChipMsgKind.PK_SET_UPDATE, build_pk_set_body((old_pk,))),
                ChipChannelMsg(ChipMsgKind.DERIVE,
                               u32(epoch) + lp(old_pk)
                               + lp(suite.sym_encrypt(ltk, rand_guess, aad=u32(epoch)))),
            ]
        if adv.known_cw is not None:
            return [ChipChannelMsg(ChipMsgKind.LOAD_CW, u32(epoch) + lp(adv.known_cw))]
        return []
    return []


# ---------------------------------------------------------------------------
# message-level interference
# ---------------------------------------------------------------------------


def _flip_payload_bit(payload: bytes, bit: int) -> bytes:
    if not payload:
        return payload
    bit %= len(payload) * 8
    out = bytearray(payload)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


def _tamper_frame(world: World, frame: BroadcastFrame, event: Event) -> BroadcastFrame:
    target, bit = event.args[0], int(event.args[1])
    if target == "ecm" and frame.ecms:
        ecm = frame.ecms[0]
        tampered = Ecm(ecm.ca_system_id, ecm.epoch, _flip_payload_bit(ecm.protected_secret, bit))
        for decoder_id in world.decoder_ids_by_ca().get(ecm.ca_system_id, []):
            world.epoch_interfered.add(decoder_id)
        return BroadcastFrame(frame.epoch, frame.scrambled_content,
                              (tampered,) + frame.ecms[1:], frame.emms)
    if target in ("emm-broadcast", "emm-receiver"):
        want_broadcast = target == "emm-broadcast"
        emms = list(frame.emms)
        for i, emm in enumerate(emms):
            if emm.is_broadcast() == want_broadcast:
                emms[i] = Emm(emm.ca_system_id, emm.kind, emm.addressee,
                              _flip_payload_bit(emm.payload, bit))
                if want_broadcast:
                    for decoder_id in world.decoder_ids_by_ca().get(emm.ca_system_id, []):
                        world.epoch_interfered.add(decoder_id)
                else:
                    world.epoch_interfered.add(emm.addressee)
                break
        return BroadcastFrame(frame.epoch, frame.scrambled_content, frame.ecms, tuple(emms))
    return frame


def _chip_filter_for(world: World, decoder: Decoder, epoch: int):
    """Build the chip-channel interposition for one decoder this epoch."""
    adv = world.adversary
    one_shots = world.epoch_one_shots
    decoder_id = decoder.decoder_id

    def chip_filter(msgs: list[ChipChannelMsg]) -> list[ChipChannelMsg]:
        adv.capture_chip_msgs(decoder_id, msgs)
        out = list(msgs)

        for event in one_shots:
            if event.verb == "tamper" and event.args[0] in ("chip-derive", "chip-load-ltk"):
                wanted = (
                    (ChipMsgKind.DERIVE, ChipMsgKind.LOAD_CW)
                    if event.args[0] == "chip-derive"
                    else (ChipMsgKind.LOAD_LTK,)
                )
                bit = int(event.args[1])
                for i, msg in enumerate(out):
                    if msg.kind in wanted:
                        out[i] = ChipChannelMsg(msg.kind, _flip_payload_bit(msg.payload, bit))
                        world.epoch_interfered.add(decoder_id)
                        break
            elif event.verb == "replay" and encode_id(int(event.args[1])) == decoder_id:
                src = encode_id(int(event.args[0]))
                captured = adv.captured.get((event.args[2], src))
                world.epoch_interfered.add(decoder_id)
                if isinstance(captured, ChipChannelMsg):
                    out.append(captured)
                elif isinstance(captured, Emm):
                    try:
                        out.extend(client_process_emm(decoder.client, captured))
                    except Exception:  # noqa: BLE001 - rejected replays are the point
                        pass
                elif isinstance(captured, Ecm):
                    try:
                        replayed = client_process_ecm(decoder.client, captured)
                        if replayed is not None:
                            out.append(replayed)
                    except Exception:  # noqa: BLE001
                        pass
            elif event.verb == "inject-cw" and encode_id(int(event.args[0])) == decoder_id:
                world.epoch_interfered.add(decoder_id)
                if adv.known_cw is not None:
                    out.append(ChipChannelMsg(ChipMsgKind.LOAD_CW,
                                              u32(epoch) + lp(adv.known_cw)))

        probe = adv.probes.get(decoder_id)
        if probe is not None:
            injected = _probe_msgs(world, decoder, epoch, probe)
            if injected:
                out.extend(injected)
            world.epoch_interfered.add(decoder_id)
        return out

    return chip_filter


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------


def _update_adversary_ecm_knowledge(world: World, frame: BroadcastFrame) -> None:
    """Passive reads the adversary performs the moment a frame arrives,
    using any entitlement keys it holds (live client taps, key snapshots)."""
    adv = world.adversary
    headend = world.headend

    # ECM reading with any held entitlement keys (live client taps first)
    keys_by_ca: dict[int, list[bytes]] = {}
    for decoder_id in sorted(adv.client_taps):
        decoder = world.decoders[decoder_id]
        if decoder.client.ecm_key is not None:
            keys_by_ca.setdefault(decoder.ca_index, []).append(decoder.client.ecm_key)
    for ca_index, snapshot in adv.sender_snapshots.items():
        keys_by_ca.setdefault(ca_index, []).append(snapshot.ecm_key)

    for ecm in frame.ecms:
        for key in keys_by_ca.get(ecm.ca_system_id, []):
            try:
                secret = unprotect(world.suite, key, ecm.protected_secret,
                                   aad=ecm_aad(ecm.ca_system_id, ecm.epoch))
            except Exception:  # noqa: BLE001 - stale key, nothing learned
                continue
            ca = headend.ca_systems[ecm.ca_system_id]
            if ca.kind == hemod.KIND_BIND:
                adv.known_rand[ecm.ca_system_id] = secret
                if headend.pk_set:
                    adv.known_cw = derive_secret(
                        BindingInput(headend.pk_set, secret), world.suite.secret_bits
                    )
            else:
                adv.known_cw = secret
            break


def run_world(config: ScenarioConfig, capture_frames: bool = False) -> tuple[RunReport, World]:
    world = build_world(config, capture_frames=capture_frames)
    content_rng = world.master.child("content")
    events_by_epoch: dict[int, list[Event]] = {}
    for event in config.events:
        events_by_epoch.setdefault(event.epoch, []).append(event)

    for epoch in range(config.epochs):
        world.epoch_interfered = set()
        world.epoch_one_shots = []
        for event in events_by_epoch.get(epoch, []):
            _apply_event(world, event, epoch)

        content = content_rng.read(config.content_bytes)
        frame = hemod.epoch_tick(world.headend, content)
        for event in world.epoch_one_shots:
            if event.verb == "tamper":
                frame = _tamper_frame(world, frame, event)
        world.ledger.add_frame(frame)
        if world.frames is not None:
            world.frames.append(encode_frame(frame))
        world.adversary.capture_frame(frame, world.decoder_ids_by_ca())
        _update_adversary_ecm_knowledge(world, frame)

        authorized: set[int] = set()
        for ca in world.headend.ca_systems:
            authorized.update(id_as_int(rid) for rid in ca.authorized)

        outcomes: dict[int, str] = {}
        for decoder_id, decoder in sorted(world.decoders.items()):
            result = process_frame(decoder, frame,
                                   chip_filter=_chip_filter_for(world, decoder, epoch))
            world.ledger.chip_channel += sum(len(m.encode()) for m in result.chip_msgs)
            if result.descrambled == content:
                outcome = OUTCOME_DERIVED
            elif result.errors or result.derive_attempted:
                outcome = OUTCOME_REJECTED
            else:
                outcome = OUTCOME_EXCLUDED
            outcomes[id_as_int(decoder_id)] = outcome
            if decoder_id in world.adversary.cw_taps and outcome == OUTCOME_DERIVED:
                # live extraction: the tap reads the word as the chip derives it
                world.adversary.known_cw = world.headend.scrambler_key

        world.rows.append(EpochRow(
            epoch=epoch,
            authorized=frozenset(authorized),
            interfered=frozenset(id_as_int(d) for d in world.epoch_interfered),
            outcomes=outcomes,
        ))

    report = _build_report(world)
    return report, world


def run_scenario(config: ScenarioConfig, capture_frames: bool = False) -> RunReport:
    report, _ = run_world(config, capture_frames=capture_frames)
    return report


def compute_verdicts(rows: list[EpochRow]) -> tuple[bool, int]:
    """Recompute (implicit-key-auth, authenticity-violations) from outcome rows.

    A violation is an unauthorized decoder landing on ``K``. Implicit key
    authentication additionally requires every authorized decoder whose
    messages were untouched that epoch to land on ``K``.
    """
    violations = 0
    implicit = True
    for row in rows:
        for decoder_id, outcome in row.outcomes.items():
            if outcome == OUTCOME_DERIVED and decoder_id not in row.authorized:
                violations += 1
                implicit = False
            if (decoder_id in row.authorized and decoder_id not in row.interfered
                    and outcome != OUTCOME_DERIVED):
                implicit = False
    return implicit, violations


def _build_report(world: World) -> RunReport:
    implicit, violations = compute_verdicts(world.rows)
    recovery_success: bool | None = None
    if world.recovery_epoch is not None:
        tail = [row for row in world.rows if row.epoch >= world.recovery_epoch]
        tail_implicit, tail_violations = compute_verdicts(tail)
        recovery_success = tail_implicit and tail_violations == 0
    return RunReport(
        scenario=world.config.name,
        seed=world.config.seed,
        epochs=world.config.epochs,
        secret_bits=world.config.secret_bits,
        ca_kinds=list(world.config.ca_kinds),
        decoder_ids=sorted(spec.decoder_id for spec in world.config.decoders),
        rows=world.rows,
        ledger=world.ledger,
        implicit_key_auth=implicit,
        authenticity_violations=violations,
        recovery_epoch=world.recovery_epoch,
        recovery_success=recovery_success,
        decoders_replaced=world.decoders_replaced,
    )
