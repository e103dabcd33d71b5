"""Certificate-authenticated key transport: phases, checks, abort semantics."""

import copy

import pytest

from cwbind import certproto
from cwbind.errors import CryptoError, ProtocolError
from cwbind.suite import Drbg, SignedMessage
from cwbind.ttp import export_directory, parse_directory, register_receiver, revoke, ttp_init


@pytest.fixture
def world(suite):
    """Authority, sender, three initialized receivers."""
    rng = Drbg.from_int(0xBEEF)
    ttp = ttp_init(suite, rng.child("ttp"))
    receivers = {}
    for i in (1, 2, 3):
        recv = certproto.receiver_init(suite, i, ttp.keypair.public_key, rng.child(f"r{i}"))
        register_receiver(ttp, i, recv.enc_keypair.public_key)
        receivers[i] = recv
    directory = parse_directory(suite, export_directory(ttp))
    sender = certproto.sender_init(suite, 100, rng.child("sender"), ttp, directory)
    return ttp, sender, receivers, rng.child("run")


def test_honest_phase1_establishes_matching_keys(world):
    ttp, sender, receivers, rng = world
    bundle = certproto.phase1_send(sender, 1, rng)
    certproto.phase1_receive(receivers[1], bundle)
    assert receivers[1].ltk == sender.ltk_store[(1).to_bytes(8, "big")]


def test_bundle_signed_blob_verifies_under_sender_key(world, suite):
    ttp, sender, receivers, rng = world
    bundle = certproto.phase1_send(sender, 1, rng)
    suite.verify_recover(sender.sig_keypair.public_key, bundle.signed_blob)


def test_phase1_fresh_ltk_each_run(world):
    ttp, sender, receivers, rng = world
    certproto.phase1_send(sender, 1, rng)
    first = sender.ltk_store[(1).to_bytes(8, "big")]
    certproto.phase1_send(sender, 1, rng)
    assert sender.ltk_store[(1).to_bytes(8, "big")] != first


def test_phase1_unknown_receiver(world):
    ttp, sender, receivers, rng = world
    with pytest.raises(ProtocolError):
        certproto.phase1_send(sender, 42, rng)


def test_phase1_revoked_receiver_cert(world, suite):
    ttp, sender, receivers, rng = world
    serial = next(c.serial for c in ttp.issued_certs if c.subject_id == (2).to_bytes(8, "big"))
    revoke(ttp, serial)
    sender.directory = parse_directory(suite, export_directory(ttp))
    with pytest.raises(ProtocolError):
        certproto.phase1_send(sender, 2, rng)


def test_wrong_recipient_aborts_with_state_unchanged(world):
    ttp, sender, receivers, rng = world
    bundle_for_3 = certproto.phase1_send(sender, 3, rng)
    before = copy.deepcopy(receivers[1])
    with pytest.raises(ProtocolError):
        certproto.phase1_receive(receivers[1], bundle_for_3)
    assert receivers[1] == before


def test_rogue_authority_cert_aborts(world, suite):
    # a full run against a sender certified by a different "authority"
    ttp, sender, receivers, rng = world
    rogue_ttp = ttp_init(suite, Drbg.from_int(666))
    for i, recv in receivers.items():
        register_receiver(rogue_ttp, i, recv.enc_keypair.public_key)
    rogue_directory = parse_directory(suite, export_directory(rogue_ttp))
    rogue_sender = certproto.sender_init(suite, 100, Drbg.from_int(667), rogue_ttp,
                                         rogue_directory)
    bundle = certproto.phase1_send(rogue_sender, 1, rng)
    before = copy.deepcopy(receivers[1])
    with pytest.raises(CryptoError):
        certproto.phase1_receive(receivers[1], bundle)
    assert receivers[1] == before


def test_receiver_side_revocation_check(world):
    ttp, sender, receivers, rng = world
    bundle = certproto.phase1_send(sender, 1, rng)
    receivers[1].known_revoked = {sender.sender_cert.serial}
    before = copy.deepcopy(receivers[1])
    with pytest.raises(ProtocolError):
        certproto.phase1_receive(receivers[1], bundle)
    assert receivers[1] == before


def test_receiver_role_check(world, suite):
    # a receiver certificate in the sender slot is rejected even though it
    # verifies under the authority key
    ttp, sender, receivers, rng = world
    bundle = certproto.phase1_send(sender, 1, rng)
    receiver_cert = next(c for c in ttp.issued_certs if c.subject_role == "receiver")
    forged = certproto.CertBundle(sender_cert=receiver_cert, signed_blob=bundle.signed_blob)
    with pytest.raises((ProtocolError, CryptoError)):
        certproto.phase1_receive(receivers[1], forged)


def test_phase2_round_trip_and_authorization_shape(world):
    ttp, sender, receivers, rng = world
    for i in (1, 2):  # authorized set
        certproto.phase1_receive(receivers[i], certproto.phase1_send(sender, i, rng))
    secret = rng.read(16)
    derived = {}
    for i in (1, 2):
        derived[i] = certproto.phase2_receive(receivers[i], certproto.phase2_send(sender, i, secret))
    assert derived == {1: secret, 2: secret}
    # receiver 3 never ran phase 1: the sender cannot even address it
    with pytest.raises(ProtocolError):
        certproto.phase2_send(sender, 3, secret)
    with pytest.raises(ProtocolError):
        certproto.phase2_receive(receivers[3], b"\x00" * 44)


def test_phase2_ciphertexts_differ_per_receiver(world):
    ttp, sender, receivers, rng = world
    for i in (1, 2):
        certproto.phase1_receive(receivers[i], certproto.phase1_send(sender, i, rng))
    secret = b"\x77" * 16
    assert certproto.phase2_send(sender, 1, secret) != certproto.phase2_send(sender, 2, secret)


def test_phase2_tampered_ciphertext_rejected(world):
    ttp, sender, receivers, rng = world
    certproto.phase1_receive(receivers[1], certproto.phase1_send(sender, 1, rng))
    ct = bytearray(certproto.phase2_send(sender, 1, b"\x55" * 16))
    ct[-1] ^= 1
    with pytest.raises(CryptoError):
        certproto.phase2_receive(receivers[1], bytes(ct))


def test_phase2_cross_receiver_ciphertext_rejected(world):
    ttp, sender, receivers, rng = world
    for i in (1, 2):
        certproto.phase1_receive(receivers[i], certproto.phase1_send(sender, i, rng))
    ct_for_2 = certproto.phase2_send(sender, 2, b"\x66" * 16)
    with pytest.raises(CryptoError):
        certproto.phase2_receive(receivers[1], ct_for_2)


def test_phase2_context_binding(world):
    ttp, sender, receivers, rng = world
    certproto.phase1_receive(receivers[1], certproto.phase1_send(sender, 1, rng))
    ct = certproto.phase2_send(sender, 1, b"\x44" * 16, context=b"epoch-9")
    assert certproto.phase2_receive(receivers[1], ct, context=b"epoch-9") == b"\x44" * 16
    with pytest.raises(CryptoError):
        certproto.phase2_receive(receivers[1], ct, context=b"epoch-8")


def test_implicit_key_authentication_set_equality(world):
    # the set of receivers that can produce the secret equals the set the
    # sender ran phase 2 for, across a changing authorized subset
    ttp, sender, receivers, rng = world
    for i in (1, 2, 3):
        certproto.phase1_receive(receivers[i], certproto.phase1_send(sender, i, rng))
    for authorized in [(1,), (1, 2), (2, 3), (1, 2, 3)]:
        secret = rng.read(16)
        cts = {i: certproto.phase2_send(sender, i, secret) for i in authorized}
        derived = set()
        for i in (1, 2, 3):
            for ct in cts.values():
                try:
                    if certproto.phase2_receive(receivers[i], ct) == secret:
                        derived.add(i)
                except CryptoError:
                    pass
        assert derived == set(authorized)


def test_message_tampering_never_yields_secret_at_nonauthorized(world, suite):
    # sampled single-bit tampering over the three message classes; receiver 3
    # is not authorized and must never end up with the sender's secret
    ttp, sender, receivers, rng = world
    bundle = certproto.phase1_send(sender, 1, rng)
    certproto.phase1_receive(receivers[1], bundle)
    secret = rng.read(16)
    ct = certproto.phase2_send(sender, 1, secret)

    cert_bytes = bundle.sender_cert.to_bytes()
    blob_bytes = bundle.signed_blob.to_bytes()
    for blob, rebuild in (
        (cert_bytes, lambda b: certproto.CertBundle(
            certproto.Certificate.from_bytes(b), bundle.signed_blob)),
        (blob_bytes, lambda b: certproto.CertBundle(
            bundle.sender_cert, SignedMessage.from_bytes(b))),
    ):
        for i in range(64):
            bit = (i * len(blob) * 8) // 64
            tampered = bytearray(blob)
            tampered[bit // 8] ^= 1 << (bit % 8)
            try:
                forged = rebuild(bytes(tampered))
                certproto.phase1_receive(receivers[3], forged)
                derived = certproto.phase2_receive(receivers[3], ct)
            except Exception:
                continue
            assert derived != secret
    for i in range(64):
        bit = (i * len(ct) * 8) // 64
        tampered = bytearray(ct)
        tampered[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises((CryptoError, ProtocolError)):
            certproto.phase2_receive(receivers[1], bytes(tampered))


def test_sender_key_reuse_flag(world, suite):
    ttp, sender, receivers, rng = world
    cert_before = sender.sender_cert
    certproto.phase1_send(sender, 1, rng)
    assert sender.sender_cert is cert_before  # default: reuse
    sender.fresh_keys_per_phase1 = True
    certproto.phase1_send(sender, 1, rng, ttp=ttp)
    assert sender.sender_cert is not cert_before
