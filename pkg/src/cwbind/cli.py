"""Command-line front end.

Subcommands::

    cwbind run <scenario.scn> [--seed N] [--out FILE] [--frames FILE]
    cwbind ttp init --state FILE [--seed N]
    cwbind ttp rotate --state FILE [--seed N]
    cwbind ttp export --state FILE --out FILE
    cwbind kdf strength --n BITS --max-len BITS
    cwbind kdf strength --table
    cwbind wire decode <file>
    cwbind vectors emit [--out DIR]

Exit codes: 0 success, 1 operational failure (bad scenario, undecodable
file), 2 usage error. ``CWBIND_SEED`` supplies a default seed when neither
``--seed`` nor the scenario file provides one to override. Scripts and CI
are the intended users; there is no interactive mode.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .encoding import id_as_int
from .errors import CwbindError
from .binding import second_preimage_strength
from .sim import load_scenario, run_world
from .suite import CipherSuite, Drbg, KeyPair, SuiteConfig
from .ttp import Certificate, TtpState, export_directory, rotate, ttp_init
from .vectors import generate_vectors, vectors_json
from .wire import decode_ecm, decode_emm, decode_frame

SEED_ENV = "CWBIND_SEED"


def _default_seed(explicit: int | None) -> int | None:
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV)
    return int(env) if env else None


# ---------------------------------------------------------------------------
# ttp state file (JSON, hex-encoded fields)
# ---------------------------------------------------------------------------


def _ttp_to_json(ttp: TtpState) -> str:
    state = {
        "config": vars(ttp.suite.config).copy(),
        "public_key": ttp.keypair.public_key.hex(),
        "private_key": ttp.keypair.private_key.hex(),
        "scheme": ttp.keypair.scheme,
        "generation": ttp.generation,
        "receivers": {str(id_as_int(k)): v.hex() for k, v in ttp.receiver_registry.items()},
        "senders": {str(id_as_int(k)): v.hex() for k, v in ttp.sender_registry.items()},
        "certs": [cert.to_bytes().hex() for cert in ttp.issued_certs],
        "revoked": sorted(ttp.revoked_serials),
        "prior_pks": [[gen, pk.hex()] for gen, pk in ttp.prior_pks],
        "next_serial": ttp.next_serial,
    }
    return json.dumps(state, indent=2, sort_keys=True) + "\n"


def _ttp_from_json(text: str) -> TtpState:
    state = json.loads(text)
    suite = CipherSuite(SuiteConfig(**state["config"]))
    ttp = TtpState(
        suite=suite,
        keypair=KeyPair(
            scheme=state["scheme"],
            public_key=bytes.fromhex(state["public_key"]),
            private_key=bytes.fromhex(state["private_key"]),
        ),
        generation=state["generation"],
        next_serial=state["next_serial"],
    )
    ttp.receiver_registry = {
        int(k).to_bytes(8, "big"): bytes.fromhex(v) for k, v in state["receivers"].items()
    }
    ttp.sender_registry = {
        int(k).to_bytes(8, "big"): bytes.fromhex(v) for k, v in state["senders"].items()
    }
    ttp.issued_certs = [Certificate.from_bytes(bytes.fromhex(c)) for c in state["certs"]]
    ttp.revoked_serials = set(state["revoked"])
    ttp.prior_pks = [(gen, bytes.fromhex(pk)) for gen, pk in state["prior_pks"]]
    return ttp


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    seed = _default_seed(args.seed)
    if seed is not None:
        config = replace(config, seed=seed)
    report, world = run_world(config, capture_frames=args.frames is not None)
    text = report.to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.frames:
        blob = b"".join(len(f).to_bytes(4, "big") + f for f in world.frames)
        Path(args.frames).write_bytes(blob)
    return 0


def _cmd_ttp(args) -> int:
    state_path = Path(args.state)
    if args.ttp_cmd == "init":
        seed = _default_seed(args.seed)
        if seed is None:
            seed = 0
        ttp = ttp_init(CipherSuite(), Drbg.from_int(seed).child("ttp"))
        state_path.write_text(_ttp_to_json(ttp))
        print(f"authority generation {ttp.generation}, key {ttp.keypair.public_key.hex()}")
        return 0
    ttp = _ttp_from_json(state_path.read_text())
    if args.ttp_cmd == "rotate":
        seed = _default_seed(args.seed)
        if seed is None:
            seed = ttp.generation
        rotate(ttp, Drbg.from_int(seed).child(f"ttp-rotate-{ttp.generation}"))
        state_path.write_text(_ttp_to_json(ttp))
        print(f"authority generation {ttp.generation}, key {ttp.keypair.public_key.hex()}")
        return 0
    if args.ttp_cmd == "export":
        Path(args.out).write_bytes(export_directory(ttp))
        print(f"directory for generation {ttp.generation} written to {args.out}")
        return 0
    raise AssertionError(args.ttp_cmd)


def _cmd_kdf_strength(args) -> int:
    if args.table:
        lengths = [2**e for e in (10, 13, 20, 30, 40)]
        header = "n/bits " + " ".join(f"L=2^{e}".rjust(8) for e in (10, 13, 20, 30, 40))
        print(header)
        for n in (128, 192, 256, 511):
            row = [str(second_preimage_strength(n, length)).rjust(8) for length in lengths]
            print(f"{n:>6} " + " ".join(row))
        return 0
    if args.n is None or args.max_len is None:
        print("kdf strength requires --n and --max-len (or --table)", file=sys.stderr)
        return 2
    print(second_preimage_strength(args.n, args.max_len))
    return 0


def _print_emm(emm) -> None:
    addressee = "broadcast" if emm.is_broadcast() else str(id_as_int(emm.addressee))
    print(f"EMM ca-system={emm.ca_system_id} kind={emm.kind.name} addressee={addressee}")
    print(f"  payload ({len(emm.payload)} bytes): {emm.payload.hex()}")


def _print_ecm(ecm) -> None:
    print(f"ECM ca-system={ecm.ca_system_id} epoch={ecm.epoch}")
    print(f"  protected secret ({len(ecm.protected_secret)} bytes): {ecm.protected_secret.hex()}")


def _cmd_wire_decode(args) -> int:
    data = Path(args.file).read_bytes()
    magic = data[:2]
    if magic == b"EM":
        _print_emm(decode_emm(data))
    elif magic == b"EC":
        _print_ecm(decode_ecm(data))
    elif magic == b"BF":
        frame = decode_frame(data)
        print(f"frame epoch={frame.epoch} content={len(frame.scrambled_content)} bytes "
              f"ecms={len(frame.ecms)} emms={len(frame.emms)}")
        for ecm in frame.ecms:
            _print_ecm(ecm)
        for emm in frame.emms:
            _print_emm(emm)
    elif magic == b"TD":
        from .ttp import parse_directory

        directory = parse_directory(CipherSuite(), data)
        print(f"directory generation={directory.generation} "
              f"authority-key={directory.authority_pk.hex()}")
        print(f"  certificates: {len(directory.certificates)}")
        for cert in directory.certificates:
            print(f"    serial={cert.serial} subject={id_as_int(cert.subject_id)} "
                  f"role={cert.subject_role} generation={cert.generation}")
        print(f"  revoked serials: {sorted(directory.revoked_serials) or '-'}")
    else:
        print(f"unrecognized magic {magic!r} at offset 0", file=sys.stderr)
        return 1
    return 0


def _cmd_vectors_emit(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, entries in generate_vectors().items():
        path = out_dir / f"{name}.json"
        path.write_text(vectors_json(entries))
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwbind", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cwbind {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and emit its report")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help="write the report here instead of stdout")
    p_run.add_argument("--frames", help="capture broadcast frames to this file")
    p_run.set_defaults(handler=_cmd_run)

    p_ttp = sub.add_parser("ttp", help="manage an authority state file")
    ttp_sub = p_ttp.add_subparsers(dest="ttp_cmd", required=True)
    for name in ("init", "rotate"):
        p = ttp_sub.add_parser(name)
        p.add_argument("--state", required=True)
        p.add_argument("--seed", type=int)
        p.set_defaults(handler=_cmd_ttp)
    p_export = ttp_sub.add_parser("export")
    p_export.add_argument("--state", required=True)
    p_export.add_argument("--out", required=True)
    p_export.set_defaults(handler=_cmd_ttp)

    p_kdf = sub.add_parser("kdf", help="binding-derivation utilities")
    kdf_sub = p_kdf.add_subparsers(dest="kdf_cmd", required=True)
    p_strength = kdf_sub.add_parser("strength")
    p_strength.add_argument("--n", type=int)
    p_strength.add_argument("--max-len", type=int, dest="max_len")
    p_strength.add_argument("--table", action="store_true")
    p_strength.set_defaults(handler=_cmd_kdf_strength)

    p_wire = sub.add_parser("wire", help="wire message utilities")
    wire_sub = p_wire.add_subparsers(dest="wire_cmd", required=True)
    p_decode = wire_sub.add_parser("decode")
    p_decode.add_argument("file")
    p_decode.set_defaults(handler=_cmd_wire_decode)

    p_vec = sub.add_parser("vectors", help="golden vector utilities")
    vec_sub = p_vec.add_subparsers(dest="vectors_cmd", required=True)
    p_emit = vec_sub.add_parser("emit")
    p_emit.add_argument("--out", default="vectors")
    p_emit.set_defaults(handler=_cmd_vectors_emit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (CwbindError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
