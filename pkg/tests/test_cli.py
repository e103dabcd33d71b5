"""Command line: subcommands, exit codes, stable outputs."""

import json
from pathlib import Path

import pytest

from cwbind.cli import main

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"
VECTOR_DIR = Path(__file__).resolve().parent / "vectors"


def test_kdf_strength_prints_value(capsys):
    assert main(["kdf", "strength", "--n", "128", "--max-len", "1048576"]) == 0
    assert capsys.readouterr().out.strip() == "128"


def test_kdf_strength_table(capsys):
    assert main(["kdf", "strength", "--table"]) == 0
    out = capsys.readouterr().out
    assert "511" in out and "509" in out


def test_kdf_strength_requires_args(capsys):
    assert main(["kdf", "strength"]) == 2


def test_run_twice_identical_report_files(tmp_path):
    out1, out2 = tmp_path / "a.report", tmp_path / "b.report"
    scenario = str(SCENARIO_DIR / "redistribution.scn")
    assert main(["run", scenario, "--seed", "7", "--out", str(out1)]) == 0
    assert main(["run", scenario, "--seed", "7", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_run_seed_override_changes_seed_line(tmp_path):
    out = tmp_path / "r.report"
    assert main(["run", str(SCENARIO_DIR / "client-swap.scn"), "--seed", "99",
                 "--out", str(out)]) == 0
    assert "seed 99" in out.read_text()


def test_run_env_seed_default(tmp_path, monkeypatch):
    monkeypatch.setenv("CWBIND_SEED", "55")
    out = tmp_path / "r.report"
    assert main(["run", str(SCENARIO_DIR / "client-swap.scn"), "--out", str(out)]) == 0
    assert "seed 55" in out.read_text()


def test_run_missing_scenario_fails(capsys):
    assert main(["run", "/nonexistent.scn"]) == 1
    assert "error:" in capsys.readouterr().err


def test_run_invalid_scenario_fails(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("scenario x\nseed 1\n")  # no epochs
    assert main(["run", str(bad)]) == 1


def test_run_frame_capture(tmp_path):
    frames = tmp_path / "run.frames"
    assert main(["run", str(SCENARIO_DIR / "client-swap.scn"), "--out",
                 str(tmp_path / "r"), "--frames", str(frames)]) == 0
    blob = frames.read_bytes()
    count = 0
    offset = 0
    while offset < len(blob):
        length = int.from_bytes(blob[offset : offset + 4], "big")
        offset += 4 + length
        count += 1
    assert count == 40  # one frame per epoch


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc_info:
        main(["definitely-not-a-command"])
    assert exc_info.value.code == 2


def test_ttp_lifecycle(tmp_path, capsys):
    state = tmp_path / "authority.json"
    assert main(["ttp", "init", "--state", str(state), "--seed", "5"]) == 0
    first = json.loads(state.read_text())
    assert first["generation"] == 1
    assert main(["ttp", "rotate", "--state", str(state)]) == 0
    second = json.loads(state.read_text())
    assert second["generation"] == 2
    assert second["public_key"] != first["public_key"]
    directory = tmp_path / "directory.bin"
    assert main(["ttp", "export", "--state", str(state), "--out", str(directory)]) == 0
    assert main(["wire", "decode", str(directory)]) == 0
    assert "generation=2" in capsys.readouterr().out


def test_wire_decode_truncated_names_offset(tmp_path, capsys):
    from cwbind.encoding import BROADCAST_ADDR
    from cwbind.wire import Ecm, Emm, EmmKind, encode_ecm, encode_emm

    ecm_file = tmp_path / "one.ecm"
    blob = encode_ecm(Ecm(1, 9, b"\x00" * 44))
    ecm_file.write_bytes(blob[: len(blob) - 3])
    assert main(["wire", "decode", str(ecm_file)]) == 1
    err = capsys.readouterr().err
    assert "offset" in err

    emm_file = tmp_path / "one.emm"
    emm_file.write_bytes(encode_emm(Emm(1, EmmKind.CRL_UPDATE, BROADCAST_ADDR, b"\x01\x02")))
    assert main(["wire", "decode", str(emm_file)]) == 0
    assert "CRL_UPDATE" in capsys.readouterr().out


def test_wire_decode_unknown_magic(tmp_path, capsys):
    bogus = tmp_path / "bogus.bin"
    bogus.write_bytes(b"ZZ\x00\x00")
    assert main(["wire", "decode", str(bogus)]) == 1


def test_vectors_emit_matches_checked_in(tmp_path):
    assert main(["vectors", "emit", "--out", str(tmp_path)]) == 0
    for name in ("suite", "kdf", "wire"):
        emitted = (tmp_path / f"{name}.json").read_bytes()
        checked_in = (VECTOR_DIR / f"{name}.json").read_bytes()
        assert emitted == checked_in, f"{name} vectors drifted"
