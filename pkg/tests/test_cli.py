import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from baconsched.circuit import NoiseModel, build_memory_circuit, parse
from baconsched.cli import main
from baconsched.decoder import build_decoder
from baconsched.schedule import modified_schedule
from baconsched.stabsim import build_dem, format_dem, frame_sample, read_bits

ROOT = Path(__file__).resolve().parents[1]
SEQ = ROOT / "data" / "canonical5.seq"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_game_verify_file(capsys):
    code, out, _ = run(capsys, "game-verify", str(SEQ))
    assert code == 0
    assert out.splitlines()[-1] == "overall: PASS"


def test_game_verify_failure_exit_code(tmp_path, capsys):
    bad = SEQ.read_text().replace("BBBB\nRRBB", "RRRR\nRRBB", 1)
    path = tmp_path / "bad.seq"
    path.write_text(bad)
    code, out, _ = run(capsys, "game-verify", str(path))
    assert code == 1
    assert "overall: FAIL" in out


def test_usage_errors(tmp_path, capsys):
    assert run(capsys, "game-verify")[0] == 2
    code, _, err = run(capsys, "game-verify", str(tmp_path / "missing.seq"))
    assert code == 2 and err
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    (tmp_path / "junk.txt").write_text("not a circuit\n")
    code, _, err = run(capsys, "dem", str(tmp_path / "junk.txt"))
    assert code == 2 and "line 1" in err


def test_census(capsys):
    code, out, _ = run(capsys, "census", "--d", "5")
    assert code == 0
    assert out.splitlines() == [
        "detectors=56 max_weight=16 coverage=25/25 participation=100% (112/112)",
        "weights 4:24 8:16 16:16",
    ]


def test_schedule_and_detectors(capsys):
    code, out, _ = run(capsys, "schedule", "--d", "5")
    assert code == 0 and "ZZ" in out and "XX" in out
    code, out, _ = run(capsys, "detectors", "--d", "5", "--steps", "8")
    assert out == (ROOT / "tests" / "data" / "detectors_5x5_X.txt").read_text()


def test_memory_noiseless(capsys):
    code, out, _ = run(capsys, "memory", "--d", "5", "--p", "0", "--max-shots", "1000")
    assert code == 0
    row = out.splitlines()[2].split(",")
    assert row[:4] == ["5", "0", "1000", "0"]


def test_pipeline_matches_in_process(tmp_path, capsys):
    circ, dem = tmp_path / "c.txt", tmp_path / "m.dem"
    dets, obs, pred = tmp_path / "d.b8", tmp_path / "o.b8", tmp_path / "p.b8"
    assert run(capsys, "circuit", "--d", "5", "--rounds", "3", "--p", "0.003", "-o", str(circ))[0] == 0
    assert run(capsys, "dem", str(circ), "-o", str(dem))[0] == 0
    assert run(capsys, "sample", str(circ), "--shots", "2000", "--seed", "4", "--dets", str(dets), "--obs", str(obs))[0] == 0
    code, out, _ = run(capsys, "decode", str(dem), "--dets", str(dets), "--obs", str(obs), "-o", str(pred))
    assert code == 0

    c = build_memory_circuit(modified_schedule(5), rounds=3, noise=NoiseModel(0.003))
    assert parse(circ.read_text()) == c
    assert dem.read_text() == format_dem(build_dem(c))
    d_ref, o_ref = frame_sample(c, 2000, seed=4)
    p_ref = build_decoder(build_dem(c)).decode_batch(d_ref)
    with open(dets, "rb") as fh:
        assert np.array_equal(read_bits(fh)[0], d_ref)
    with open(pred, "rb") as fh:
        assert np.array_equal(read_bits(fh)[0], p_ref)
    errors = int((p_ref != o_ref).any(axis=1).sum())
    assert out.strip() == f"shots=2000 logical_errors={errors}"


def test_decode_width_mismatch(tmp_path, capsys):
    circ, dem, dets = tmp_path / "c.txt", tmp_path / "m.dem", tmp_path / "d.b8"
    run(capsys, "circuit", "--d", "5", "--rounds", "1", "-o", str(circ))
    run(capsys, "dem", str(circ), "-o", str(dem))
    run(capsys, "circuit", "--d", "5", "--rounds", "2", "-o", str(circ))
    run(capsys, "sample", str(circ), "--shots", "10", "--dets", str(dets))
    code, _, err = run(capsys, "decode", str(dem), "--dets", str(dets))
    assert code == 2 and "does not match" in err


def test_console_script_stdin_pipe():
    circuit = subprocess.run(
        [sys.executable, "-m", "baconsched.cli", "circuit", "--d", "3", "--schedule", "standard", "--p", "0.01"],
        capture_output=True, text=True, check=True,
    ).stdout
    dem = subprocess.run(
        [sys.executable, "-m", "baconsched.cli", "dem", "-"],
        input=circuit, capture_output=True, text=True, check=True,
    ).stdout
    assert dem.startswith("error(")
    assert dem.rstrip().endswith("logical_observable L0")


def test_threshold_csv(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code, _, _ = run(
        capsys, "threshold", "--d-list", "3,5", "--p-list", "0.01,0.02", "--max-shots", "256",
        "--batch-size", "128", "--schedule", "standard", "--rounds", "2", "-o", str(out),
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[-1].startswith("# crossing_estimate")
    assert sum(not ln.startswith("#") for ln in lines) == 5
