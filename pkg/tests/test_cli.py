import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from calcert import datamatrix


def run_cli(*args: str, env: dict | None = None) -> subprocess.CompletedProcess:
    cmd = [sys.executable, "-m", "calcert", *args]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


@pytest.fixture(scope="module")
def example_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "example.json"
    path.write_text(datamatrix.to_json(datamatrix.example_data_matrix()) + "\n")
    return path


def test_help_screens():
    cp = run_cli("--help")
    assert cp.returncode == 0, cp.stderr
    for sub in ("certify", "simulate", "sweep", "region", "selftest"):
        assert sub in cp.stdout


def test_certify_entangled_exit_zero(example_file):
    cp = run_cli("certify", str(example_file), "--scenario", "sharp")
    assert cp.returncode == 0, cp.stderr
    doc = json.loads(cp.stdout)
    assert doc["status"] == "entangled"
    assert doc["criterion"] == "sharp-sqrt"
    assert abs(doc["margin"] - 0.0490656659) < 1e-6


def test_certify_inconclusive_exit_ten(example_file):
    cp = run_cli("certify", str(example_file), "--scenario", "dimension", "--d", "2")
    assert cp.returncode == 10, cp.stderr
    assert json.loads(cp.stdout)["status"] == "inconclusive"


def test_certify_separable_model_exit_eleven_and_witness(example_file, tmp_path):
    witness_path = tmp_path / "model.json"
    cp = run_cli(
        "certify",
        str(example_file),
        "--scenario",
        "unsharp-orthogonal",
        "--witness-file",
        str(witness_path),
    )
    assert cp.returncode == 11, cp.stderr
    doc = json.loads(cp.stdout)
    assert doc["status"] == "separable-model-exists"
    assert doc["witness_file"] == str(witness_path)
    witness = json.loads(witness_path.read_text())
    assert witness["reproduction_error"] <= 1e-9
    state = np.asarray(witness["state"]["re"]) + 1j * np.asarray(witness["state"]["im"])
    assert state.shape == (4, 4)
    assert abs(np.trace(state) - 1.0) < 1e-9
    assert len(witness["measurements_a"]) == 2
    assert len(witness["measurements_b"]) == 2


def test_certify_default_witness_path(example_file):
    cp = run_cli("certify", str(example_file), "--scenario", "qubit")
    assert cp.returncode == 11, cp.stderr
    default_path = Path(str(example_file) + ".witness.json")
    assert default_path.exists()
    assert json.loads(cp.stdout)["witness_file"] == str(default_path)


def test_certify_input_errors(example_file, tmp_path):
    assert run_cli("certify", str(tmp_path / "missing.json"), "--scenario", "sharp").returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text("not json\n")
    assert run_cli("certify", str(bad), "--scenario", "sharp").returncode == 2
    assert run_cli("certify", str(example_file), "--scenario", "nonsense").returncode == 2
    assert run_cli("certify", str(example_file), "--scenario", "dimension").returncode == 2
    assert run_cli("certify", str(example_file), "--scenario", "qubit", "--d", "3").returncode == 2
    assert (
        run_cli("certify", str(example_file), "--scenario", "sharp", "--epsilon", "-1").returncode
        == 2
    )


def test_epsilon_env_override(example_file):
    import os

    env = dict(os.environ, CALCERT_EPSILON="-1")
    cp = run_cli("certify", str(example_file), "--scenario", "sharp", env=env)
    assert cp.returncode == 2
    assert "tolerance" in cp.stderr
    # flag beats the environment
    env = dict(os.environ, CALCERT_EPSILON="-1")
    cp = run_cli("certify", str(example_file), "--scenario", "sharp", "--epsilon", "1e-9", env=env)
    assert cp.returncode == 0, cp.stderr


def test_simulate_certify_round_trip(tmp_path):
    data_file = tmp_path / "werner.json"
    cp = run_cli("simulate", "--state", "werner", "--p", "0.5", "--settings", "xyz",
                 "-o", str(data_file))
    assert cp.returncode == 0, cp.stderr
    cp = run_cli("certify", str(data_file), "--scenario", "dimension", "--d", "2")
    assert cp.returncode == 0, cp.stderr
    assert json.loads(cp.stdout)["status"] == "entangled"
    # file bytes equal the in-process serialization
    from calcert.selftest import werner_data_matrix

    assert data_file.read_text().strip() == datamatrix.to_json(werner_data_matrix(0.5, "xyz"))


def test_simulate_stdout_matches_file_output(tmp_path):
    to_file = tmp_path / "bfp.json"
    cp_file = run_cli("simulate", "--state", "bfp", "--p", "0.25", "-o", str(to_file))
    assert cp_file.returncode == 0, cp_file.stderr
    cp_stdout = run_cli("simulate", "--state", "bfp", "--p", "0.25")
    assert cp_stdout.returncode == 0
    assert cp_stdout.stdout.strip() == to_file.read_text().strip()
    doc = json.loads(cp_stdout.stdout)
    assert doc["settings"] == 15


def test_simulate_rejects_bad_p():
    assert run_cli("simulate", "--state", "werner", "--p", "1.5").returncode == 2


def test_sweep_werner_det_threshold():
    cp = run_cli("sweep", "--family", "werner", "--settings", "xyz", "--d", "2")
    assert cp.returncode == 0, cp.stderr
    lines = cp.stdout.strip().splitlines()
    assert lines[0] == "p,value,status"
    assert lines[-1] == "threshold,0.666667"
    assert lines[1].startswith("0,") and lines[1].endswith(",entangled")


def test_sweep_bfp_threshold():
    cp = run_cli("sweep", "--family", "bfp", "--d", "4", "--steps", "3")
    assert cp.returncode == 0, cp.stderr
    assert cp.stdout.strip().splitlines()[-1] == "threshold,0.400000"


def test_sweep_werner_ccnr_threshold():
    cp = run_cli("sweep", "--family", "werner", "--criterion", "ccnr", "--settings", "xz")
    assert cp.returncode == 0, cp.stderr
    assert cp.stdout.strip().splitlines()[-1] == "threshold,0.500000"


def test_sweep_is_deterministic():
    a = run_cli("sweep", "--family", "werner", "--settings", "xz", "--d", "2", "--steps", "7")
    b = run_cli("sweep", "--family", "werner", "--settings", "xz", "--d", "2", "--steps", "7")
    assert a.returncode == 0 and a.stdout == b.stdout


def test_region_golden_small_grid():
    cp = run_cli("region", "--resolution", "4")
    assert cp.returncode == 0, cp.stderr
    lines = cp.stdout.strip().splitlines()
    assert lines[0] == "lambda1,lambda2,case1,case2,case3,case4,det_qubit,det_qutrit"
    assert len(lines) == 17
    assert lines[1] == "0,0,0,0,0,0,0,0"
    assert lines[8] == "0.33333333333333331,1,1,1,1,1,1,0"
    assert lines[16] == "1,1,1,1,1,1,1,1"
    # '.' decimal, no CR
    assert "," in cp.stdout and "\r" not in cp.stdout


def test_region_rejects_tiny_resolution():
    assert run_cli("region", "--resolution", "1").returncode == 2


def test_selftest_quick_subset():
    cp = run_cli(
        "selftest", "--quick", "--only", "example-reproduction", "--only", "separable-fitter"
    )
    assert cp.returncode == 0, cp.stderr
    assert cp.stdout == ""  # table goes to stderr
    assert "PASS" in cp.stderr
    assert "all 2 checks passed" in cp.stderr


def test_selftest_unknown_check_is_input_error():
    assert run_cli("selftest", "--only", "no-such-check").returncode == 2
