import json
import subprocess
import sys

import pytest

from avmac.cli import main


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_adder3(capsys):
    code, out, _ = run(["analyze", "--builtin", "adder3", "--json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert all(v["symmetrizable"] for v in doc["symmetrizability"].values())


def test_analyze_ahlswede_cai(capsys):
    code, out, _ = run(["analyze", "--builtin", "ahlswede-cai", "--json"], capsys)
    doc = json.loads(out)
    verdicts = {k: v["symmetrizable"] for k, v in doc["symmetrizability"].items()}
    assert code == 0 and sorted(verdicts.values()) == [False, False, True]


def test_analyze_bsmac_case_b(capsys):
    code, out, _ = run(["analyze", "--builtin", "bsmac", "--gamma1", "0.05", "--json"], capsys)
    assert code == 0 and json.loads(out)["case"] == "B"


def test_region_random_prints_csv(capsys):
    code, out, _ = run(["region", "--builtin", "bsmac", "--mode", "random"], capsys)
    assert code == 0
    lines = [ln for ln in out.splitlines() if ln and not ln.startswith("#")]
    i = lines.index("r1,r2")
    r1, r2 = map(float, lines[i + 1].split(","))
    assert r1 == pytest.approx(0.531, abs=1e-3) and r2 == 0.0


def test_region_all_writes_three_nested_files(tmp_path, capsys):
    out = tmp_path / "reg.csv"
    code, _, _ = run(["region", "--builtin", "bsmac", "--gamma1", "0.05", "--mode", "all",
                      "-o", str(out)], capsys)
    assert code == 0
    for mode in ("random", "divided", "deterministic"):
        meta = json.loads((tmp_path / f"reg_{mode}.json").read_text())
        assert meta["nesting_verified"] is True
        assert (tmp_path / f"reg_{mode}.csv").read_text().startswith("r1,r2\n")


def test_region_exports_are_byte_identical(tmp_path, capsys):
    paths = []
    for k in range(2):
        p = tmp_path / f"r{k}.csv"
        assert run(["region", "--builtin", "erasure", "--mode", "deterministic", "-o", str(p)],
                   capsys)[0] == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    m0 = paths[0].with_suffix(".json").read_text()
    assert m0 == paths[1].with_suffix(".json").read_text()


def test_simulate_symmetrizing_attack(tmp_path, capsys):
    out = tmp_path / "sim.json"
    code, _, _ = run(["simulate", "--builtin", "adder3", "--n", "6", "--trials", "400",
                      "--json", "-o", str(out)], capsys)
    doc = json.loads(out.read_text())
    assert code == 0 and doc["reports"]["deterministic"]["estimate"] >= 0.20
    assert doc["scenario"]["n"] == 6 and doc["reports"]["deterministic"]["state_audit_ok"]


def test_simulate_is_reproducible(tmp_path, capsys):
    args = ["simulate", "--builtin", "ahlswede-cai", "--decoder", "ml", "--trials", "200",
            "--compare-permutation", "--json"]
    a = run(args + ["-o", str(tmp_path / "a.json")], capsys)
    b = run(args + ["-o", str(tmp_path / "b.json")], capsys)
    assert a[0] == b[0] == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_simulate_benign_noiseless(capsys):
    code, out, _ = run(["simulate", "--builtin", "bsmac", "--n", "8", "--strategy", "iid",
                        "--q", "1,0,0,0", "--max-pair-info", "1e-9", "--trials", "100",
                        "--json"], capsys)
    assert code == 0 and json.loads(out)["reports"]["deterministic"]["errors"] == 0


def test_oracle_check_passes(capsys):
    code, out, _ = run(["oracle-check", "--builtin", "erasure"], capsys)
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(["oracle-check", "--builtin", "bsmac", "--gamma1", "0.05"], capsys)
    assert code == 0 and "FAIL" not in out


def test_oracle_failure_exit_code(capsys):
    code, out, _ = run(["oracle-check", "--builtin", "bsmac", "--gamma1", "0.3", "--lambda", "0.2",
                        "--tol-rate", "0", "--tol-threshold", "0"], capsys)
    assert code == 2 and "FAIL" in out


def test_usage_errors(tmp_path, capsys):
    assert run(["analyze"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1
    assert run(["analyze", "--builtin", "adder3", "--p1", "a,b"], capsys)[0] == 1
    assert run(["analyze", "--spec", str(tmp_path / "missing.json")], capsys)[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"sizes": [1, 1, 1, 1],\n "W": [[0.5]]}')
    code, _, err = run(["analyze", "--spec", str(bad)], capsys)
    assert code == 1 and "line" in err


def test_numerical_failure_exit_code(capsys):
    code, _, err = run(["simulate", "--builtin", "gaussian", "--n", "8", "--trials", "2"], capsys)
    assert code == 3 and "cap" in err


def test_export_spec_round_trip(tmp_path, capsys):
    p = tmp_path / "ah.json"
    assert run(["analyze", "--builtin", "ahlswede-cai", "--export-spec", str(p)], capsys)[0] == 0
    code, out, _ = run(["analyze", "--spec", str(p), "--json"], capsys)
    assert code == 0 and json.loads(out)["symmetrizability"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "avmac", "oracle-check", "--builtin", "adder2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "PASS" in r.stdout
