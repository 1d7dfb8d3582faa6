import json

import pytest

from rspin.cli import main


def test_correlator_both_pipelines(capsys):
    assert main(["correlator", "--r", "3", "--g", "1", "--ins", "1:1", "--k", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("1/2  (pipeline A")
    assert out[1].startswith("1/2  (pipeline B")


def test_correlator_gate_failure(capsys):
    assert main(["correlator", "--r", "2", "--g", "1", "--ins", "0:1", "--k", "2", "--pipeline", "A"]) == 0
    assert capsys.readouterr().out.strip() == "0 (dimension gate)"


def test_correlator_usage_errors(capsys):
    assert main(["correlator", "--r", "3", "--ins", "3:0", "--k", "1"]) == 2
    with pytest.raises(SystemExit) as err:
        main(["correlator", "--r", "1", "--k", "1"])
    assert err.value.code == 2
    with pytest.raises(SystemExit):
        main(["correlator", "--r", "2", "--ins", "zero", "--k", "1"])


def test_correlator_above_weight(capsys):
    assert main(["correlator", "--r", "2", "--ins", "0:3", "--k", "1", "--weight", "4"]) == 1


def test_potential_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["potential", "--r", "2", "--g", "0", "--weight", "7", "--format", "csv", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "sector,g,ins,k,value"
    assert main(["potential", "--r", "2", "--g", "1", "--weight", "0"]) == 0
    assert json.loads(capsys.readouterr().out) == []


def test_operator_dump(capsys):
    assert main(["operator", "--r", "2", "--weight", "4"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out["L"]) == {"0"} and "2" in out["residues"]


def test_verify_with_report(tmp_path, capsys):
    report = tmp_path / "report.json"
    assert main(["verify", "--r", "2", "--weight", "6", "--report", str(report), "--no-timings"]) == 0
    records = json.loads(report.read_text())
    assert records and all(r["status"] == "pass" for r in records)
    assert "all checks passed" in capsys.readouterr().out


def test_verify_fault_injection(capsys):
    assert main(["verify", "--r", "2", "--weight", "6", "--fault-inject", "flow"]) == 1
    assert "FAIL" in capsys.readouterr().out
