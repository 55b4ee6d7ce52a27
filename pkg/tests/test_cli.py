import csv
import io
import json
import subprocess
import sys

import pytest

from qdlab import cli


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_qd_witness(capsys):
    code, out, _ = run(["qd-witness", "--N", "50", "--R", "1", "--strict"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["norm_comm_a"] - rep["norm_comm_b"]) <= 1e-8
    assert rep["N"] == 50 and rep["R"] == 1


def test_ps_bounds_csv(capsys):
    code, out, _ = run(["ps-bounds", "--d", "2", "--p-grid", "2:32:1", "--strict"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["d", "p", "q", "qd_upper", "cb_upper"]
    assert len(rows) == 31
    qd = [float(r["qd_upper"]) for r in rows]
    assert all(y < x for x, y in zip(qd, qd[1:]))
    assert rows[0]["q"] == "inf"


def test_table_audit_corrected(capsys):
    code, out, _ = run(["table-audit", "--N", "32", "--R", "1", "--tables", "12", "--errata", "--strict"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["max_abs_discrepancy"] <= 1e-10
    for key in ("N", "R", "table", "max_abs_discrepancy", "missing_nonzero",
                "coverage_gaps", "case_cover_ok", "adjacency_ok"):
        assert key in rep


def test_table_audit_printed_strict_fails(capsys):
    code, out, err = run(["table-audit", "--N", "32", "--R", "1", "--tables", "12", "--strict"], capsys)
    assert code == 3
    assert json.loads(out)["max_abs_discrepancy"] > 1e-10
    assert "strict" in err


def test_table_audit_conjugation_fields(capsys):
    code, out, _ = run(["table-audit", "--N", "8", "--R", "1", "--tables", "34"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["conjugation_route_identical"] is True
    assert rep["conjugation_gram_gap"] <= 1e-12


@pytest.mark.parametrize(
    "argv",
    [
        ["qd-witness", "--N", "1", "--R", "1"],
        ["qd-witness", "--N", "ten", "--R", "1"],
        ["qd-witness", "--N", "10"],
        ["table-audit", "--N", "5", "--R", "1"],
        ["ps-bounds", "--p-grid", "1:3:1"],
        ["ps-bounds", "--p-grid", "x"],
        ["haagerup-check", "--r-grid", "1.5"],
        ["no-such-command"],
        ["qd-witness", "--N", "8", "--R", "1", "--bogus"],
    ],
)
def test_validation_errors_exit_2(argv, capsys):
    code, _, _ = run(argv, capsys)
    assert code == 2


def test_unwritable_output(tmp_path, capsys):
    target = tmp_path / "missing" / "out.json"
    code, _, _ = run(["ps-bounds", "--p-grid", "2:3:1", "--output", str(target)], capsys)
    assert code == 2


def test_output_file_is_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["optimize", "--K", "8", "--maxiter", "15", "-o", str(p)], capsys)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rep = json.loads(paths[0].read_text())
    assert rep["value"] <= rep["baseline_value"]


def test_shift_demo_and_haagerup(capsys):
    code, out, _ = run(["shift-demo", "--trials", "10", "--strict"], capsys)
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = run(["haagerup-check", "--R", "2", "--strict"], capsys)
    assert code == 0
    assert len(json.loads(out)["results"]) == 9


def test_float_format():
    assert cli.format_float(0.1) == "0.10000000000000001"
    assert cli.dumps({"x": [1, 0.5, None, True]}) == '{\n  "x": [\n    1,\n    0.5,\n    null,\n    true\n  ]\n}'
    assert json.loads(cli.dumps({"v": 2 / 3}))["v"] == 2 / 3


def test_sweep_ordered_by_parameter(monkeypatch, capsys):
    monkeypatch.setenv("QDLAB_THREADS", "2")
    code, out, _ = run(["sweep", "--N-grid", "16,8,12", "--R", "1"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert [r["N"] for r in rep["results"]] == [8, 12, 16]
    monkeypatch.setenv("QDLAB_THREADS", "1")
    code, out1, _ = run(["sweep", "--N-grid", "16,8,12", "--R", "1"], capsys)
    assert out1 == out


def test_bad_thread_count(monkeypatch, capsys):
    monkeypatch.setenv("QDLAB_THREADS", "0")
    code, _, _ = run(["sweep", "--N-grid", "8"], capsys)
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qdlab", "ps-bounds", "--p-grid", "2:4:1"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.splitlines()[0] == "d,p,q,qd_upper,cb_upper"
