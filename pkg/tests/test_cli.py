import csv
import io
import json
import subprocess
import sys

import pytest

from asepconvoy.cli import main, run_selftest
from asepconvoy.genocchi import parse_poly, q_genocchi


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_genocchi_rows(capsys):
    rc, out, _ = run(capsys, "genocchi", "--n", "4")
    assert rc == 0
    assert out.splitlines()[-1] == "14,36,45,35,18,6,1"
    rc, out, _ = run(capsys, "genocchi", "--n", "0")
    assert out == "1\n"


def test_genocchi_json_roundtrip(capsys):
    rc, out, _ = run(capsys, "genocchi", "--n", "6", "--format", "json")
    doc = json.loads(out)
    for entry in doc["polys"]:
        p = q_genocchi(entry["n"])
        assert parse_poly(entry["text"]) == p
        assert entry["coefficients"] == p.coefficients()


def test_genocchi_budget(capsys):
    rc, _, err = run(capsys, "genocchi", "--n", "41")
    assert rc == 3 and "budget" in err


def test_convoy_exact_match(capsys):
    rc, out, _ = run(capsys, "convoy-exact", "--n", "2", "--q", "1/2", "--x", "1/2")
    assert rc == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["method", "value"]
    assert rows[1] == ["dp", "31/128"] and rows[2] == ["genocchi", "31/128"]
    assert rows[3] == ["status", "MATCH"]


def test_convoy_exact_float_inputs(capsys):
    rc, out, _ = run(capsys, "convoy-exact", "--n", "20", "--q", "0.3", "--x", "0.4")
    assert rc == 0 and out.strip().endswith("status,MATCH")


def test_csv_json_same_numbers(capsys):
    _, c, _ = run(capsys, "convoy-exact", "--n", "7", "--q", "1/3", "--x", "1/4")
    _, j, _ = run(capsys, "convoy-exact", "--n", "7", "--q", "1/3", "--x", "1/4", "--format", "json")
    rows = list(csv.reader(io.StringIO(c)))
    doc = json.loads(j)
    assert doc["columns"] == rows[0]
    assert [list(map(str, r)) for r in doc["rows"]] == rows[1:]

    _, c, _ = run(capsys, "convoy-mc", "--n", "50", "--q", "0.5", "--x", "0.5", "--reps", "300")
    _, j, _ = run(capsys, "convoy-mc", "--n", "50", "--q", "0.5", "--x", "0.5", "--reps", "300",
                  "--format", "json")
    kv = dict(csv.reader(io.StringIO(c)))
    doc = json.loads(j)
    assert float(kv["mean"]) == doc["mean"]
    assert float(kv["stderr"]) == doc["stderr"]
    for h in doc["histogram"]:
        assert int(kv[f"freq[{h['count']}]"]) == h["freq"]


def test_deterministic_output_files(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for f in (a, b):
        assert main(["convoy-mc", "--n", "200", "--q", "0.9", "--x", "0.3", "--reps", "200",
                     "--seed", "7", "--out", str(f)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_usage_errors(capsys):
    assert run(capsys, "convoy-exact", "--n", "2", "--q", "2", "--x", "1/2")[0] == 2
    assert run(capsys, "convoy-exact", "--n", "2")[0] == 2
    assert run(capsys, "weak-limit", "--q", "0.5")[0] == 2
    assert run(capsys, "convoy-exact", "--n", "2", "--q", "0.5", "--x", "0.5", "--exact")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == 2
    capsys.readouterr()


def test_km_verify(capsys):
    rc, out, _ = run(capsys, "km-verify", "--n", "30", "--q", "0.7", "--x", "0.3", "--K", "5")
    assert rc == 0
    last = out.strip().splitlines()[-1].split(",")
    assert last[0] == "max" and float(last[1]) < 1e-8


def test_universality_small(capsys):
    rc, out, _ = run(capsys, "universality", "--n", "400", "--reps", "400", "--qs", "0,0.5",
                     "--format", "json")
    doc = json.loads(out)
    assert [r[0] for r in doc["rows"]] == [0.0, 0.5]
    assert doc["meta"]["target"] == pytest.approx(0.5641895835, rel=1e-9)


def test_weak_limit_and_grid(tmp_path, capsys):
    g = tmp_path / "grid.csv"
    rc, out, _ = run(capsys, "weak-limit", "--gamma", "8", "--grid", str(g))
    assert rc == 0
    kv = dict(list(csv.reader(io.StringIO(out)))[1:])
    assert abs(float(kv["gap"]) - 0.5378) < 1e-3
    lines = g.read_text().splitlines()
    assert lines[0] == "abscissa,value,err"
    assert len(lines) > 50


def test_asep_demo(capsys):
    rc, out, _ = run(capsys, "asep-demo", "--T", "30", "--reps", "10", "--q", "0.5")
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "replicate,position,speed" and len(lines) == 11
    rc, out, _ = run(capsys, "asep-demo", "--T", "30", "--reps", "10", "--q", "0.5", "--format", "json")
    doc = json.loads(out)
    assert [r[1] for r in doc["rows"]] == [int(l.split(",")[1]) for l in lines[1:]]


def test_selftest(capsys):
    assert all(ok for _, ok in run_selftest())
    rc, out, _ = run(capsys, "selftest")
    assert rc == 0 and "false" not in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "asepconvoy", "genocchi", "--n", "2"],
                       capture_output=True, text=True, check=True)
    assert r.stdout == "1\n1\n2,1\n"


def test_selftest_failure_exit_code(capsys, monkeypatch):
    import asepconvoy.cli as cli
    monkeypatch.setattr(cli, "run_selftest", lambda: [("broken", False)])
    rc, out, _ = run(capsys, "selftest")
    assert rc == 1 and "broken,false" in out
