import csv
import json
import subprocess
import sys

import pytest

from wiretap_diamond import cli
from wiretap_diamond.schemes import dof_formula

SIM = ["simulate", "--scheme", "sbcj-snc", "--M", "3", "--N", "2", "--P", "1e6,1e8", "--trials", "20",
       "--seed", "4"]


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_simulate_is_byte_identical(tmp_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert cli.main(SIM + ["--out", str(a)]) == 0
    assert cli.main(SIM + ["--out", str(b)]) == 0
    assert cli.main(SIM + ["--workers", "3", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = _read(a)
    assert [r["P"] for r in rows] == ["1000000", "100000000"]
    assert {r["scheme"] for r in rows} == {"sbcj-snc"}


def test_simulate_flags(tmp_path):
    out = tmp_path / "o.csv"
    argv = ["simulate", "--scheme", "sbcj", "--M", "3", "--N", "2", "--P", "1e6", "--trials", "5",
            "--known-T", "1", "--no-freeze-plan", "--noiseless", "--epsilon", "0.3", "--B", "1.5",
            "--out", str(out)]
    assert cli.main(argv) == 0
    row = _read(out)[0]
    assert row["p_e_dest"] == "0" and row["epsilon"] == "0.3" and row["B"] == "1.5"


def test_config_file_overridden_by_flags(tmp_path):
    conf = tmp_path / "run.json"
    out = tmp_path / "o.csv"
    conf.write_text(json.dumps({"scheme": "scoj", "M": 2, "N": 2, "P": [1e6, 1e8], "trials": 7,
                                "seed": 1, "out": str(out)}))
    assert cli.main(["simulate", "--config", str(conf)]) == 0
    assert [r["trials"] for r in _read(out)] == ["7", "7"]
    assert cli.main(["simulate", "--config", str(conf), "--trials", "3"]) == 0
    assert [r["trials"] for r in _read(out)] == ["3", "3"]


def test_config_errors(tmp_path):
    conf = tmp_path / "bad.json"
    conf.write_text(json.dumps({"scheme": "scoj", "colour": "red"}))
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--config", str(conf)])
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--scheme", "scoj", "--M", "2"])


def test_invalid_config_reports_error(tmp_path, capsys):
    argv = ["simulate", "--scheme", "scoj", "--M", "3", "--N", "1", "--P", "1e6", "--out", str(tmp_path / "x")]
    assert cli.main(argv) == 2
    assert "N >= 2" in capsys.readouterr().err


def test_dof_curve(tmp_path):
    out = tmp_path / "d.csv"
    assert cli.main(["dof-curve", "--M", "3", "--N", "2", "--alpha-grid", "7", "--alpha-max", "1.5",
                     "--out", str(out)]) == 0
    rows = _read(out)
    assert list(rows[0]) == ["M", "N", "alpha", "d_s"] and len(rows) == 7
    for r in rows:
        assert float(r["d_s"]) == pytest.approx(dof_formula(3, 2, float(r["alpha"])), abs=1e-12)
    assert cli.main(["dof-curve", "--M", "3", "--N", "1", "--out", str(out)]) == 0
    rows = _read(out)
    assert len(rows) == 101 and float(rows[-1]["d_s"]) == pytest.approx(2 / 3)


@pytest.mark.parametrize("suite", ["mds", "mi", "roundtrip", "cancel"])
def test_verify_suites_pass(suite, capsys):
    assert cli.main(["verify", "--suite", suite]) == 0
    out = capsys.readouterr().out
    assert out and "FAIL" not in out


def test_verify_reports_failure(monkeypatch, capsys):
    monkeypatch.setitem(cli.SUITES, "mds", lambda: [("broken", False, "forced")])
    assert cli.main(["verify", "--suite", "mds"]) == 1
    assert "FAIL  broken" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    out = tmp_path / "e.csv"
    cmd = [sys.executable, "-m", "wiretap_diamond.cli", "dof-curve", "--M", "2", "--N", "2", "--alpha-grid", "3",
           "--out", str(out)]
    assert subprocess.run(cmd, capture_output=True).returncode == 0
    assert len(_read(out)) == 3
