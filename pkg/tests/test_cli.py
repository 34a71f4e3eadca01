import csv
import json
import math
import subprocess
import sys

import pytest

from cellavg.cli import main


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    rows = list(csv.DictReader(lines[1:]))
    return header, rows


def test_simulate_constant_kernel(tmp_path):
    out = tmp_path / "run.csv"
    rc = main(["simulate", "--kernel", "constant", "--grid", "uniform", "--R", "10", "--cells", "64",
               "--ic", "exponential", "--t-end", "1", "--dt", "1e-3", "--cadence", "100",
               "--out", str(out)])
    assert rc == 0
    spec, rows = read_csv(out)
    assert spec["dt"] == 1e-3 and spec["cells"] == 64 and spec["dt_mode"] == "fixed"
    assert list(rows[0]) == ["t", "M0", "M1", "M2", "min_count"]
    assert float(rows[-1]["t"]) == 1.0
    assert float(rows[-1]["M0"]) == pytest.approx(2 / 3, rel=5e-3)
    assert len(rows) == 11
    _, cells = read_csv(tmp_path / "run.final.csv")
    assert list(cells[0]) == ["i", "x_i", "dx_i", "N_i", "n_i"]
    assert len(cells) == 64
    c = cells[5]
    assert float(c["n_i"]) == pytest.approx(float(c["N_i"]) / float(c["dx_i"]), rel=1e-15)


def test_simulate_t_end_zero(tmp_path):
    out = tmp_path / "z.csv"
    assert main(["simulate", "--t-end", "0", "--cells", "16", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert len(rows) == 1
    assert float(rows[0]["t"]) == 0
    assert float(rows[0]["M0"]) == pytest.approx(1 - math.exp(-10), abs=1e-12)


def test_simulate_deterministic_and_full_precision(tmp_path):
    args = ["simulate", "--kernel", "sum", "--kernel-param", "0.5", "--cells", "24",
            "--t-end", "0.3", "--dt", "auto"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.final.csv").read_bytes() == (tmp_path / "b.final.csv").read_bytes()
    spec, rows = read_csv(tmp_path / "a.csv")
    assert spec["dt_mode"] == "auto" and spec["dt_safety"] == 0.1
    m1 = rows[-1]["M1"]
    assert float(repr(float(m1))) == float(m1) and len(m1.replace(".", "").lstrip("0")) >= 15


def test_simulate_json(tmp_path):
    out = tmp_path / "r.json"
    assert main(["simulate", "--grid", "geometric", "--ratio", "1.3", "--cells", "20",
                 "--t-end", "0.2", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["spec"]["grid"] == "geometric" and doc["spec"]["ratio"] == 1.3
    assert set(doc["timeseries"][0]) == {"t", "M0", "M1", "M2", "min_count"}
    cells = json.loads((tmp_path / "r.final.json").read_text())["cells"]
    assert len(cells) == 20


@pytest.mark.parametrize("extra", [
    ["--kernel", "brownian"],
    ["--grid", "geometric"],  # no ratio
    ["--grid", "geometric", "--ratio", "0.9"],
    ["--cells", "0"],
    ["--R", "-1"],
    ["--dt", "fast"],
    ["--dt", "-0.1"],
    ["--cadence", "0"],
    ["--t-end", "-1"],
])
def test_simulate_usage_errors(tmp_path, extra, capsys):
    out = tmp_path / "x.csv"
    with pytest.raises(SystemExit) as e:
        sys.exit(main(["simulate", "--out", str(out)] + extra))
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_converge_levels_too_few(tmp_path):
    assert main(["converge", "--levels", "1", "--out", str(tmp_path / "c.csv")]) == 2
    assert main(["converge", "--kernel", "sum", "--out", str(tmp_path / "c.csv")]) == 2
    assert list(tmp_path.iterdir()) == []


def test_integration_failure_exit_1(tmp_path, capsys):
    # product kernel far past gelation with a huge step blows up
    rc = main(["simulate", "--kernel", "product", "--kernel-param", "50", "--cells", "32",
               "--t-end", "5", "--dt", "1", "--out", str(tmp_path / "p.csv")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "t=" in err and "cell" in err


def test_converge_uniform(tmp_path, capsys):
    out = tmp_path / "c.csv"
    rc = main(["converge", "--grid", "uniform", "--R", "10", "--cells", "32", "--levels", "4",
               "--t-end", "0.5", "--out", str(out)])
    assert rc == 0
    spec, rows = read_csv(out)
    assert spec["levels"] == 4 and spec["reference"] == "truncated"
    assert [int(r["I"]) for r in rows] == [32, 64, 128, 256]
    assert rows[0]["eoc"] == ""
    last = float(rows[-1]["eoc"])
    assert 1.7 <= last <= 2.3
    printed = capsys.readouterr().out.split()
    assert printed[0] == "eoc" and float(printed[-1]) == last


def test_converge_geometric_json(tmp_path, capsys):
    out = tmp_path / "g.json"
    r = (10 / 1e-2) ** (1 / 30)
    rc = main(["converge", "--grid", "geometric", "--R", "10", "--cells", "30", "--ratio", repr(r),
               "--levels", "4", "--t-end", "0.5", "--format", "json", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert [lv["I"] for lv in doc["levels"]] == [30, 60, 120, 240]
    assert 0.75 <= doc["levels"][-1]["eoc"] <= 1.25


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    p = subprocess.run([sys.executable, "-m", "cellavg", "simulate", "--cells", "8", "--t-end", "0.1",
                        "--out", str(out)], capture_output=True, text=True)
    assert p.returncode == 0, p.stderr
    assert out.exists()
    p = subprocess.run([sys.executable, "-m", "cellavg", "bogus"], capture_output=True, text=True)
    assert p.returncode == 2
