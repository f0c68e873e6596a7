import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from levynoise import io as rio
from levynoise.basis import build_jump_basis
from levynoise.chaos import ChaosExpansion
from levynoise.cli import run
from levynoise.multiindex import MultiIndex

PAIR = '{"type": "atoms", "atoms": [{"z": -1, "w": 1}, {"z": 1, "w": 1}]}'


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_fmt_round_trips_floats():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(rio.fmt(v)) == v
    assert rio.fmt(None) == "" and rio.fmt(np.int64(3)) == "3" and rio.fmt(True) == "true"


def test_write_json_nulls_non_finite():
    buf = io.StringIO()
    rio.write_json(buf, {"b": math.inf, "a": [np.float64(1.5), math.nan]})
    assert json.loads(buf.getvalue()) == {"a": [1.5, None], "b": None}
    assert buf.getvalue().index('"a"') < buf.getvalue().index('"b"')


def test_chaos_and_basis_rows(pair):
    F = ChaosExpansion({MultiIndex([0, 2]): 1.5})
    assert rio.chaos_rows(F, 1.0) == [("[0,2]", 1.5, 2, MultiIndex([0, 2]).index(), MultiIndex([0, 2]).weight(1.0))]
    header, rows = rio.basis_rows(build_jump_basis(pair, 2), pair)
    assert header == ["m", "degree", "c0", "c1", "c2", "gram_residual"]
    assert rows[0][:4] == (1, 1, 0.0, pytest.approx(1 / math.sqrt(2)))


def test_basis_command(tmp_path):
    out = tmp_path / "b.csv"
    assert run(["basis", "--measure", PAIR, "--M", "3", "--out", str(out)]) == 0
    rows = read_csv(out)
    # the pair measure supports only two orthogonal polynomials
    assert len(rows) == 2
    assert all(float(r["gram_residual"]) < 1e-12 for r in rows)


def test_sample_reruns_are_byte_identical(tmp_path):
    args = ["sample", "--measure", PAIR, "--dim", "2", "--seed", "5", "--n", "30", "--box", "2,1"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    ra, rb = tmp_path / "ra.csv", tmp_path / "rb.csv"
    assert run(args + ["--out", str(a), "--report", str(ra)]) == 0
    assert run(args + ["--out", str(b), "--report", str(rb)]) == 0
    assert a.read_bytes() == b.read_bytes() and ra.read_bytes() == rb.read_bytes()
    rows = read_csv(a)
    assert set(rows[0]) == {"sample", "x1", "x2", "z"}
    assert all(0 <= float(r["x1"]) <= 2 for r in rows)
    report = read_csv(ra)
    assert report[0]["quantity"] == "mean point count" and float(report[0]["theory"]) == 4.0


def test_solve_command(tmp_path):
    out, summ = tmp_path / "s.csv", tmp_path / "s.json"
    args = ["solve", "--domain", "interval", "--measure", PAIR, "--x", "0.5", "--K", "12"]
    assert run(args + ["--out", str(out), "--summary", str(summ), "--mc-samples", "2000", "--seed", "3"]) == 0
    rows = read_csv(out)
    assert [int(r["k"]) for r in rows] == list(range(1, 13))
    assert int(rows[2]["cantor_index"]) == 4  # z(3, 1)
    s = json.loads(summ.read_text())
    assert s["variance_exact"] == pytest.approx(2 / 48)
    assert s["variance_partial"] == pytest.approx(float(rows[-1]["partial_variance"]))
    assert s["mc_se"] > 0 and s["seed"] == 3


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"measure": json.loads(PAIR), "n-max": 2}))
    out = tmp_path / "m.csv"
    assert run(["--config", str(cfg), "moments", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 2
    assert run(["--config", str(cfg), "moments", "--n-max", "3", "--out", str(out)]) == 0
    rows = read_csv(out)
    # pair measure, unit box: <omega, 1> ~ Poisson(2), M_3 = 2 + 3*4 + 8
    assert float(rows[2]["theory"]) == pytest.approx(22.0)


def test_divergence_command(tmp_path):
    out = tmp_path / "d.csv"
    assert run(["divergence", "--dim", "3", "--deltas", "0.5,0.25", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [float(r["delta"]) for r in rows] == [0.5, 0.25]
    assert float(rows[1]["I_delta"]) > float(rows[0]["I_delta"])


def test_errors_become_json_records(capsys):
    assert run(["sample", "--measure", PAIR, "--n", "3"]) == 1
    rec = json.loads(capsys.readouterr().err.strip())
    assert rec["command"] == "sample" and "seed" in rec["message"]
    assert run(["solve", "--measure", '{"type": "atoms", "atoms": [{"z": 0, "w": 1}]}']) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "MeasureError"
    assert run(["solve", "--domain", "hypercube", "--dim", "4", "--measure", PAIR, "--mc-samples", "5",
                "--seed", "1", "--K", "2"]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "DivergenceError"


def test_unknown_subcommand_exits_nonzero():
    proc = subprocess.run([sys.executable, "-m", "levynoise.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode != 0
    assert "usage" in proc.stderr


def test_verify_basis_suite(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert run(["verify", "--suite", "basis", "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("[PASS] criterion  1")
    assert read_csv(out)
