"""Command-line interface: outputs, exit codes and determinism."""

import json
import math

import pytest

from coneheat.cli import run


def _csv(text):
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, v = line[2:].split(": ", 1)
            meta[k] = v
        elif line:
            body.append(line.split(","))
    return meta, body[0], body[1:]


def test_eval_plane_value(capsys):
    assert run(["eval", "--beta", "1", "--m", "0", "--x", "1,0", "--y", "1,0", "--t", "1"]) == 0
    meta, cols, rows = _csv(capsys.readouterr().out)
    assert meta["command"] == "eval" and meta["passed"] == "1"
    value = float(rows[0][cols.index("value")])
    # beta = 1 plane kernel at d = 0, t = 1
    assert value == pytest.approx(1.0 / (4 * math.pi), rel=1e-14)


def test_eval_metadata_records_settings(capsys):
    assert run(["eval", "--beta", "0.8", "--x", "1,0", "--y", "1.2,0.4", "--t", "0.5", "--seed", "7"]) == 0
    meta, _, _ = _csv(capsys.readouterr().out)
    assert meta["beta"] == "0.80000000000000004"
    assert meta["seed"] == "7"
    assert meta["abs_tol"] == "default"


def test_e_decay_integer_inverse_is_zero(capsys):
    assert run(["e-decay", "--beta", "0.5", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    sup = doc["columns"].index("sup")
    assert all(row[sup] == 0.0 for row in doc["rows"])
    assert doc["metadata"]["passed"] is True


def test_compare_reps_small(capsys):
    assert run(["compare-reps", "--beta", "0.8", "--samples", "10"]) == 0
    _, cols, rows = _csv(capsys.readouterr().out)
    assert len(rows) >= 1


def test_weber_gap(capsys):
    assert run(["weber"]) == 0
    _, cols, rows = _csv(capsys.readouterr().out)
    assert float(rows[0][cols.index("gap")]) < 1e-10


def test_green_r4(capsys):
    assert run(["green", "--beta", "1", "--m", "2", "--x", "1,0,0,0", "--y", "1,0,1,0"]) == 0
    _, cols, rows = _csv(capsys.readouterr().out)
    assert float(rows[0][cols.index("value")]) == pytest.approx(1.0 / (4 * math.pi ** 2), rel=1e-9)


def test_json_mirrors_csv(capsys):
    args = ["eval", "--beta", "0.7", "--x", "0.9,0.3", "--y", "1.1,2.0", "--t", "0.4"]
    run(args)
    _, cols, rows = _csv(capsys.readouterr().out)
    run(args + ["--format", "json"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["columns"] == cols
    assert [float(v) for v in rows[0][:2]] == doc["rows"][0][:2]


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["compare-reps", "--beta", "0.7", "--samples", "8", "--seed", "3"]
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_failed_gate_exits_one(capsys):
    assert run(["delta", "--ts", "0.8,0.6,0.4"]) == 1
    assert "gate failed" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["no-such-command"],
    ["eval", "--beta", "1.5", "--x", "1,0", "--y", "1,0", "--t", "1"],
    ["eval", "--x", "1", "--y", "1,0", "--t", "1"],
    ["eval", "--x", "1,0", "--y", "1,0", "--t", "-1"],
    ["eval", "--m", "1", "--x", "1,0", "--y", "1,0", "--t", "1"],
])
def test_usage_errors_exit_two(argv, capsys):
    assert run(argv) == 2
