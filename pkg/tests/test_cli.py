import json
import subprocess
import sys

import pytest

from theta_powers.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def doc_of(capsys, *argv):
    code, out, err = call(capsys, *argv)
    return code, json.loads(out) if out else None, err


def test_gap_example(capsys):
    code, d, _ = doc_of(capsys, "gap", "2", "103")
    assert code == 0
    o = d["outputs"]
    assert (o["u"], o["v"]) == (2, 10)
    assert o["value"]["lo"] == o["value"]["hi"] and float(o["value"]["mid"]) == 104
    assert float(o["slack"]["hi"]) <= 9.01
    assert d["verdict"] == "LE"
    for key in ("schema_version", "command", "inputs", "outputs", "verdict", "precision", "fallback", "wall_time_s"):
        assert key in d
    assert d["inputs"] == {"command": "gap", "theta": "2", "x": "103"}


def test_approx_single_example(capsys):
    code, d, _ = doc_of(capsys, "approx-single", "0.5", "0.5", "100")
    assert code == 0 and d["outputs"]["a"] == 91
    assert abs(float(d["outputs"]["dist"]["mid"]) - 0.03939) < 1e-5


def test_make_theta_example(capsys):
    code, d, _ = doc_of(capsys, "make-theta", "exp_decay", "1", "2", "1")
    assert code == 0 and d["outputs"]["seq"] == ["2", "24"]


def test_interval_fields_are_strings(capsys):
    _, d, _ = doc_of(capsys, "approx", "3", "2", "1/3", "4096")

    def walk(v):
        if isinstance(v, dict):
            if set(v) == {"lo", "hi", "mid"}:
                assert all(isinstance(x, str) for x in v.values())
            for x in v.values():
                walk(x)
        elif isinstance(v, list):
            for x in v:
                walk(x)
        else:
            assert not isinstance(v, float)

    walk(d)


def test_verify_theta_round_trip(capsys, tmp_path):
    f = tmp_path / "theta.json"
    code, _, _ = call(capsys, "make-theta", "exp_decay", "1", "2", "2", "--precision", "512", "--output", str(f))
    assert code == 0
    for h in (0, 1):
        code, d, _ = doc_of(capsys, "verify-theta", str(f), str(h), "--precision", "512")
        assert code == 0 and d["verdict"] == "pass" and d["outputs"]["positive"]
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps(json.loads(f.read_text())["outputs"]["theta_seq"]))
    code, d, _ = doc_of(capsys, "verify-theta", str(bare), "0")
    assert code == 0
    code, _, err = call(capsys, "verify-theta", str(f), "2")
    assert code == 3 and json.loads(err)["error"] == "usage"


@pytest.mark.parametrize("argv", [
    ["gap", "3/2", "500"],
    ["approx", "2", "2", "0.5", "300"],
    ["two-powers", "1.2", "0.3", "50"],
    ["count", "0.5", "2", "const 1", "30"],
    ["oracle", "sum", "1", "2", "0.5", "10"],
    ["make-theta", "power 1", "1", "2", "3"],
])
def test_rerun_is_bit_identical(capsys, argv):
    _, a, _ = doc_of(capsys, *argv)
    _, b, _ = doc_of(capsys, *a["argv"])
    a.pop("wall_time_s")
    b.pop("wall_time_s")
    assert a == b


def test_exit_codes(capsys):
    assert call(capsys, "gap", "2", "103")[0] == 0
    # the frozen two-power constant is exceeded here, so the verdict is GT
    assert call(capsys, "two-powers", "0.8", "1/3", "1000")[0] == 1
    assert call(capsys, "nonsense")[0] == 3
    assert call(capsys, "gap", "2")[0] == 3
    assert call(capsys, "oracle", "sum", "3", "2", "0.5", "1000", "--enum-cap", "100")[0] == 3
    assert call(capsys, "gap", "2", "103", "--precision", "8")[0] == 3
    assert call(capsys, "count", "1.5", "1", "bogus", "10")[0] == 3
    assert call(capsys, "--help")[0] == 0


def test_undecided_exit(capsys):
    # the threshold sits 1e-14 away from ||sqrt 2||, out of reach at 32 bits
    argv = ["count", "0.5", "1", "const 0.82842712474619", "2"]
    code, d, _ = doc_of(capsys, *argv, "--precision", "32", "--precision-cap", "32")
    assert code == 2 and d["verdict"] == "UNDECIDED"
    assert d["outputs"]["undecided"][0]["omega"] == [2]
    code, d, _ = doc_of(capsys, *argv, "--precision", "64")
    assert code == 0 and not d["outputs"]["undecided"]


def test_env_precision(capsys, monkeypatch):
    monkeypatch.setenv("THETA_POWERS_PRECISION", "300")
    _, d, _ = doc_of(capsys, "gap", "2", "103")
    assert d["precision"] == 300
    _, d, _ = doc_of(capsys, "gap", "2", "103", "--precision", "200")
    assert d["precision"] == 200


def test_tsv_rows(capsys):
    code, out, _ = call(capsys, "sweep", "psi", "1/2", "5/2", "4", "--format", "tsv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].split("\t") == ["theta", "regime", "psi"]
    assert lines[1].split("\t") == ["1/2", "SUB1", "-2"]
    assert len(lines) == 6


def test_tsv_key_values(capsys):
    code, out, _ = call(capsys, "gap", "2", "103", "--format", "tsv")
    kv = dict(line.split("\t", 1) for line in out.strip().splitlines())
    assert kv["outputs.u"] == "2" and kv["verdict"] == "LE"


def test_sweep_gamma(capsys):
    _, d, _ = doc_of(capsys, "sweep", "gamma", "3", "2")
    row = next(r for r in d["outputs"]["rows"] if r["k"] == 3 and r["d"] == 2)
    assert row["gamma"] == "3/2" and row["xi"] == 2


def test_calibrate(capsys):
    _, d, _ = doc_of(capsys, "calibrate", "approx", "3", "2")
    assert d["outputs"]["constant"] == "628361/10000"
    _, d, _ = doc_of(capsys, "calibrate", "gap", "3/2")
    assert d["outputs"]["constant"] == "299099/100000"
    _, d, _ = doc_of(capsys, "calibrate", "gap", "3")
    assert d["outputs"]["explicit"] is True


def test_count_pagination(capsys):
    _, full, _ = doc_of(capsys, "count", "1.5", "1", "const 1", "100")
    _, page, _ = doc_of(capsys, "count", "1.5", "1", "const 1", "100", "--limit", "3", "--offset", "2")
    assert page["outputs"]["records"] == full["outputs"]["records"][2:5]
    assert page["outputs"]["total"] == full["outputs"]["total"] >= 10


def test_measure_and_oracle_gap(capsys):
    code, d, _ = doc_of(capsys, "measure", "1", "const 1", "2", "1", "2", "10000")
    assert code == 0 and float(d["outputs"]["measure"]) == 1.0 and d["fallback"]["float_screen"]
    code, d, _ = doc_of(capsys, "oracle", "gap", "2", "103", "--cap", "12")
    assert (d["outputs"]["u"], d["outputs"]["v"]) == (2, 10)


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "theta_powers", "gap", "2", "103"], capture_output=True, text=True)
    assert p.returncode == 0 and json.loads(p.stdout)["outputs"]["v"] == 10
