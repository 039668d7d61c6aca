import json
import subprocess
import sys

import numpy as np
import pytest

from requp.circuit import CircuitIR, WModel, circuit_from_json, circuit_to_json, encode, eval_h_batch, read_samples_csv, rz
from requp.cli import main, parse_real
from requp.fourier import LaurentPoly, error_bound
from requp.gqsp import PhaseSequence
from requp.grid import GridSpec


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*map(str, argv), "--out", str(out)])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, out, report


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_parse_real_literals():
    assert parse_real("pi/2") == np.pi / 2
    assert parse_real("-3pi/4") == -3 * np.pi / 4
    assert parse_real("2*pi") == 2 * np.pi
    assert parse_real("0.25") == 0.25
    import argparse

    for bad in ("pi/0", "nan", "inf", "two"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_real(bad)


def test_fejer_zero_weight(tmp_path):
    code, out, rep = run(tmp_path, "fejer", "--w", "0", "--N", "8")
    assert code == 0 and rep["status"] == "ok"
    assert rep["metrics"]["sup_error"] <= 1e-14
    assert LaurentPoly.from_json(json.loads((out / "poly.json").read_text())).max_mode == 8


def test_fejer_bound(tmp_path):
    code, out, rep = run(tmp_path, "fejer", "--w", "pi/2", "--N", "64")
    assert code == 0
    m = rep["metrics"]
    assert m["sup_error"] <= error_bound(64).total
    assert m["bound"] == pytest.approx(error_bound(64).total)
    assert m["ratio"] == pytest.approx(m["measured"] / m["bound"])
    X, v = read_samples_csv((out / "samples.csv").read_text())
    assert X.shape == (len(GridSpec(1, 4096)), 1)


def test_usage_errors(tmp_path, capsys):
    assert run(tmp_path, "fejer", "--w", "1", "--N", "-1")[0] == 1
    assert run(tmp_path, "fejer", "--w", "x", "--N", "3")[0] == 1
    assert run(tmp_path, "weight-gate", "--w", "1", "--eps", "0")[0] == 1
    assert run(tmp_path, "simulate", "nothing.json", "--grid", "0")[0] == 1
    assert main(["bogus"]) == 1
    assert main([]) == 1


def test_synth_paths(tmp_path):
    p = write(tmp_path, "c.json", LaurentPoly.from_modes({0: 0.5}).to_json())
    code, out, rep = run(tmp_path, "synth", p)
    assert code == 0
    assert PhaseSequence.from_json(json.loads((out / "phases.json").read_text())).degree == 0

    rng = np.random.default_rng(0)
    c = rng.normal(size=33) + 1j * rng.normal(size=33)
    poly = LaurentPoly(c)
    x = np.linspace(-1, 1, 4001)
    poly = LaurentPoly(0.9 * c / np.max(np.abs(poly(x))))
    p = write(tmp_path, "r.json", poly.to_json())
    code, out, rep = run(tmp_path, "synth", p, name="r")
    assert code == 0 and rep["metrics"]["residual"] <= 1e-8

    p = write(tmp_path, "u.json", LaurentPoly.from_modes({-1: 0.8, 1: 0.8}).to_json())
    code, out, rep = run(tmp_path, "synth", p, name="u")
    assert code == 1 and rep["status"] == "failed"
    assert "x=" in rep["reason"] or "at x" in rep["reason"]


def test_weight_gate_paths(tmp_path, monkeypatch):
    code, out, rep = run(tmp_path, "weight-gate", "--w", "pi", "--eps", "0.1")
    assert code == 0 and rep["metrics"]["K"] == 1 and rep["metrics"]["N"] == 0
    code, out, rep = run(tmp_path, "weight-gate", "--w", "2.5", "--eps", "0.05", name="b")
    assert code == 0 and rep["metrics"]["measured"] <= 0.05
    circ = circuit_from_json(json.loads((out / "circuit.json").read_text()))
    assert circ.arg_dim == 1
    monkeypatch.setenv("REQUP_MAX_N", "16")
    code, out, rep = run(tmp_path, "weight-gate", "--w", "1", "--eps", "1e-9", "--mode", "adaptive", name="c")
    assert code == 3 and rep["status"] == "failed"
    assert rep["metrics"]["required_N_estimate"] > 16


def test_compile_paths(tmp_path):
    wm = WModel([0.1, 0.2], [0.3, -0.4], [[2.0, 3.0]], 0.5)
    p = write(tmp_path, "wm.json", wm.to_json())
    code, out, rep = run(tmp_path, "compile", p, "--eps", "0.1")
    assert code == 0
    cr = json.loads((out / "compile_report.json").read_text())
    assert cr["measured_sup"] <= 0.1

    exact = WModel([0.1, 0.2], [0.3, -0.4], [[np.pi, -2 * np.pi]], 0.5)
    code, out, rep = run(tmp_path, "compile", write(tmp_path, "e.json", exact.to_json()), "--eps", "0.1", name="e")
    assert code == 0 and rep["metrics"]["measured"] <= 1e-10

    doc = wm.to_json()
    del doc["phis"]
    code, out, rep = run(tmp_path, "compile", write(tmp_path, "bad.json", doc), "--eps", "0.1", name="bad")
    assert code == 1 and "/phis" in rep["reason"]


def test_simulate_paths(tmp_path):
    p = write(tmp_path, "id.json", circuit_to_json(CircuitIR(2, 1)))
    code, out, rep = run(tmp_path, "simulate", p, "--grid", "33")
    assert code == 0
    X, h = read_samples_csv((out / "samples.csv").read_text())
    assert np.all(h == 1)
    header = (out / "samples.csv").read_text().splitlines()[0]
    assert header == "x0,re,im,abs"


def test_simulate_synthesized_cosine(tmp_path):
    p = write(tmp_path, "cos.json", LaurentPoly.from_modes({-1: 0.5, 1: 0.5}).to_json())
    code, out, _ = run(tmp_path, "synth", p, name="s")
    code, out, _ = run(tmp_path, "simulate", out / "circuit.json", name="sim")
    X, h = read_samples_csv((out / "samples.csv").read_text())
    assert np.max(np.abs(h.real - np.cos(np.pi * X[:, 0]))) <= 1e-8


def test_verify_paths(tmp_path):
    c = CircuitIR(2, 1, (encode(0), rz(0.3), encode(0, -1)))
    a = write(tmp_path, "a.json", circuit_to_json(c))
    code, out, rep = run(tmp_path, "verify", a, a)
    assert code == 0 and rep["metrics"]["sup"] == 0
    c2 = CircuitIR(2, 1, (encode(0), rz(0.3 + 1e-3), encode(0, -1)))
    b = write(tmp_path, "b.json", circuit_to_json(c2))
    code, out, rep = run(tmp_path, "verify", a, b, name="p")
    assert code == 3 and rep["metrics"]["sup"] > 0
    wm = write(tmp_path, "wm.json", WModel([0.0], [0.0], np.zeros((0, 2)), 0.0).to_json())
    assert run(tmp_path, "verify", a, wm, name="d")[0] == 1


def test_verify_compiled_against_wmodel(tmp_path):
    wm = WModel([0.1, 0.2], [0.3, -0.4], [[1.3]], 0.5)
    p = write(tmp_path, "wm.json", wm.to_json())
    code, out, rep = run(tmp_path, "compile", p, "--eps", "0.1")
    code, _, vrep = run(tmp_path, "verify", out / "circuit.json", p, "--tolerance", "0.1", name="v")
    assert code == 0 and vrep["metrics"]["sup"] <= 0.1


def test_multiqubit_paths(tmp_path):
    spec = {"kind": "weight_gates", "m": 2, "gates": [{"coord": 1, "w": 2.0, "eps": 0.1}]}
    p = write(tmp_path, "mq.json", spec)
    code, out, rep = run(tmp_path, "multiqubit", p)
    assert code == 0 and rep["metrics"]["h_sup"] <= 1e-9
    lifted = circuit_from_json(json.loads((out / "circuit.json").read_text()))
    assert lifted.dim == 4

    single = write(tmp_path, "one.json", circuit_to_json(CircuitIR(2, 1, (encode(0), rz(0.2)))))
    code, out, rep = run(tmp_path, "multiqubit", single, name="one")
    assert code == 0 and rep["metrics"]["h_sup"] <= 1e-12

    code, out, rep = run(tmp_path, "multiqubit", p, "--variant", "vm-prime", name="vp")
    assert code == 3 and rep["status"] == "failed"
    assert run(tmp_path, "multiqubit", p, "--variant", "vm3", name="bad")[0] == 1


def test_io_errors(tmp_path):
    assert run(tmp_path, "synth", tmp_path / "missing.json")[0] == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["fejer", "--w", "0", "--N", "2", "--out", str(blocker / "sub")])
    assert code == 2


def test_schema_error_exit(tmp_path):
    p = tmp_path / "junk.json"
    p.write_text("{not json")
    code, out, rep = run(tmp_path, "simulate", p)
    assert code == 1 and rep["status"] == "failed" and rep["reason"]


def test_reports_deterministic_hash(tmp_path):
    a = run(tmp_path, "fejer", "--w", "1", "--N", "4", name="a")[2]
    b = run(tmp_path, "fejer", "--w", "1", "--N", "4", name="b")[2]
    c = run(tmp_path, "fejer", "--w", "1", "--N", "5", name="c")[2]
    assert a["config_hash"] == b["config_hash"] != c["config_hash"]
    assert (tmp_path / "a" / "poly.json").read_bytes() == (tmp_path / "b" / "poly.json").read_bytes()
    for rep in (a, b, c):
        assert all(np.isfinite(v) for v in rep["metrics"].values() if isinstance(v, float))
    assert not list((tmp_path / "a").glob(".*.tmp"))


def test_outputs_round_trip(tmp_path):
    code, out, rep = run(tmp_path, "weight-gate", "--w", "0.7", "--eps", "0.2")
    text = (out / "circuit.json").read_text()
    circ = circuit_from_json(json.loads(text))
    assert json.dumps(circuit_to_json(circ), indent=2) + "\n" == text
    x = np.linspace(0, 1, 5)
    assert np.all(np.isfinite(eval_h_batch(circ, x)))


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "requp", "fejer", "--w", "pi/4", "--N", "4", "--out", str(tmp_path / "m")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "requp", "fejer"], capture_output=True, text=True)
    assert proc.returncode == 1
