"""Command-line front end.

Every subcommand writes its artifacts and a ``report.json`` into ``--out``.
Exit codes: 0 success, 1 usage or validation error, 2 I/O error,
3 numerical failure (conditioning, verification, ceiling, construction).
Numeric flags accept decimals and multiples of pi such as ``pi/2``,
``-3pi/4`` or ``2*pi``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import (
    CircuitIR,
    WModel,
    circuit_from_json,
    circuit_to_json,
    eval_h_batch,
    eval_wmodel_batch,
    resource_count,
    write_samples_csv,
)
from .compiler import CesaroSpec, approx_weight_gate, compile_wmodel, eval_uat_cesaro
from .exceptions import (
    CeilingExceededError,
    RequpError,
    SchemaError,
    ValidationError,
)
from .fourier import LaurentPoly, aux_coefficients, cesaro_mean, error_bound, eval_poly_grid
from .grid import GridSpec, default_grid
from .gqsp import synthesize
from .multiqubit import compile_multiqubit, multiqubit_equivalence

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

_PI_RE = re.compile(r"^([+-]?)\s*(\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?$")


class UsageError(ValidationError):
    pass


def parse_real(text: str) -> float:
    """Decimal or pi-multiple literal, e.g. ``0.25``, ``pi``, ``-pi/2``, ``3pi/4``."""
    s = str(text).strip().lower()
    m = _PI_RE.match(s)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        num = float(m.group(2)) if m.group(2) else 1.0
        den = float(m.group(3)) if m.group(3) else 1.0
        if den == 0:
            raise argparse.ArgumentTypeError(f"division by zero in {text!r}")
        return sign * num * math.pi / den
    try:
        value = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number or pi literal: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"value must be finite: {text!r}")
    return value


def _positive_real(text: str) -> float:
    v = parse_real(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive value, got {text!r}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return v


def _grid_size(text: str) -> int:
    v = _nonneg_int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("grid needs at least 2 points per axis")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- I/O helpers


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, doc) -> None:
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _read_json(path: str):
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc


def _file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _finite(metrics: dict) -> dict:
    out = {}
    for k, v in metrics.items():
        if v is None:
            continue
        if isinstance(v, (bool, np.bool_)):
            out[k] = bool(v)
        elif isinstance(v, (int, np.integer)):
            out[k] = int(v)
        elif isinstance(v, (float, np.floating)):
            if math.isfinite(float(v)):
                out[k] = float(v)
        elif isinstance(v, (list, tuple)):
            out[k] = [int(t) if isinstance(t, (int, np.integer)) else float(t) for t in v]
        else:
            out[k] = v
    return out


class Run:
    """Collects inputs, outputs and metrics of one command and writes the report."""

    def __init__(self, command: str, args: argparse.Namespace, files: list[str] = ()):
        self.command = command
        self.out = Path(args.out)
        self.inputs = {
            k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "command")
        }
        digests = {f: _file_digest(f) for f in files}
        self.config_hash = hashlib.sha256(
            json.dumps({"command": command, "inputs": self.inputs, "files": sorted(digests.values())},
                       sort_keys=True, default=str).encode()
        ).hexdigest()
        self.outputs: dict[str, str] = {}
        self.metrics: dict = {}
        self.start = time.perf_counter()

    def write(self, name: str, text: str) -> None:
        path = self.out / name
        _atomic_write(path, text)
        self.outputs[name] = str(path)

    def write_json(self, name: str, doc) -> None:
        self.write(name, json.dumps(doc, indent=2) + "\n")

    def report(self, status: str = "ok", reason: str | None = None) -> dict:
        self.metrics["wall_time_s"] = time.perf_counter() - self.start
        doc = {
            "command": self.command,
            "version": __version__,
            "config_hash": self.config_hash,
            "inputs": {k: v for k, v in self.inputs.items()},
            "outputs": self.outputs,
            "metrics": _finite(self.metrics),
            "status": status,
        }
        if status != "ok":
            doc["reason"] = reason or "unspecified failure"
        _write_json(self.out / "report.json", doc)
        return doc


def _grid_for(m: int, n: int | None) -> GridSpec:
    return default_grid(m) if n is None else GridSpec(m, n)


def _bound_fields(metrics: dict, measured: float, bound: float | None) -> None:
    metrics["measured"] = measured
    if bound is not None:
        metrics["bound"] = bound
        metrics["ratio"] = measured / bound if bound > 0 else None


# ---------------------------------------------------------------- commands


def cmd_fejer(args, run: Run) -> int:
    w, N = args.w, args.N
    p = cesaro_mean(aux_coefficients(w, N), N)
    grid = GridSpec(1, args.grid or 4096)
    x, v = eval_poly_grid(p, grid)
    err = np.abs(v - np.exp(1j * w * x))
    run.write_json("poly.json", p.to_json())
    run.write("samples.csv", write_samples_csv(x.reshape(-1, 1), v, {"abs_err": err}))
    sup = float(np.max(err))
    run.metrics["sup_error"] = sup
    bound = None
    if N >= 1 and abs(w) <= math.pi / 2:
        bound = error_bound(N).total
    run.metrics["bound_valid"] = bound is not None
    _bound_fields(run.metrics, sup, bound)
    run.metrics["N"] = N
    return EXIT_OK


def cmd_synth(args, run: Run) -> int:
    doc = _read_json(args.poly)
    P = LaurentPoly.from_json(doc)
    res = synthesize(P, grid=GridSpec(1, args.grid or 4096))
    run.write_json("phases.json", res.phases.to_json())
    run.write_json("circuit.json", circuit_to_json(res.circuit))
    run.metrics.update(
        residual=res.residual,
        degree=res.phases.degree,
        max_mode=P.max_mode,
        constraint_residual=res.meta.get("constraint_residual"),
        encodings=resource_count(res.circuit)["encodings_per_coord"][0],
    )
    return EXIT_OK


def cmd_weight_gate(args, run: Run) -> int:
    grid = GridSpec(1, args.grid or 4096)
    circ, plan = approx_weight_gate(args.w, args.eps, mode=args.mode, grid=grid)
    run.write_json("circuit.json", circuit_to_json(circ))
    run.write_json("plan.json", plan.to_json())
    run.metrics.update(K=plan.K, N=plan.N, remainder=plan.remainder, eps=args.eps,
                       encodings=plan.encodings, frobenius_sup=plan.measured_error)
    _bound_fields(run.metrics, plan.measured_error, args.eps)
    return EXIT_OK


def cmd_compile(args, run: Run) -> int:
    wm = WModel.from_json(_read_json(args.wmodel))
    grid = _grid_for(wm.m, args.grid)
    circ, rep = compile_wmodel(wm, args.eps, grid=grid, mode=args.mode)
    run.write_json("circuit.json", circuit_to_json(circ))
    run.write_json("compile_report.json", rep.to_json())
    run.metrics.update(
        measured_sup=rep.measured_sup,
        per_gate_sum=rep.per_gate_sum,
        budget=rep.budget,
        slack=rep.slack,
        total_gates=len(circ),
        encodings=sum(resource_count(circ)["encodings_per_coord"]),
    )
    _bound_fields(run.metrics, rep.measured_sup, rep.budget)
    if rep.measured_sup > rep.budget:
        raise _NumericFailure(f"measured sup {rep.measured_sup:.3e} exceeds budget {rep.budget:.3e}")
    return EXIT_OK


def _points_for(m: int, n: int | None) -> np.ndarray:
    return _grid_for(m, n).points


def cmd_simulate(args, run: Run) -> int:
    circ = circuit_from_json(_read_json(args.circuit))
    X = _points_for(circ.arg_dim, args.grid)
    h = eval_h_batch(circ, X)
    run.write("samples.csv", write_samples_csv(X, h, {"abs": np.abs(h)}))
    run.metrics.update(points=X.shape[0], max_abs=float(np.max(np.abs(h))))
    return EXIT_OK


def _load_model(path: str):
    """(kind, arg_dim, evaluator) for a circuit, WModel, Cesaro spec or polynomial file."""
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise SchemaError("/", f"{path}: expected an object")
    if doc.get("kind") == "cesaro_spec":
        spec = CesaroSpec.from_json(doc)
        return "cesaro_spec", spec.m, lambda X: eval_uat_cesaro(spec, X)
    if "gates" in doc:
        c = circuit_from_json(doc)
        return "circuit", c.arg_dim, lambda X: eval_h_batch(c, X)
    if "thetas" in doc:
        wm = WModel.from_json(doc)
        return "wmodel", wm.m, lambda X: eval_wmodel_batch(wm, X)
    if "coeffs" in doc:
        p = LaurentPoly.from_json(doc)
        return "poly", 1, lambda X: p(X[:, 0])
    raise SchemaError("/", f"{path}: not a circuit, WModel, Cesaro spec or polynomial")


def cmd_verify(args, run: Run) -> int:
    ka, ma, fa = _load_model(args.a)
    kb, mb, fb = _load_model(args.b)
    if ma != mb:
        raise ValidationError(f"argument dimensions differ: {ma} vs {mb}")
    X = _points_for(ma, args.grid)
    d = np.abs(fa(X) - fb(X))
    sup = float(np.max(d))
    run.metrics.update(sup=sup, mean=float(np.mean(d)), points=X.shape[0], tolerance=args.tolerance)
    run.inputs["kinds"] = [ka, kb]
    if sup > args.tolerance:
        raise _NumericFailure(f"sup |h_a - h_b| = {sup:.3e} exceeds tolerance {args.tolerance:.3e}")
    return EXIT_OK


def _multiqubit_source(doc) -> CircuitIR:
    if isinstance(doc, dict) and doc.get("kind") == "weight_gates":
        m = doc.get("m")
        if not isinstance(m, int) or m < 1:
            raise SchemaError("/m", "expected a positive integer")
        items = doc.get("gates")
        if not isinstance(items, list):
            raise SchemaError("/gates", "expected a list")
        gates = []
        for i, item in enumerate(items):
            for key in ("coord", "w", "eps"):
                if not isinstance(item, dict) or key not in item:
                    raise SchemaError(f"/gates/{i}/{key}", "missing required field")
            coord = item["coord"]
            if not isinstance(coord, int) or not 0 <= coord < m:
                raise SchemaError(f"/gates/{i}/coord", f"expected an integer in 0..{m - 1}")
            c, _ = approx_weight_gate(float(item["w"]), float(item["eps"]), coord=coord, arg_dim=m,
                                      grid=GridSpec(1, default_grid(m).n))
            gates.extend(c.gates)
        return CircuitIR(2, m, tuple(gates))
    return circuit_from_json(doc)


def _multiqubit_grid(m: int, n: int | None) -> GridSpec:
    if n is not None:
        return GridSpec(m, n)
    if m <= 3:
        return default_grid(m)
    # keep the tensor grid near 4096 points
    return GridSpec(m, max(2, int(round(4096 ** (1.0 / m)))), shifted=False)


def cmd_multiqubit(args, run: Run) -> int:
    single = _multiqubit_source(_read_json(args.spec))
    lifted = compile_multiqubit(single, args.variant)
    run.write_json("source_circuit.json", circuit_to_json(single))
    run.write_json("circuit.json", circuit_to_json(lifted))
    grid = _multiqubit_grid(single.arg_dim, args.grid)
    eq = multiqubit_equivalence(single, lifted, grid.points)
    run.metrics.update(eq)
    run.metrics.update(
        dim=lifted.dim,
        block_encodings=lifted.meta["block_encodings"],
        block_encodings_per_full_encoding=lifted.meta["block_encodings_per_full_encoding"],
        permutations=lifted.meta["permutations"],
    )
    if eq["h_sup"] > args.tolerance:
        raise _NumericFailure(f"lifted h differs from the source by {eq['h_sup']:.3e}")
    return EXIT_OK


class _NumericFailure(RequpError):
    pass


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="requp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid=True):
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=_nonneg_int, default=0, help="recorded for reproducibility")
        if grid:
            sp.add_argument("--grid", type=_grid_size, default=None, help="points per axis")

    s = sub.add_parser("fejer", help="Cesaro mean of the mirrored phase function")
    s.add_argument("--w", type=parse_real, required=True)
    s.add_argument("--N", type=_nonneg_int, required=True)
    common(s)
    s.set_defaults(func=cmd_fejer)

    s = sub.add_parser("synth", help="fixed-encoding circuit for a polynomial JSON")
    s.add_argument("poly")
    common(s)
    s.set_defaults(func=cmd_synth, files=["poly"])

    s = sub.add_parser("weight-gate", help="fixed-encoding replacement of e^{i w x Z}")
    s.add_argument("--w", type=parse_real, required=True)
    s.add_argument("--eps", type=_positive_real, required=True)
    s.add_argument("--mode", choices=("frobenius", "analytic", "adaptive"), default="frobenius")
    common(s)
    s.set_defaults(func=cmd_weight_gate)

    s = sub.add_parser("compile", help="compile a WModel JSON")
    s.add_argument("wmodel")
    s.add_argument("--eps", type=_positive_real, required=True)
    s.add_argument("--mode", choices=("frobenius", "analytic", "adaptive"), default="frobenius")
    common(s)
    s.set_defaults(func=cmd_compile, files=["wmodel"])

    s = sub.add_parser("simulate", help="evaluate h on a grid")
    s.add_argument("circuit")
    common(s)
    s.set_defaults(func=cmd_simulate, files=["circuit"])

    s = sub.add_parser("verify", help="compare two models on a grid")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--tolerance", type=_positive_real, default=1e-9)
    common(s)
    s.set_defaults(func=cmd_verify, files=["a", "b"])

    s = sub.add_parser("multiqubit", help="lift a single-qubit circuit onto block encodings")
    s.add_argument("spec")
    s.add_argument("--variant", choices=("vm", "vm-prime"), default="vm")
    s.add_argument("--tolerance", type=_positive_real, default=1e-9)
    common(s)
    s.set_defaults(func=cmd_multiqubit, files=["spec"])
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    files = [getattr(args, name) for name in getattr(args, "files", [])]
    if hasattr(args, "files"):
        del args.files
    command = args.command
    try:
        run = Run(command, args, files)
    except OSError as exc:
        print(f"requp {command}: cannot read input: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        code = args.func(args, run)
        run.report()
        return code
    except OSError as exc:
        print(f"requp {command}: I/O error: {exc}", file=sys.stderr)
        _try_report(run, f"I/O error: {exc}")
        return EXIT_IO
    except ValidationError as exc:
        print(f"requp {command}: {exc}", file=sys.stderr)
        _try_report(run, str(exc))
        return EXIT_USAGE
    except CeilingExceededError as exc:
        run.metrics["required_N_estimate"] = exc.required
        run.metrics["ceiling"] = exc.ceiling
        print(f"requp {command}: {exc}", file=sys.stderr)
        _try_report(run, str(exc))
        return EXIT_NUMERIC
    except RequpError as exc:
        print(f"requp {command}: {exc}", file=sys.stderr)
        _try_report(run, str(exc))
        return EXIT_NUMERIC


def _try_report(run: Run, reason: str) -> None:
    try:
        run.report("failed", reason)
    except OSError:
        pass


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
