"""Circuit IR, evaluation of h(x) = <0|U(x)|0>, and the tunable-weight reference model.

Gate lists are stored in application order: ``gates[0]`` acts first, so the
circuit unitary is ``G[-1] @ ... @ G[1] @ G[0]``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import SchemaError, ValidationError
from .linalg import rot_y, rot_z

__all__ = [
    "Gate",
    "CircuitIR",
    "WModel",
    "GATE_KINDS",
    "rz",
    "ry",
    "global_phase",
    "encode",
    "raw_unitary",
    "block_encode_vm",
    "block_encode_vm_prime",
    "permutation",
    "gate_matrix",
    "eval_unitary",
    "eval_unitary_batch",
    "eval_h",
    "eval_h_batch",
    "eval_wmodel",
    "eval_wmodel_batch",
    "wmodel_to_circuit",
    "resource_count",
    "serialize",
    "deserialize",
    "circuit_to_json",
    "circuit_from_json",
    "write_samples_csv",
    "read_samples_csv",
    "GATE_ORDER_NOTE",
]

GATE_KINDS = (
    "rot_z",
    "rot_y",
    "encode",
    "global_phase",
    "raw_unitary",
    "block_encode_vm",
    "block_encode_vm_prime",
    "permutation",
)

GATE_ORDER_NOTE = "application order: gates[0] acts first; U = G[n-1] ... G[1] G[0]"


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate of a circuit.

    ``encode`` applies diag(e^{i s pi x_k}, e^{-i s pi x_k}) with ``s = sign``
    or ``s = sign / 2`` when ``half`` is set.  Rotations and phases act on the
    leading 2x2 block when the circuit dimension exceeds two.
    """

    kind: str
    angle: float = 0.0
    coord: int = 0
    sign: int = 1
    half: bool = False
    matrix: np.ndarray | None = None
    perm: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("rot_z", "rot_y", "global_phase") and not math.isfinite(self.angle):
            raise ValidationError("gate angle must be finite")
        if self.kind == "encode":
            if self.sign not in (1, -1):
                raise ValidationError("encode sign must be +1 or -1")
            if self.coord < 0:
                raise ValidationError("encode coord must be nonnegative")
        if self.kind == "raw_unitary":
            m = np.array(self.matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
                raise ValidationError("raw_unitary needs a finite square matrix")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        if self.kind == "permutation":
            p = tuple(int(i) for i in self.perm)
            if sorted(p) != list(range(len(p))):
                raise ValidationError(f"permutation {list(p)} is not a bijection")
            object.__setattr__(self, "perm", p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Gate) or self.kind != other.kind:
            return False
        k = self.kind
        if k in ("rot_z", "rot_y", "global_phase"):
            return self.angle == other.angle
        if k == "encode":
            return (self.coord, self.sign, self.half) == (other.coord, other.sign, other.half)
        if k == "raw_unitary":
            return self.matrix.shape == other.matrix.shape and bool(np.all(self.matrix == other.matrix))
        if k == "permutation":
            return self.perm == other.perm
        return True

    def __hash__(self):
        return hash((self.kind, self.angle, self.coord, self.sign, self.half, self.perm))

    @property
    def is_encoding(self) -> bool:
        return self.kind in ("encode", "block_encode_vm", "block_encode_vm_prime")


def rz(angle: float) -> Gate:
    return Gate("rot_z", angle=float(angle))


def ry(angle: float) -> Gate:
    return Gate("rot_y", angle=float(angle))


def global_phase(angle: float) -> Gate:
    return Gate("global_phase", angle=float(angle))


def encode(coord: int, sign: int = 1, half: bool = False) -> Gate:
    return Gate("encode", coord=int(coord), sign=int(sign), half=bool(half))


def raw_unitary(matrix) -> Gate:
    return Gate("raw_unitary", matrix=matrix)


def block_encode_vm() -> Gate:
    return Gate("block_encode_vm")


def block_encode_vm_prime() -> Gate:
    return Gate("block_encode_vm_prime")


def permutation(perm) -> Gate:
    return Gate("permutation", perm=tuple(perm))


@dataclass(frozen=True, eq=False)
class CircuitIR:
    dim: int
    arg_dim: int
    gates: tuple[Gate, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.dim < 2:
            raise ValidationError("circuit dimension must be >= 2")
        if self.arg_dim < 1:
            raise ValidationError("arg_dim must be >= 1")
        for i, g in enumerate(self.gates):
            if not isinstance(g, Gate):
                raise ValidationError(f"gate {i} is not a Gate")
            if g.kind == "encode" and g.coord >= self.arg_dim:
                raise ValidationError(f"gate {i}: encode coord {g.coord} >= arg_dim {self.arg_dim}")
            if g.kind == "raw_unitary" and g.matrix.shape[0] != self.dim:
                raise ValidationError(f"gate {i}: raw_unitary of size {g.matrix.shape[0]} in dim {self.dim}")
            if g.kind == "permutation" and len(g.perm) != self.dim:
                raise ValidationError(f"gate {i}: permutation of length {len(g.perm)} in dim {self.dim}")
            if g.kind == "block_encode_vm" and self.dim != 2 * self.arg_dim:
                raise ValidationError(f"gate {i}: block_encode_vm needs dim 2m = {2 * self.arg_dim}")
            if g.kind == "block_encode_vm_prime" and self.dim != self.arg_dim + 1:
                raise ValidationError(f"gate {i}: block_encode_vm_prime needs dim m+1 = {self.arg_dim + 1}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CircuitIR):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.arg_dim == other.arg_dim
            and self.gates == other.gates
            and self.meta == other.meta
        )

    def __len__(self) -> int:
        return len(self.gates)

    def then(self, *gates: Gate) -> "CircuitIR":
        """A copy with ``gates`` applied after the existing ones."""
        return CircuitIR(self.dim, self.arg_dim, self.gates + tuple(gates), dict(self.meta))


@dataclass(frozen=True, eq=False)
class WModel:
    """Tunable-weight model U = A_1 A_2 ... A_L C.

    A_j = e^{i theta_j Z} e^{i phi_j Y} e^{i (w_j . x) Z} and the closing block
    C = e^{i theta_0 Z} e^{i phi_0 Y} e^{i lam Z}; C acts first.
    """

    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray
    lam: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        th = np.array(self.thetas, dtype=float).reshape(-1)
        ph = np.array(self.phis, dtype=float).reshape(-1)
        L = th.size - 1
        if L < 0 or ph.size != th.size:
            raise ValidationError("thetas and phis need equal length L + 1 >= 1")
        w = np.array(self.weights, dtype=float)
        if w.size == 0:
            w = w.reshape(L, w.shape[1] if w.ndim == 2 else 1)
        if w.ndim == 1:
            w = w.reshape(L, -1) if L > 0 else w.reshape(0, 1)
        if w.ndim != 2 or w.shape[0] != L or w.shape[1] < 1:
            raise ValidationError(f"weights must have shape (L, m) with L = {L}")
        for arr in (th, ph, w):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("WModel parameters must be finite")
            arr.setflags(write=False)
        if not math.isfinite(self.lam):
            raise ValidationError("lambda must be finite")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "phis", ph)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def L(self) -> int:
        return self.thetas.size - 1

    @property
    def m(self) -> int:
        return self.weights.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, WModel):
            return NotImplemented
        return (
            self.weights.shape == other.weights.shape
            and bool(np.all(self.thetas == other.thetas))
            and bool(np.all(self.phis == other.phis))
            and bool(np.all(self.weights == other.weights))
            and self.lam == other.lam
        )

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "m": self.m,
            "thetas": [float(v) for v in self.thetas],
            "phis": [float(v) for v in self.phis],
            "weights": [[float(v) for v in row] for row in self.weights],
            "lambda": self.lam,
            **({"meta": self.meta} if self.meta else {}),
        }

    @classmethod
    def from_json(cls, doc, path: str = "") -> "WModel":
        if not isinstance(doc, dict):
            raise SchemaError(path, "expected an object")
        for key in ("L", "m", "thetas", "phis", "weights", "lambda"):
            if key not in doc:
                raise SchemaError(f"{path}/{key}", "missing required field")
        L, m = doc["L"], doc["m"]
        if not _is_int(L) or L < 0:
            raise SchemaError(f"{path}/L", "must be a nonnegative integer")
        if not _is_int(m) or m < 1:
            raise SchemaError(f"{path}/m", "must be a positive integer")
        thetas = _number_list(doc["thetas"], L + 1, f"{path}/thetas")
        phis = _number_list(doc["phis"], L + 1, f"{path}/phis")
        rows = doc["weights"]
        if not isinstance(rows, list) or len(rows) != L:
            raise SchemaError(f"{path}/weights", f"expected {L} rows")
        weights = [_number_list(r, m, f"{path}/weights/{i}") for i, r in enumerate(rows)]
        lam = doc["lambda"]
        if not _is_number(lam) or not math.isfinite(lam):
            raise SchemaError(f"{path}/lambda", "must be a finite number")
        meta = doc.get("meta", {})
        if not isinstance(meta, dict):
            raise SchemaError(f"{path}/meta", "expected an object")
        return cls(thetas, phis, np.array(weights, dtype=float).reshape(L, m), float(lam), dict(meta))


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number_list(v, n: int, path: str) -> list[float]:
    if not isinstance(v, list) or len(v) != n:
        raise SchemaError(path, f"expected a list of {n} numbers")
    for i, item in enumerate(v):
        if not _is_number(item) or not math.isfinite(item):
            raise SchemaError(f"{path}/{i}", "expected a finite number")
    return [float(item) for item in v]


# ---------------------------------------------------------------- matrices


def _encoding_freq(g: Gate) -> float:
    return g.sign * (0.5 if g.half else 1.0)


def _perm_matrix(perm) -> np.ndarray:
    d = len(perm)
    p = np.zeros((d, d), dtype=complex)
    p[list(perm), list(range(d))] = 1.0
    return p


def _embed(block: np.ndarray, dim: int) -> np.ndarray:
    out = np.eye(dim, dtype=complex)
    out[:2, :2] = block
    return out


def _diag_phases(g: Gate, dim: int, arg_dim: int, x: np.ndarray) -> np.ndarray:
    """Diagonal of an encoding gate for a batch of points x of shape (n, m)."""
    n = x.shape[0]
    if g.kind == "encode":
        e = np.exp(1j * math.pi * _encoding_freq(g) * x[:, g.coord])
        d = np.ones((n, dim), dtype=complex)
        d[:, 0] = e
        d[:, 1] = e.conj()
        return d
    if g.kind == "block_encode_vm":
        e = np.exp(0.5j * math.pi * x)
        d = np.empty((n, dim), dtype=complex)
        d[:, 0::2] = e
        d[:, 1::2] = e.conj()
        return d
    # block_encode_vm_prime
    m = arg_dim
    d = np.empty((n, dim), dtype=complex)
    d[:, :m] = np.exp(1j * math.pi * x / m)
    d[:, m] = np.exp(-1j * math.pi * x.sum(axis=1) / m)
    return d


def gate_matrix(g: Gate, dim: int = 2, x=None, arg_dim: int | None = None) -> np.ndarray:
    """Dense matrix of one gate; encodings need the point ``x``."""
    if g.kind == "rot_z":
        return _embed(rot_z(g.angle), dim)
    if g.kind == "rot_y":
        return _embed(rot_y(g.angle), dim)
    if g.kind == "global_phase":
        return np.exp(1j * g.angle) * np.eye(dim, dtype=complex)
    if g.kind == "raw_unitary":
        return np.array(g.matrix)
    if g.kind == "permutation":
        return _perm_matrix(g.perm)
    if x is None:
        raise ValidationError("encoding gates need a data point")
    xv = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    m = xv.shape[1] if arg_dim is None else arg_dim
    return np.diag(_diag_phases(g, dim, m, xv)[0])


# ---------------------------------------------------------------- evaluation


def _as_points(c: CircuitIR, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and c.arg_dim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != c.arg_dim:
        raise ValidationError(f"expected points of dimension {c.arg_dim}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("data points must be finite")
    return X


def _as_point(c: CircuitIR, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size != c.arg_dim:
        raise ValidationError(f"expected a point of dimension {c.arg_dim}, got shape {x.shape}")
    return x.reshape(1, -1)


def _flag(report, X: np.ndarray) -> None:
    if report is not None:
        report["outside_domain"] = bool(np.any((X < 0.0) | (X > 1.0)))


def _constant_2x2(g: Gate) -> np.ndarray:
    if g.kind == "permutation":
        return _perm_matrix(g.perm)
    return gate_matrix(g, 2)


def _segments_2x2(c: CircuitIR):
    """Split a dim-2 circuit into runs whose encodings all read one coordinate.

    Each run is (coord or None, kinds, freqs, mats) with constant gates merged.
    """
    runs = []
    coord = None
    kinds: list[int] = []
    freqs: list[float] = []
    mats: list[np.ndarray] = []
    pending = None

    def flush_const():
        nonlocal pending
        if pending is not None:
            kinds.append(0)
            freqs.append(0.0)
            mats.append(pending)
            pending = None

    def close_run():
        flush_const()
        if kinds:
            runs.append((coord, np.array(kinds, dtype=np.int64), np.array(freqs), np.array(mats).reshape(-1, 2, 2)))

    for g in c.gates:
        if g.is_encoding:
            if g.kind == "encode":
                k, f = g.coord, _encoding_freq(g)
            elif g.kind == "block_encode_vm":
                k, f = 0, 0.5
            else:
                k, f = 0, 1.0
            if coord is not None and k != coord:
                close_run()
                kinds, freqs, mats = [], [], []
            coord = k
            flush_const()
            kinds.append(1)
            freqs.append(f)
            mats.append(np.eye(2, dtype=complex))
        else:
            mat = _constant_2x2(g)
            pending = mat if pending is None else mat @ pending
    close_run()
    return runs


def _run_unitaries(run, X: np.ndarray) -> np.ndarray:
    coord, kinds, freqs, mats = run
    if coord is None:
        return np.broadcast_to(mats[0], (X.shape[0], 2, 2))
    uniq, inv = np.unique(X[:, coord], return_inverse=True)
    return _kernels.propagate_2x2(kinds, freqs, mats, uniq)[inv]


def _eval_2x2(c: CircuitIR, X: np.ndarray) -> np.ndarray:
    U = np.broadcast_to(np.eye(2, dtype=complex), (X.shape[0], 2, 2))
    for run in _segments_2x2(c):
        U = np.matmul(_run_unitaries(run, X), U)
    return np.array(U)


def _first_column_2x2(c: CircuitIR, X: np.ndarray) -> np.ndarray:
    runs = _segments_2x2(c)
    n = X.shape[0]
    col = np.zeros((n, 2), dtype=complex)
    col[:, 0] = 1.0
    if not runs:
        return col
    if len(runs) == 1 and runs[0][0] is not None:
        coord, kinds, freqs, mats = runs[0]
        uniq, inv = np.unique(X[:, coord], return_inverse=True)
        return _kernels.propagate_su2_column(kinds, freqs, mats, uniq)[inv]
    for run in runs:
        col = np.einsum("nij,nj->ni", _run_unitaries(run, X), col)
    return col


def _apply_general(g: Gate, state: np.ndarray, c: CircuitIR, X: np.ndarray, cache: dict) -> np.ndarray:
    # state: (n, d, k); returns gate @ state
    if g.is_encoding:
        key = (g.kind, g.coord, g.sign, g.half)
        if key not in cache:
            cache[key] = _diag_phases(g, c.dim, c.arg_dim, X)[:, :, None]
        return cache[key] * state
    if g.kind == "permutation":
        out = np.empty_like(state)
        out[:, list(g.perm), :] = state
        return out
    if g.kind == "global_phase":
        return np.exp(1j * g.angle) * state
    if g.kind in ("rot_z", "rot_y"):
        b = rot_z(g.angle) if g.kind == "rot_z" else rot_y(g.angle)
        out = state.copy()
        out[:, :2, :] = np.einsum("ij,njk->nik", b, state[:, :2, :])
        return out
    return np.einsum("ij,njk->nik", g.matrix, state)


def _eval_general(c: CircuitIR, X: np.ndarray, columns: int) -> np.ndarray:
    n = X.shape[0]
    state = np.zeros((n, c.dim, columns), dtype=complex)
    for j in range(columns):
        state[:, j, j] = 1.0
    cache: dict = {}
    for g in c.gates:
        state = _apply_general(g, state, c, X, cache)
    return state


def eval_unitary_batch(c: CircuitIR, X, report: dict | None = None) -> np.ndarray:
    """Circuit unitaries at points X of shape (n, m); returns (n, dim, dim)."""
    X = _as_points(c, X)
    _flag(report, X)
    if c.dim == 2:
        return _eval_2x2(c, X)
    return _eval_general(c, X, c.dim)


def eval_unitary(c: CircuitIR, x, report: dict | None = None) -> np.ndarray:
    return eval_unitary_batch(c, _as_point(c, x), report)[0]


def eval_first_column_batch(c: CircuitIR, X, report: dict | None = None) -> np.ndarray:
    """U(x)|0> for a batch of points; returns (n, dim)."""
    X = _as_points(c, X)
    _flag(report, X)
    if c.dim == 2:
        return _first_column_2x2(c, X)
    return _eval_general(c, X, 1)[:, :, 0]


def eval_h_batch(c: CircuitIR, X, report: dict | None = None) -> np.ndarray:
    return eval_first_column_batch(c, X, report)[:, 0]


def eval_h(c: CircuitIR, x, report: dict | None = None) -> complex:
    return complex(eval_h_batch(c, _as_point(c, x), report)[0])


# ---------------------------------------------------------------- reference model


def eval_wmodel_batch(wm: WModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and wm.m == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != wm.m:
        raise ValidationError(f"expected points of dimension {wm.m}, got shape {X.shape}")
    closing = rot_z(wm.thetas[0]) @ rot_y(wm.phis[0]) @ rot_z(wm.lam)
    a = np.full(X.shape[0], closing[0, 0])
    b = np.full(X.shape[0], closing[1, 0])
    for j in range(wm.L, 0, -1):
        e = np.exp(1j * (X @ wm.weights[j - 1]))
        a, b = a * e, b * e.conj()
        cy, sy = math.cos(wm.phis[j]), math.sin(wm.phis[j])
        a, b = cy * a + sy * b, -sy * a + cy * b
        ez = complex(math.cos(wm.thetas[j]), math.sin(wm.thetas[j]))
        a, b = ez * a, ez.conjugate() * b
    return a


def eval_wmodel(wm: WModel, x) -> complex:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size != wm.m:
        raise ValidationError(f"expected a point of dimension {wm.m}")
    return complex(eval_wmodel_batch(wm, x.reshape(1, -1))[0])


def wmodel_to_circuit(wm: WModel, weight_gate) -> CircuitIR:
    """Assemble a dim-2 circuit from a WModel.

    ``weight_gate(j, k, w)`` returns the gate list standing for
    e^{i w x_k Z} in layer j (1-based).  Rotations are copied verbatim.
    """
    gates = [rz(wm.lam), ry(wm.phis[0]), rz(wm.thetas[0])]
    for j in range(wm.L, 0, -1):
        for k in range(wm.m):
            gates.extend(weight_gate(j, k, float(wm.weights[j - 1, k])))
        gates.extend([ry(wm.phis[j]), rz(wm.thetas[j])])
    return CircuitIR(2, wm.m, tuple(gates))


# ---------------------------------------------------------------- bookkeeping


def resource_count(c: CircuitIR) -> dict:
    per_coord = [0] * c.arg_dim
    half = [0] * c.arg_dim
    vm = vmp = perms = 0
    for g in c.gates:
        if g.kind == "encode":
            per_coord[g.coord] += 1
            half[g.coord] += int(g.half)
        elif g.kind == "block_encode_vm":
            vm += 1
        elif g.kind == "block_encode_vm_prime":
            vmp += 1
        elif g.kind == "permutation":
            perms += 1
    return {
        "encodings_per_coord": per_coord,
        "half_encodings_per_coord": half,
        "block_encodings_vm": vm,
        "block_encodings_vm_prime": vmp,
        "permutations": perms,
        "total_gates": len(c.gates),
    }


# ---------------------------------------------------------------- serialization


def _gate_to_json(g: Gate) -> dict:
    if g.kind in ("rot_z", "rot_y", "global_phase"):
        return {"kind": g.kind, "angle": float(g.angle)}
    if g.kind == "encode":
        return {"kind": "encode", "coord": g.coord, "sign": g.sign, "half": g.half}
    if g.kind == "raw_unitary":
        return {
            "kind": "raw_unitary",
            "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in g.matrix],
        }
    if g.kind == "permutation":
        return {"kind": "permutation", "permutation": list(g.perm)}
    return {"kind": g.kind}


def _gate_from_json(doc, path: str) -> Gate:
    if not isinstance(doc, dict):
        raise SchemaError(path, "expected an object")
    if "kind" not in doc:
        raise SchemaError(f"{path}/kind", "missing required field")
    kind = doc["kind"]
    if kind not in GATE_KINDS:
        raise SchemaError(f"{path}/kind", f"unknown gate kind {kind!r}")
    if kind in ("rot_z", "rot_y", "global_phase"):
        a = doc.get("angle")
        if not _is_number(a) or not math.isfinite(a):
            raise SchemaError(f"{path}/angle", "expected a finite number")
        return Gate(kind, angle=float(a))
    if kind == "encode":
        k = doc.get("coord")
        s = doc.get("sign", 1)
        h = doc.get("half", False)
        if not _is_int(k) or k < 0:
            raise SchemaError(f"{path}/coord", "expected a nonnegative integer")
        if s not in (1, -1) or isinstance(s, bool):
            raise SchemaError(f"{path}/sign", "expected +1 or -1")
        if not isinstance(h, bool):
            raise SchemaError(f"{path}/half", "expected a boolean")
        return Gate("encode", coord=k, sign=s, half=h)
    if kind == "raw_unitary":
        rows = doc.get("matrix")
        if not isinstance(rows, list) or not rows:
            raise SchemaError(f"{path}/matrix", "expected a square list of [re, im] entries")
        d = len(rows)
        m = np.empty((d, d), dtype=complex)
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != d:
                raise SchemaError(f"{path}/matrix/{i}", f"expected {d} entries")
            for j, e in enumerate(row):
                if not isinstance(e, list) or len(e) != 2 or not all(_is_number(v) for v in e):
                    raise SchemaError(f"{path}/matrix/{i}/{j}", "expected [re, im]")
                m[i, j] = complex(e[0], e[1])
        if not np.all(np.isfinite(m)):
            raise SchemaError(f"{path}/matrix", "entries must be finite")
        return Gate("raw_unitary", matrix=m)
    if kind == "permutation":
        p = doc.get("permutation")
        if not isinstance(p, list) or not all(_is_int(v) for v in p):
            raise SchemaError(f"{path}/permutation", "expected a list of integers")
        if sorted(p) != list(range(len(p))):
            raise SchemaError(f"{path}/permutation", "not a bijection")
        return Gate("permutation", perm=tuple(p))
    return Gate(kind)


def circuit_to_json(c: CircuitIR) -> dict:
    return {
        "dim": c.dim,
        "arg_dim": c.arg_dim,
        "gate_order": GATE_ORDER_NOTE,
        "gates": [_gate_to_json(g) for g in c.gates],
        "meta": c.meta,
    }


def circuit_from_json(doc, path: str = "") -> CircuitIR:
    if not isinstance(doc, dict):
        raise SchemaError(path, "expected an object")
    for key in ("dim", "arg_dim", "gates"):
        if key not in doc:
            raise SchemaError(f"{path}/{key}", "missing required field")
    dim, m = doc["dim"], doc["arg_dim"]
    if not _is_int(dim) or dim < 2:
        raise SchemaError(f"{path}/dim", "expected an integer >= 2")
    if not _is_int(m) or m < 1:
        raise SchemaError(f"{path}/arg_dim", "expected a positive integer")
    if not isinstance(doc["gates"], list):
        raise SchemaError(f"{path}/gates", "expected a list")
    gates = []
    for i, gd in enumerate(doc["gates"]):
        g = _gate_from_json(gd, f"{path}/gates/{i}")
        if g.kind == "encode" and g.coord >= m:
            raise SchemaError(f"{path}/gates/{i}/coord", f"coord {g.coord} >= arg_dim {m}")
        if g.kind == "raw_unitary" and g.matrix.shape[0] != dim:
            raise SchemaError(f"{path}/gates/{i}/matrix", f"size {g.matrix.shape[0]} != dim {dim}")
        if g.kind == "permutation" and len(g.perm) != dim:
            raise SchemaError(f"{path}/gates/{i}/permutation", f"length {len(g.perm)} != dim {dim}")
        gates.append(g)
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise SchemaError(f"{path}/meta", "expected an object")
    try:
        return CircuitIR(dim, m, tuple(gates), meta)
    except ValidationError as exc:
        raise SchemaError(f"{path}/gates", str(exc)) from exc


def serialize(c: CircuitIR) -> str:
    return json.dumps(circuit_to_json(c), indent=1, allow_nan=False)


def deserialize(text: str) -> CircuitIR:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from exc
    return circuit_from_json(doc)


def write_samples_csv(X, values, extra: dict[str, np.ndarray] | None = None) -> str:
    """CSV text with header x0..x{m-1},re,im[,extra...] and 17-significant-digit floats."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    values = np.asarray(values, dtype=complex).reshape(-1)
    extra = extra or {}
    header = [f"x{k}" for k in range(X.shape[1])] + ["re", "im"] + list(extra)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    cols = [np.asarray(v, dtype=float).reshape(-1) for v in extra.values()]
    for i in range(X.shape[0]):
        row = [format(v, ".17g") for v in X[i]]
        row += [format(values[i].real, ".17g"), format(values[i].imag, ".17g")]
        row += [format(col[i], ".17g") for col in cols]
        w.writerow(row)
    return buf.getvalue()


def read_samples_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of write_samples_csv for the x/re/im columns."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SchemaError("", "empty CSV")
    header = rows[0]
    if "re" not in header or "im" not in header:
        raise SchemaError("/0", "header needs re and im columns")
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    ire, iim = header.index("re"), header.index("im")
    X = np.array([[float(r[i]) for i in xcols] for r in rows[1:]], dtype=float)
    y = np.array([complex(float(r[ire]), float(r[iim])) for r in rows[1:]])
    return X.reshape(-1, len(xcols)), y
