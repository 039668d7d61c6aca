"""Block encodings of several coordinates, the permutation gadgets that isolate
one coordinate, generalized Gell-Mann generators and the Euler map onto SU(N).

Two encodings are offered.  ``vm`` acts on 2m levels as
diag(e^{i pi x_1/2}, e^{-i pi x_1/2}, ..., e^{i pi x_m/2}, e^{-i pi x_m/2});
``vm_prime`` acts on m+1 levels as
diag(e^{i pi x_1/m}, ..., e^{i pi x_m/m}, e^{-i pi (x_1+...+x_m)/m}).

Blocks and coordinates are 1-based in the public constructors (``k`` in
1..m) and 0-based in permutation index lists.  A permutation ``perm`` maps
basis state i to perm[i].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    CircuitIR,
    Gate,
    block_encode_vm,
    block_encode_vm_prime,
    eval_first_column_batch,
    permutation,
    raw_unitary,
    resource_count,
)
from .exceptions import ConstructionError, ValidationError

__all__ = [
    "PermGadget",
    "EulerAngles",
    "build_vm",
    "build_vm_prime",
    "build_block_perm",
    "build_leading_perm",
    "build_Rk",
    "build_circular_perm",
    "build_Rk_prime",
    "rk_prime_tally",
    "gell_mann",
    "gell_mann_family",
    "euler_unitary",
    "compile_multiqubit",
    "multiqubit_equivalence",
]

VARIANTS = ("vm", "vm_prime")


def _coords(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise ValidationError("need a coordinate vector with m >= 1 entries")
    if not np.all(np.isfinite(x)):
        raise ValidationError("coordinates must be finite")
    return x


def _index(k: int, hi: int, name: str = "k") -> int:
    if int(k) != k or not 1 <= k <= hi:
        raise ValidationError(f"{name} = {k} outside 1..{hi}")
    return int(k)


def _perm_matrix(perm) -> np.ndarray:
    d = len(perm)
    p = np.zeros((d, d))
    p[list(perm), np.arange(d)] = 1.0
    return p


def _compose(first, second) -> tuple[int, ...]:
    """Permutation applying ``first`` and then ``second``."""
    return tuple(second[i] for i in first)


def _inverse(perm) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return tuple(inv)


# ---------------------------------------------------------------- encodings


def build_vm(x) -> np.ndarray:
    """2m x 2m diagonal encoding with a pair of opposite half phases per coordinate."""
    x = _coords(x)
    e = np.exp(0.5j * np.pi * x)
    d = np.empty(2 * x.size, dtype=complex)
    d[0::2] = e
    d[1::2] = e.conj()
    return np.diag(d)


def build_vm_prime(x) -> np.ndarray:
    """(m+1) x (m+1) diagonal encoding whose last entry cancels the determinant."""
    x = _coords(x)
    m = x.size
    d = np.empty(m + 1, dtype=complex)
    d[:m] = np.exp(1j * np.pi * x / m)
    d[m] = np.exp(-1j * np.pi * x.sum() / m)
    return np.diag(d)


# ---------------------------------------------------------------- permutation gadgets


@dataclass(frozen=True)
class PermGadget:
    kind: str  # "pairwise", "leading" or "circular"
    k: int
    perm: tuple[int, ...]
    j: int | None = None

    @property
    def matrix(self) -> np.ndarray:
        return _perm_matrix(self.perm)

    @property
    def dim(self) -> int:
        return len(self.perm)

    def gate(self) -> Gate:
        return permutation(self.perm)


def build_block_perm(k: int, m: int) -> PermGadget:
    """Swap the two levels of every block except block ``k``."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    k = _index(k, m)
    perm = list(range(2 * m))
    for b in range(m):
        if b != k - 1:
            perm[2 * b], perm[2 * b + 1] = 2 * b + 1, 2 * b
    return PermGadget("pairwise", k, tuple(perm))


def build_leading_perm(k: int, m: int) -> PermGadget:
    """Exchange block ``k`` with block 1 level by level (identity for k = 1)."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    k = _index(k, m)
    perm = list(range(2 * m))
    b = k - 1
    perm[0], perm[1], perm[2 * b], perm[2 * b + 1] = 2 * b, 2 * b + 1, 0, 1
    return PermGadget("leading", k, tuple(perm))


def _level_swap(dim: int) -> tuple[int, ...]:
    # swaps the two levels inside every block; turns each block phase around
    return tuple(i ^ 1 for i in range(dim))


def build_Rk(x, k: int, *, leading: bool = False) -> np.ndarray:
    """e^{i pi x_k Z} on block ``k`` and identity elsewhere, from two vm encodings.

    The product is V Pk V Pk: conjugating V by the pairwise gadget flips
    every block except block k, so the two half phases add up on block k and
    cancel on the others.  With ``leading=True`` block k is moved to the
    front by the leading gadget.
    """
    x = _coords(x)
    m = x.size
    pk = build_block_perm(k, m).matrix
    V = build_vm(x)
    R = V @ pk @ V @ pk
    if leading:
        p = build_leading_perm(k, m).matrix
        R = p @ R @ p.T
    return R


def build_circular_perm(k: int, j: int, m: int) -> PermGadget:
    """Cycle every one of the m+1 levels except level ``k`` forward by ``j``."""
    if m < 2:
        raise ValidationError("circular gadgets need m >= 2")
    k = _index(k, m + 1)
    j = _index(j, m - 1, "j")
    others = [i for i in range(m + 1) if i != k - 1]
    perm = list(range(m + 1))
    for i, pos in enumerate(others):
        perm[pos] = others[(i + j) % m]
    return PermGadget("circular", k, tuple(perm), j)


def rk_prime_tally(m: int) -> dict:
    """Gate counts of one vm_prime block, as built by ``build_Rk_prime``."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    if m == 1:
        return {"m": 1, "encodings": 1, "circular_permutations": 0, "formula": "1 for m = 1"}
    return {
        "m": m,
        "encodings": m * m - 1,
        "circular_permutations": 2 * m - 2,
        "formula": "encodings = (m-1) + m(m-1) = m^2 - 1; circular permutations = 2m - 2",
    }


def _relabel(k: int, m: int) -> tuple[int, ...]:
    # transposition of levels 0 and k-1: makes coordinate k play the role of coordinate 1
    perm = list(range(m + 1))
    perm[0], perm[k - 1] = k - 1, 0
    return tuple(perm)


def _rk_prime_program(k: int, m: int):
    """Application-ordered list of ("enc", None) / ("perm", tuple) steps for one block."""
    if m == 1:
        return [("enc", None)]
    T = _relabel(k, m)
    first: list = []
    for j in range(1, m):
        c = build_circular_perm(1, j, m).perm
        # C V C^{-1}: apply C^{-1}, then V, then C
        first += [("perm", _inverse(c)), ("enc", None), ("perm", c)]
    prog = list(first)
    for j in range(1, m + 1):
        if j == m:
            prog += first
            continue
        c = build_circular_perm(2, j, m).perm
        prog += [("perm", _inverse(c))] + first + [("perm", c)]
    # T V(x) T = V(x with coordinates 1 and k exchanged)
    if k != 1:
        prog = [s for op in prog for s in ([("perm", T), op, ("perm", T)] if op[0] == "enc" else [op])]
    return prog


def build_Rk_prime(x, k: int, *, return_report: bool = False):
    """Literal vm_prime block for coordinate ``k``.

    The first stage multiplies the m-1 conjugates of V' by the circular
    gadgets fixing level 1; the second multiplies the m conjugates of that
    product by the circular gadgets fixing level 2 (the last one being the
    identity) and applies them after the first stage.  Coordinate k is moved
    into the role of coordinate 1 by exchanging levels 1 and k around each
    encoding.  The intended result is e^{i pi x_k Z} on levels (1, 2) and the
    identity elsewhere; the report records how far the product lands from it.
    """
    x = _coords(x)
    m = x.size
    k = _index(k, m)
    V = build_vm_prime(x)
    U = np.eye(m + 1, dtype=complex)
    n_enc = 0
    perms_used = set()
    for op, p in _rk_prime_program(k, m):
        if op == "enc":
            U = V @ U
            n_enc += 1
        else:
            U = _perm_matrix(p) @ U
            perms_used.add(p)
    if not return_report:
        return U
    target = np.eye(m + 1, dtype=complex)
    target[0, 0] = np.exp(1j * np.pi * x[k - 1])
    target[1, 1] = np.exp(-1j * np.pi * x[k - 1])
    overlap = np.vdot(target, U)
    aligned = U * np.exp(-1j * np.angle(overlap)) if abs(overlap) > 0 else U
    circular = {
        build_circular_perm(p, j, m).perm for p in (1, 2) for j in range(1, m)
    } if m > 1 else set()
    report = {
        "m": m,
        "k": k,
        "relabel": list(_relabel(k, m)) if k != 1 and m > 1 else None,
        "encodings": n_enc,
        "circular_permutations": len(circular & perms_used) if m > 1 else 0,
        "tally": rk_prime_tally(m),
        "abs_dist": float(np.linalg.norm(U - target)),
        "phase_aligned_dist": float(np.linalg.norm(aligned - target)),
    }
    return U, report


# ---------------------------------------------------------------- SU(N) parameterization


def gell_mann(index: int, N: int) -> np.ndarray:
    """Generalized Gell-Mann matrix number ``index`` (1..N^2-1) of su(N).

    Ordering: for column c = 2..N the generators (c-1)^2 .. c^2-1 are, in
    turn, the symmetric and antisymmetric pairs of rows (r, c) for
    r = 1..c-1 followed by the diagonal generator with ones on the first
    c-1 levels.  Index 3 is diag(1, -1, 0, ...), index (c-1)^2+1 is the
    antisymmetric (1, c) generator and index N^2-1 is the last diagonal one.
    """
    if N < 2:
        raise ValidationError("N must be >= 2")
    if int(index) != index or not 1 <= index <= N * N - 1:
        raise ValidationError(f"index {index} outside 1..{N * N - 1}")
    c = math.isqrt(int(index)) + 1  # (c-1)^2 <= index < c^2
    g = np.zeros((N, N), dtype=complex)
    if index == c * c - 1:
        g[np.arange(c - 1), np.arange(c - 1)] = 1.0
        g[c - 1, c - 1] = -(c - 1)
        return g * math.sqrt(2.0 / (c * (c - 1)))
    off = index - (c - 1) ** 2
    r = off // 2
    if off % 2 == 0:
        g[r, c - 1] = g[c - 1, r] = 1.0
    else:
        g[r, c - 1] = -1j
        g[c - 1, r] = 1j
    return g


def gell_mann_family(N: int) -> list[np.ndarray]:
    return [gell_mann(i, N) for i in range(1, N * N)]


@dataclass(frozen=True)
class EulerAngles:
    N: int
    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.angles, dtype=float).reshape(-1)
        if self.N < 2:
            raise ValidationError("N must be >= 2")
        if a.size != self.N * self.N - 1:
            raise ValidationError(f"SU({self.N}) needs {self.N * self.N - 1} angles, got {a.size}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("angles must be finite")
        object.__setattr__(self, "angles", a)


def _exp_diag(N: int, c: int, t: float) -> np.ndarray:
    # exp(i t g) for the diagonal generator closing column c
    scale = math.sqrt(2.0 / (c * (c - 1)))
    d = np.ones(N, dtype=complex)
    d[: c - 1] = np.exp(1j * t * scale)
    d[c - 1] = np.exp(-1j * t * scale * (c - 1))
    return np.diag(d)


def _exp_antisym(N: int, c: int, t: float) -> np.ndarray:
    # exp(i t g) for the antisymmetric (1, c) generator: a plane rotation
    u = np.eye(N, dtype=complex)
    u[0, 0] = u[c - 1, c - 1] = math.cos(t)
    u[0, c - 1] = math.sin(t)
    u[c - 1, 0] = -math.sin(t)
    return u


def euler_unitary(a: EulerAngles | tuple) -> np.ndarray:
    """Recursive Euler map onto SU(N).

    U_N = prod_{c=2..N} [exp(i t g_3) exp(i t' g_{(c-1)^2+1})]
          * (U_{N-1} on the first N-1 levels) * exp(i t'' g_{N^2-1}),
    consuming 2(N-1) + ((N-1)^2 - 1) + 1 = N^2 - 1 angles in that order.
    """
    if not isinstance(a, EulerAngles):
        N, angles = a
        a = EulerAngles(int(N), angles)
    return _euler(a.N, a.angles)


def _euler(N: int, angles: np.ndarray) -> np.ndarray:
    U = np.eye(N, dtype=complex)
    pos = 0
    for c in range(2, N + 1):
        U = U @ _exp_diag(N, 2, angles[pos]) @ _exp_antisym(N, c, angles[pos + 1])
        pos += 2
    if N > 2:
        sub = np.eye(N, dtype=complex)
        n_sub = (N - 1) ** 2 - 1
        sub[: N - 1, : N - 1] = _euler(N - 1, angles[pos : pos + n_sub])
        U = U @ sub
        pos += n_sub
    return U @ _exp_diag(N, N, angles[pos])


# ---------------------------------------------------------------- circuit lifting


def _vm_program(g: Gate, m: int):
    """Steps realizing an encode gate of a single-qubit circuit on the leading vm block."""
    k = g.coord + 1
    P = build_leading_perm(k, m).perm
    S = _level_swap(2 * m)
    if g.half:
        core = [("perm", P), ("enc", None), ("perm", P)]
    else:
        pk = build_block_perm(k, m).perm
        # P (V pk V pk) P; P is an involution
        core = [("perm", P), ("perm", pk), ("enc", None), ("perm", pk), ("enc", None), ("perm", P)]
    if g.sign < 0:
        core = [("perm", S)] + core + [("perm", S)]
    return core


def _vm_prime_program(g: Gate, m: int):
    if g.half:
        raise ConstructionError(
            "the vm_prime encoding has no half-angle block; half encodings cannot be lifted"
        )
    prog = _rk_prime_program(g.coord + 1, m)
    if g.sign < 0:
        X = list(range(m + 1))
        X[0], X[1] = 1, 0
        X = tuple(X)
        prog = [("perm", X)] + prog + [("perm", X)]
    return prog


def _embed_raw(mat: np.ndarray, dim: int) -> np.ndarray:
    out = np.eye(dim, dtype=complex)
    out[:2, :2] = mat
    return out


def compile_multiqubit(circuit: CircuitIR, variant: str = "vm") -> CircuitIR:
    """Lift a single-qubit circuit on m coordinates onto a block-encoded register.

    Rotations keep acting on the leading two levels.  Every encoding gate is
    replaced by block encodings sandwiched between permutations so that the
    leading block sees exactly the original encoding; consecutive
    permutations are merged.
    """
    if variant == "vm-prime":
        variant = "vm_prime"
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    if circuit.dim != 2:
        raise ValidationError("compile_multiqubit expects a single-qubit (dim 2) circuit")
    m = circuit.arg_dim
    dim = 2 * m if variant == "vm" else m + 1
    enc = block_encode_vm() if variant == "vm" else block_encode_vm_prime()
    gates: list[Gate] = []
    pending: tuple[int, ...] | None = None
    ident = tuple(range(dim))

    def flush():
        nonlocal pending
        if pending is not None and pending != ident:
            gates.append(permutation(pending))
        pending = None

    per_block = []
    for g in circuit.gates:
        if g.kind == "encode":
            prog = _vm_program(g, m) if variant == "vm" else _vm_prime_program(g, m)
            per_block.append(sum(1 for op, _ in prog if op == "enc"))
            for op, p in prog:
                if op == "perm":
                    pending = p if pending is None else _compose(pending, p)
                else:
                    flush()
                    gates.append(enc)
        elif g.kind in ("rot_z", "rot_y", "global_phase"):
            flush()
            gates.append(g)
        elif g.kind == "raw_unitary":
            flush()
            gates.append(raw_unitary(_embed_raw(g.matrix, dim)))
        else:
            raise ValidationError(f"cannot lift gate kind {g.kind!r}")
    flush()
    counts = resource_count(CircuitIR(dim, m, tuple(gates)))
    meta = {
        "variant": variant,
        "m": m,
        "dim": dim,
        "source_encodings": len(per_block),
        "block_encodings": counts["block_encodings_vm"] + counts["block_encodings_vm_prime"],
        "block_encodings_per_full_encoding": 2 if variant == "vm" else rk_prime_tally(m)["encodings"],
        "block_encodings_per_half_encoding": 1 if variant == "vm" else None,
        "permutations": counts["permutations"],
        "leading_block": "levels 0 and 1 carry the single-qubit circuit; coordinate k is moved there by the leading gadget",
    }
    return CircuitIR(dim, m, tuple(gates), meta)


def multiqubit_equivalence(single: CircuitIR, lifted: CircuitIR, X) -> dict:
    """Compare h and the leaked amplitude of a lifted circuit with its source."""
    X = np.asarray(X, dtype=float)
    a = eval_first_column_batch(single, X)
    b = eval_first_column_batch(lifted, X)
    return {
        "h_sup": float(np.max(np.abs(a[:, 0] - b[:, 0]))),
        "column_sup": float(np.max(np.abs(a - b[:, :2]))),
        "leak_sup": float(np.max(np.abs(b[:, 2:]))) if b.shape[1] > 2 else 0.0,
        "points": int(X.shape[0]),
    }
