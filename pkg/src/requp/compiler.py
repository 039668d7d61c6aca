"""Fixed-encoding replacements for tunable-weight gates, and whole-model compilation.

A gate e^{i w x Z} is split as K exact encodings (K = nearest integer to
w / pi) followed by a synthesized circuit for the remainder r = w - K pi,
whose top-left entry is the Cesaro mean of the mirrored phase function.
Errors of the individual gates add up along the circuit, so a model with
per-gate Frobenius errors e_jk is reproduced to within sum(e_jk).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .circuit import (
    CircuitIR,
    WModel,
    encode,
    eval_first_column_batch,
    eval_h_batch,
    eval_wmodel_batch,
    wmodel_to_circuit,
)
from .exceptions import SchemaError, ValidationError, VerificationError
from .fourier import LaurentPoly, aux_coefficients, cesaro_mean, choose_N, reduce_weight
from .gqsp import PhaseSequence, synthesize
from .grid import GridSpec, default_grid
from . import _kernels

__all__ = [
    "WeightGatePlan",
    "CompileReport",
    "CesaroSpec",
    "approx_weight_gate",
    "gate_frobenius_errors",
    "error_budget",
    "compile_wmodel",
    "fit_wmodel",
    "eval_uat_cesaro",
    "spec_from_plans",
    "is_exact_weight",
]

EXACT_TOL = 1e-12
_MAX_RETRIES = 8


@dataclass(frozen=True, eq=False)
class WeightGatePlan:
    w: float
    K: int
    remainder: float
    N: int
    phases: PhaseSequence | None
    measured_error: float
    coord: int = 0
    mode: str = "frobenius"
    polynomial: LaurentPoly | None = None

    def to_json(self) -> dict:
        return {
            "w": self.w,
            "K": self.K,
            "remainder": self.remainder,
            "N": self.N,
            "coord": self.coord,
            "mode": self.mode,
            "measured_error": self.measured_error,
            "phases": None if self.phases is None else self.phases.to_json(),
        }

    @property
    def encodings(self) -> int:
        return abs(self.K) + 2 * self.N


def is_exact_weight(w: float) -> bool:
    return abs(reduce_weight(w)[1]) <= EXACT_TOL


def _check_grid(grid):
    """(search grid, verification points) for a weight gate.

    A tensor grid is reduced to the one-dimensional grid of its axis values,
    which keeps the order search on the FFT path.
    """
    if grid is None:
        grid = GridSpec(1, 4096)
    if isinstance(grid, GridSpec):
        axis = GridSpec(1, grid.n, grid.shifted)
        return axis, axis.points[:, 0]
    x = np.asarray(grid, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValidationError("empty verification grid")
    return x, x


def gate_frobenius_errors(circ: CircuitIR, w: float, x: np.ndarray, coord: int = 0) -> np.ndarray:
    """||U(x) - e^{i w x Z}||_F along coordinate ``coord`` for an SU(2) circuit.

    For two matrices of the form [[a, -b*], [b, a*]] the Frobenius distance
    is sqrt(2) times the distance of their first columns.
    """
    for g in circ.gates:
        if g.kind in ("global_phase", "raw_unitary", "permutation") or circ.dim != 2:
            raise ValidationError("gate_frobenius_errors needs a rotation/encoding circuit in dim 2")
    X = np.zeros((x.size, circ.arg_dim))
    X[:, coord] = x
    col = eval_first_column_batch(circ, X)
    target = np.exp(1j * w * x)
    return np.sqrt(2.0 * (np.abs(col[:, 0] - target) ** 2 + np.abs(col[:, 1]) ** 2))


def approx_weight_gate(
    w: float,
    eps: float,
    *,
    mode: str = "frobenius",
    grid=None,
    coord: int = 0,
    arg_dim: int = 1,
    ceiling: int | None = None,
) -> tuple[CircuitIR, WeightGatePlan]:
    """Fixed-encoding circuit within Frobenius distance ``eps`` of e^{i w x Z} on the grid.

    ``mode`` selects the Cesaro order: ``frobenius`` (default) searches on the
    measured Frobenius error directly, ``analytic`` and ``adaptive`` use the
    conservative sup-error target eps**2/6.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if not math.isfinite(w):
        raise ValidationError("w must be finite")
    search, x = _check_grid(grid)
    K, r = reduce_weight(w)
    lead = [encode(coord, 1 if K > 0 else -1)] * abs(K)
    if abs(r) <= EXACT_TOL:
        circ = CircuitIR(2, arg_dim, tuple(lead))
        err = float(np.max(gate_frobenius_errors(circ, w, x, coord))) if lead else float(abs(r) * np.max(np.abs(x)) * math.sqrt(2))
        plan = WeightGatePlan(float(w), K, float(r), 0, None, err, coord, mode)
        return CircuitIR(2, arg_dim, circ.gates, {"weight_gate": plan.to_json()}), plan

    N = choose_N(r, eps, mode, grid=search, ceiling=ceiling)
    attempts = []
    for _ in range(_MAX_RETRIES):
        F = cesaro_mean(aux_coefficients(r, N), N)
        syn = synthesize(F, coord=coord, arg_dim=arg_dim, grid=search)
        x = syn.x
        circ = CircuitIR(2, arg_dim, tuple(lead) + syn.circuit.gates)
        # the leading encodings are exact and only rotate the column by
        # e^{i K pi x}, so the remainder circuit's column decides the error
        a, b = syn.column[:, 0], syn.column[:, 1]
        err = float(np.max(np.sqrt(2.0 * (np.abs(a - np.exp(1j * r * x)) ** 2 + np.abs(b) ** 2))))
        attempts.append((N, err))
        if err <= eps:
            break
        if mode != "frobenius":
            raise VerificationError(
                f"weight gate w={w:.6g}: measured Frobenius error {err:.3e} > eps {eps:.3e} at N={N}"
            )
        N = int(math.ceil(1.25 * N)) + 1
    else:
        raise VerificationError(f"weight gate w={w:.6g} did not reach eps {eps:.3e}; tried {attempts}")
    plan = WeightGatePlan(float(w), K, float(r), N, syn.phases, err, coord, mode, F)
    meta = {"weight_gate": plan.to_json(), "synthesis": syn.meta, "attempts": attempts}
    return CircuitIR(2, arg_dim, circ.gates, meta), plan


def error_budget(wm: WModel, eps: float, policy: str = "uniform") -> np.ndarray:
    """Per-gate tolerance matrix (L, m); exact gates get zero."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if policy != "uniform":
        raise ValidationError(f"unknown budget policy {policy!r}")
    L, m = wm.L, wm.m
    budget = np.zeros((L, m))
    if L == 0:
        return budget
    share = eps / (L * m)
    for j in range(L):
        for k in range(m):
            if not is_exact_weight(wm.weights[j, k]):
                budget[j, k] = share
    return budget


@dataclass(frozen=True, eq=False)
class CompileReport:
    per_gate_errors: np.ndarray
    budgets: np.ndarray
    budget: float
    measured_sup: float
    grid: GridSpec
    plans: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def per_gate_sum(self) -> float:
        return float(np.sum(self.per_gate_errors))

    @property
    def slack(self) -> float:
        return self.budget - self.measured_sup

    def to_json(self) -> dict:
        return {
            "per_gate_errors": self.per_gate_errors.tolist(),
            "budgets": self.budgets.tolist(),
            "budget": self.budget,
            "measured_sup": self.measured_sup,
            "per_gate_sum": self.per_gate_sum,
            "slack": self.slack,
            "grid": self.grid.describe(),
            "plans": [[p.to_json() for p in row] for row in self.plans],
            "meta": self.meta,
        }


def compile_wmodel(
    wm: WModel,
    eps: float,
    *,
    grid: GridSpec | None = None,
    mode: str = "frobenius",
    policy: str = "uniform",
    ceiling: int | None = None,
) -> tuple[CircuitIR, CompileReport]:
    """Replace every tunable gate of ``wm`` by a fixed-encoding block.

    Rotations are copied verbatim.  Each weight gate is verified on the
    distinct values its coordinate takes on ``grid``; the whole circuit is
    then compared with the model on every grid point.
    """
    grid = default_grid(wm.m) if grid is None else grid
    if grid.m != wm.m:
        raise ValidationError(f"grid dimension {grid.m} != model dimension {wm.m}")
    budgets = error_budget(wm, eps, policy)
    axis = GridSpec(1, grid.n, grid.shifted)
    plans = [[None] * wm.m for _ in range(wm.L)]
    blocks = {}
    errors = np.zeros((wm.L, wm.m))
    for j in range(wm.L):
        for k in range(wm.m):
            w = float(wm.weights[j, k])
            tol = budgets[j, k] if budgets[j, k] > 0 else eps
            circ, plan = approx_weight_gate(
                w, tol, mode=mode, grid=axis, coord=k, arg_dim=wm.m, ceiling=ceiling
            )
            plans[j][k] = plan
            blocks[(j + 1, k)] = circ.gates
            errors[j, k] = plan.measured_error
    circuit = wmodel_to_circuit(wm, lambda j, k, w: blocks[(j, k)])
    X = grid.points
    measured = float(np.max(np.abs(eval_h_batch(circuit, X) - eval_wmodel_batch(wm, X))))
    total = float(np.sum(errors))
    if measured > total + 1e-9:
        raise VerificationError(
            f"measured sup {measured:.3e} exceeds the sum of per-gate errors {total:.3e}"
        )
    counts = [sum(plans[j][k].encodings for j in range(wm.L)) for k in range(wm.m)]
    meta = {
        "eps": eps,
        "policy": policy,
        "mode": mode,
        "encodings_per_coord": counts,
        "gate_order": "closing block, then layers L..1; coordinates 0..m-1 inside a layer",
    }
    report = CompileReport(errors, budgets, float(eps), measured, grid, tuple(tuple(r) for r in plans), meta)
    circuit = CircuitIR(circuit.dim, circuit.arg_dim, circuit.gates, {"compile": report.to_json()})
    return circuit, report


# ---------------------------------------------------------------- fitting


def _unpack(theta: np.ndarray, L: int, m: int) -> WModel:
    th = theta[: L + 1]
    ph = theta[L + 1 : 2 * L + 2]
    lam = theta[2 * L + 2]
    W = theta[2 * L + 3 :].reshape(L, m)
    return WModel(th, ph, W, float(lam))


def fit_wmodel(
    X,
    y,
    L: int,
    *,
    seed: int = 0,
    n_starts: int = 16,
    max_nfev: int = 2000,
    weight_scale: float = math.pi,
) -> WModel:
    """Multi-start least-squares fit of a WModel to complex samples.

    Starts are drawn from a generator seeded with ``seed``; the best start is
    returned with the mean squared residual of every start in ``meta``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if X.shape[0] != y.size or y.size == 0:
        raise ValidationError("X and y must have the same nonzero length")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("samples must be finite")
    if L < 1:
        raise ValidationError("L must be >= 1")
    m = X.shape[1]
    n = y.size
    scale = 1.0 / math.sqrt(n)

    def resid(theta):
        d = eval_wmodel_batch(_unpack(theta, L, m), X) - y
        return np.concatenate([d.real, d.imag]) * scale

    rng = np.random.default_rng(seed)
    size = 2 * L + 3 + L * m
    best = None
    history = []
    for s in range(n_starts):
        start = np.concatenate(
            [rng.uniform(-math.pi, math.pi, 2 * L + 3), rng.uniform(-weight_scale, weight_scale, L * m)]
        )
        method = "lm" if 2 * n >= size else "trf"
        sol = least_squares(resid, start, method=method, max_nfev=max_nfev, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        mse = float(2.0 * sol.cost)
        history.append(mse)
        if best is None or mse < best[0]:
            best = (mse, sol.x, s)
    mse, theta, s = best
    wm = _unpack(theta, L, m)
    return WModel(wm.thetas, wm.phis, wm.weights, wm.lam, {"residual": mse, "start": s, "residuals": history, "seed": seed})


# ---------------------------------------------------------------- classical oracle


@dataclass(frozen=True, eq=False)
class CesaroSpec:
    """g(x) = sum_j gamma_j prod_k sum_n c[j, k, n] e^{i pi n x_k}, n = -N..N."""

    gammas: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        g = np.array(self.gammas, dtype=complex).reshape(-1)
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[0] != g.size or c.shape[2] % 2 != 1:
            raise ValidationError("coeffs must have shape (J, m, 2N+1) matching gammas")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(c))):
            raise ValidationError("spec entries must be finite")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def max_mode(self) -> int:
        return (self.coeffs.shape[2] - 1) // 2

    def to_json(self) -> dict:
        return {
            "kind": "cesaro_spec",
            "max_mode": self.max_mode,
            "gammas": [[float(v.real), float(v.imag)] for v in self.gammas],
            "coeffs": [
                [[[float(v.real), float(v.imag)] for v in row] for row in term] for term in self.coeffs
            ],
        }

    @classmethod
    def from_json(cls, doc, path: str = "") -> "CesaroSpec":
        if not isinstance(doc, dict):
            raise SchemaError(path, "expected an object")
        for key in ("max_mode", "gammas", "coeffs"):
            if key not in doc:
                raise SchemaError(f"{path}/{key}", "missing required field")
        try:
            g = np.array([complex(a, b) for a, b in doc["gammas"]])
            c = np.array([[[complex(a, b) for a, b in row] for row in term] for term in doc["coeffs"]])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}/coeffs", f"malformed [re, im] entries: {exc}") from exc
        if c.ndim != 3 or c.shape[2] != 2 * doc["max_mode"] + 1:
            raise SchemaError(f"{path}/coeffs", "shape does not match max_mode")
        try:
            return cls(g, c)
        except ValidationError as exc:
            raise SchemaError(path, str(exc)) from exc


def eval_uat_cesaro(spec: CesaroSpec, X) -> np.ndarray:
    """Evaluate the factorized sum at points X of shape (n, m) (or a single m-vector)."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1 and X.size == spec.m and spec.m > 1 or X.ndim == 0
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(1, -1) if single else X.reshape(-1, 1)
    if X.shape[1] != spec.m:
        raise ValidationError(f"expected points of dimension {spec.m}")
    out = np.zeros(X.shape[0], dtype=complex)
    cols = [np.ascontiguousarray(X[:, k]) for k in range(spec.m)]
    for j, gamma in enumerate(spec.gammas):
        term = np.full(X.shape[0], gamma, dtype=complex)
        for k in range(spec.m):
            term *= _kernels.horner_modes(np.ascontiguousarray(spec.coeffs[j, k]), cols[k])
        out += term
    return out[0] if single else out


def spec_from_plans(plans, m: int) -> CesaroSpec:
    """Single-term spec prod_k e^{i K_k pi x_k} P_k(x_k) from one row of weight-gate plans.

    ``plans[k]`` covers coordinate k; P_k is the Cesaro mean used for the
    remainder (1 when the weight is an exact multiple of pi).
    """
    polys = []
    for k in range(m):
        p = plans[k]
        base = p.polynomial.coeffs if p.polynomial is not None else np.ones(1, dtype=complex)
        N = (base.size - 1) // 2
        shifted = np.zeros(2 * (N + abs(p.K)) + 1, dtype=complex)
        # multiplying by e^{i K pi x} moves every mode up by K
        start = abs(p.K) + p.K
        shifted[start : start + base.size] = base
        polys.append(shifted)
    width = max(v.size for v in polys)
    coeffs = np.zeros((1, m, width), dtype=complex)
    for k, v in enumerate(polys):
        pad = (width - v.size) // 2
        coeffs[0, k, pad : pad + v.size] = v
    return CesaroSpec(np.ones(1), coeffs)
