"""Single-qubit synthesis of bounded trigonometric polynomials.

A degree-d polynomial pair (P, Q) with |P|^2 + |Q|^2 = 1 on the unit circle
is the first column of

    U(z) = R(theta_d, phi_d, 0) A(z) ... A(z) R(theta_0, phi_0, lam),
    A(z) = diag(z, 1),

and the angles are recovered by peeling one layer at a time.  Negative modes
come from realizing some of the ``A`` slots with the inverted encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .circuit import CircuitIR, encode, eval_first_column_batch, ry, rz
from .exceptions import BoundViolationError, ConditioningError, SchemaError, ValidationError
from .fourier import LaurentPoly, eval_poly, eval_poly_grid
from .grid import GridSpec

__all__ = [
    "PhaseSequence",
    "SynthesisResult",
    "build_R",
    "canonical_angle",
    "complete_polynomial",
    "gqsp_phases",
    "phase_product",
    "phases_to_circuit",
    "synthesize",
    "synthesize_fourier",
    "circle_max",
]

PAIR_TOL = 1e-6
ROOTS_MAX_DEGREE = 16
ROOTS_CEILING = 1024
CONSTRAINT_TOL = 1e-9
STRIP_TOL = 1e-8


def canonical_angle(a: float) -> float:
    """Map into (-pi, pi]; -pi itself goes to pi."""
    r = math.remainder(float(a), 2 * math.pi)
    return math.pi if r <= -math.pi else r


@dataclass(frozen=True, eq=False)
class PhaseSequence:
    thetas: np.ndarray
    phis: np.ndarray
    lam: float

    def __post_init__(self):
        th = np.array([canonical_angle(v) for v in np.asarray(self.thetas, dtype=float).reshape(-1)])
        ph = np.array([canonical_angle(v) for v in np.asarray(self.phis, dtype=float).reshape(-1)])
        if th.size == 0 or th.size != ph.size:
            raise ValidationError("thetas and phis need equal length L + 1 >= 1")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(ph)) and math.isfinite(self.lam)):
            raise ValidationError("angles must be finite")
        th.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "phis", ph)
        object.__setattr__(self, "lam", canonical_angle(self.lam))

    @property
    def degree(self) -> int:
        return self.thetas.size - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhaseSequence):
            return NotImplemented
        return (
            self.degree == other.degree
            and bool(np.all(self.thetas == other.thetas))
            and bool(np.all(self.phis == other.phis))
            and self.lam == other.lam
        )

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "thetas": [float(v) for v in self.thetas],
            "phis": [float(v) for v in self.phis],
            "lambda": float(self.lam),
        }

    @classmethod
    def from_json(cls, doc, path: str = "") -> "PhaseSequence":
        if not isinstance(doc, dict):
            raise SchemaError(path, "expected an object")
        for key in ("degree", "thetas", "phis", "lambda"):
            if key not in doc:
                raise SchemaError(f"{path}/{key}", "missing required field")
        L = doc["degree"]
        if not isinstance(L, int) or isinstance(L, bool) or L < 0:
            raise SchemaError(f"{path}/degree", "must be a nonnegative integer")
        for key in ("thetas", "phis"):
            v = doc[key]
            if not isinstance(v, list) or len(v) != L + 1:
                raise SchemaError(f"{path}/{key}", f"expected {L + 1} numbers")
            for i, a in enumerate(v):
                if not isinstance(a, (int, float)) or isinstance(a, bool) or not math.isfinite(a):
                    raise SchemaError(f"{path}/{key}/{i}", "expected a finite number")
        lam = doc["lambda"]
        if not isinstance(lam, (int, float)) or isinstance(lam, bool) or not math.isfinite(lam):
            raise SchemaError(f"{path}/lambda", "expected a finite number")
        return cls(np.array(doc["thetas"], float), np.array(doc["phis"], float), float(lam))


@dataclass(frozen=True)
class SynthesisResult:
    phases: PhaseSequence
    complement: LaurentPoly
    residual: float
    circuit: CircuitIR
    meta: dict = field(default_factory=dict)
    # evaluation points and the circuit's first column there
    x: np.ndarray | None = field(default=None, repr=False)
    column: np.ndarray | None = field(default=None, repr=False)


def build_R(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [np.exp(1j * (phi + lam)) * c, np.exp(1j * phi) * s],
            [np.exp(1j * lam) * s, -c],
        ],
        dtype=complex,
    )


# ---------------------------------------------------------------- completion


def circle_max(p: np.ndarray, M: int | None = None) -> tuple[float, float]:
    """(max |p(z)|, x at the max) over M equispaced points z = e^{i pi x}, x in [0, 2)."""
    d = p.size - 1
    if M is None:
        M = max(8192, 1 << int(math.ceil(math.log2(8 * (d + 1)))))
    v = np.abs(_circle_values(p, M))
    j = int(np.argmax(v))
    return float(v[j]), 2.0 * j / M


def _circle_values(p: np.ndarray, M: int) -> np.ndarray:
    # p(e^{2 pi i j / M}) for ascending coefficients p, folding if M <= degree
    if p.size > M:
        folded = np.zeros(M, dtype=complex)
        np.add.at(folded, np.arange(p.size) % M, p)
        p = folded
    return np.fft.ifft(p, M) * M


def _constraint_residual(p: np.ndarray, q: np.ndarray, M: int | None = None) -> float:
    d = max(p.size, q.size) - 1
    if M is None:
        M = max(4096, 1 << int(math.ceil(math.log2(4 * (d + 1)))))
    return float(np.max(np.abs(np.abs(_circle_values(p, M)) ** 2 + np.abs(_circle_values(q, M)) ** 2 - 1.0)))


def _origin_roots(p: np.ndarray) -> int:
    """Number of roots at the origin of z^d (1 - p(z) conj(p)(1/z)).

    With ``a`` exact zeros at the low end of ``p`` and ``b`` at the high end
    the correlation term lives on offsets |k| <= d - a - b, so the lowest
    ``min(a + b, d)`` coefficients vanish exactly.
    """
    d = p.size - 1
    nz = np.nonzero(p != 0)[0]
    if nz.size == 0:
        return d
    a = int(nz[0])
    b = d - int(nz[-1])
    return min(a + b, d)


def _balance_trivial_roots(q: np.ndarray, k: int) -> np.ndarray:
    # the k (origin, infinity) root pairs are split evenly: a completion with
    # all k roots at the origin is shifted down by k // 2
    shift = k // 2
    if shift == 0:
        return q
    out = np.zeros_like(q)
    out[: q.size - shift] = q[shift:]
    return out


def _normalize(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    # least-squares scale so that |q|^2 matches 1 - |p|^2 over the circle
    d = p.size - 1
    M = max(4096, 1 << int(math.ceil(math.log2(4 * (d + 1)))))
    A = 1.0 - np.abs(_circle_values(p, M)) ** 2
    B = np.abs(_circle_values(q, M)) ** 2
    denom = float(np.sum(B * B))
    if denom == 0.0:
        return q
    return q * math.sqrt(max(float(np.sum(A * B)) / denom, 0.0))


def _complete_roots(p: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    """Complement by rooting z^d (1 - p(z) conj(p)(1/z)) and keeping the inner roots."""
    d = p.size - 1
    if d > ROOTS_CEILING:
        raise ConditioningError(f"root-based completion is limited to degree {ROOTS_CEILING}")
    ac = -np.convolve(p, np.conj(p[::-1]))
    ac[d] += 1.0
    nz = np.nonzero(np.abs(ac) > 0)[0]
    if nz.size == 0:
        return np.zeros_like(p)
    low = int(nz[0])
    roots = np.roots(ac[::-1]) if ac[low:].size > 1 else np.zeros(0, dtype=complex)
    roots = roots[np.abs(roots) > 0]  # exact zero roots are the origin/infinity pairs
    mod = np.abs(roots)
    boundary = np.abs(mod - 1.0) <= PAIR_TOL
    inner = roots[(mod < 1.0) & ~boundary]
    outer = roots[(mod > 1.0) & ~boundary]
    defect = 0.0
    for r in inner:
        partner = 1.0 / np.conj(r)
        defect = max(defect, float(np.min(np.abs(outer - partner))) if outer.size else math.inf)
    if inner.size != outer.size or defect > PAIR_TOL:
        raise ConditioningError(
            f"root pairing failed: max pairing defect {defect:.3e}", defect=defect
        )
    on = roots[boundary]
    if on.size % 2:
        raise ConditioningError(f"odd number ({on.size}) of unit-circle roots", defect=float(on.size))
    on = on[np.argsort(np.angle(on))]
    chosen = np.concatenate([inner, on[0::2]])
    if rng is not None:
        chosen = rng.permutation(chosen)
    # low zero coefficients of z^d A are roots at the origin, matched by roots at infinity
    n_zero = low
    q = np.poly(np.concatenate([chosen, np.zeros(n_zero)]))[::-1] if chosen.size + n_zero else np.ones(1)
    q = np.concatenate([q, np.zeros(d + 1 - q.size)]) if q.size < d + 1 else q[: d + 1]
    return _normalize(p, q.astype(complex))


def _complete_cepstral(p: np.ndarray, tol: float = 1e-11) -> np.ndarray:
    """Minimum-phase spectral factor of 1 - |p|^2 via the folded cepstrum."""
    d = p.size - 1
    M = 1 << int(math.ceil(math.log2(max(16 * (d + 1), 1024))))
    best = None
    while True:
        A = 1.0 - np.abs(np.fft.fft(p, M)) ** 2
        A = np.maximum(A, 1e-15)
        c = np.fft.ifft(np.log(A))
        h = np.zeros(M, dtype=complex)
        h[0] = 0.5 * c[0]
        h[1 : M // 2] = c[1 : M // 2]
        h[M // 2] = 0.5 * c[M // 2]
        qmin = np.fft.ifft(np.exp(np.fft.fft(h)))[: d + 1]
        q = np.conj(qmin[::-1])
        res = _constraint_residual(p, q)
        if best is None or res < best[0]:
            best = (res, q)
        if res <= tol or M >= (1 << 25):
            return best[1]
        M *= 2


def complete_polynomial(P: LaurentPoly, method: str = "auto") -> LaurentPoly:
    """Complementary polynomial Q on the same mode window with |P|^2 + |Q|^2 = 1.

    The returned Q, shifted to an ordinary polynomial, has its roots in the
    closed unit disk and a positive leading coefficient.
    """
    if method not in ("auto", "roots", "cepstral"):
        raise ValidationError(f"unknown completion method {method!r}")
    p = np.array(P.coeffs, dtype=complex)
    d = p.size - 1
    peak, where = circle_max(p)
    if peak > 1.0 + 1e-10:
        raise BoundViolationError(where, peak)
    A = 1.0 - np.abs(_circle_values(p, max(4096, 1 << int(math.ceil(math.log2(4 * (d + 1))))))) ** 2
    meta = {"method": method}
    if np.max(A) <= 1e-12:
        q = np.zeros_like(p)
        meta["method"] = "trivial"
    elif method == "roots" or (method == "auto" and d <= ROOTS_MAX_DEGREE):
        try:
            q = _complete_roots(p)
            meta["method"] = "roots"
        except ConditioningError:
            if method == "roots":
                raise
            q = None
        if method == "auto" and (q is None or _constraint_residual(p, q) > 1e-11):
            q2 = _complete_cepstral(p)
            if q is None or _constraint_residual(p, q2) < _constraint_residual(p, q):
                q = q2
                meta["method"] = "cepstral"
    else:
        q = _complete_cepstral(p)
        meta["method"] = "cepstral"
    q = _balance_trivial_roots(q, _origin_roots(p))
    # canonical global phase: highest nonzero coefficient real positive
    nz = np.nonzero(np.abs(q) > 1e-14 * max(np.max(np.abs(q)), 1e-300))[0]
    if nz.size:
        lead = q[nz[-1]]
        q = q * (abs(lead) / lead)
    res = _constraint_residual(p, q)
    meta["constraint_residual"] = res
    if res > CONSTRAINT_TOL:
        raise ConditioningError(f"completion residual {res:.3e} exceeds {CONSTRAINT_TOL:g}", defect=res)
    return LaurentPoly(q, meta)


# ---------------------------------------------------------------- phases


def gqsp_phases(P: LaurentPoly, Q: LaurentPoly) -> PhaseSequence:
    """Angles of the layered product whose first column is (z^N P, z^N Q)."""
    if P.max_mode != Q.max_mode:
        raise ValidationError("P and Q must share the same mode window")
    p = np.array(P.coeffs, dtype=complex)
    q = np.array(Q.coeffs, dtype=complex)
    res = _constraint_residual(p, q)
    if res > 1e-8:
        raise ValidationError(f"(P, Q) violate |P|^2 + |Q|^2 = 1 by {res:.3e}")
    thetas, phis, lam, defect, step = _kernels.strip_layers(p, q)
    if defect > STRIP_TOL:
        raise ConditioningError(
            f"layer stripping left a coefficient of size {defect:.3e} at step {step}",
            step=int(step),
            defect=float(defect),
        )
    return PhaseSequence(thetas, phis, float(lam))


def phase_product(ph: PhaseSequence, x) -> np.ndarray:
    """R_L A R_{L-1} ... A R_0 at z = e^{i pi x}, by plain matrix products."""
    z = np.exp(1j * math.pi * float(x))
    A = np.diag([z, 1.0])
    U = build_R(ph.thetas[0], ph.phis[0], ph.lam)
    for j in range(1, ph.degree + 1):
        U = build_R(ph.thetas[j], ph.phis[j], 0.0) @ A @ U
    return U


def _build_R_batch(thetas, phis, lams) -> np.ndarray:
    c, s = np.cos(thetas), np.sin(thetas)
    out = np.empty((len(thetas), 2, 2), dtype=complex)
    out[:, 0, 0] = np.exp(1j * (phis + lams)) * c
    out[:, 0, 1] = np.exp(1j * phis) * s
    out[:, 1, 0] = np.exp(1j * lams) * s
    out[:, 1, 1] = -c
    return out


def _zyz_batch(u: np.ndarray):
    """Vectorized ``zyz_decompose`` over a stack of 2x2 unitaries."""
    det = u[:, 0, 0] * u[:, 1, 1] - u[:, 0, 1] * u[:, 1, 0]
    alpha = 0.5 * np.angle(det)
    s00 = u[:, 0, 0] * np.exp(-1j * alpha)
    s01 = u[:, 0, 1] * np.exp(-1j * alpha)
    b = np.arctan2(np.abs(s01), np.abs(s00))
    small0 = np.abs(s00) <= 1e-15
    small1 = np.abs(s01) <= 1e-15
    plus = np.where(small0, 0.0, np.angle(s00))
    minus = np.where(small1, 0.0, np.angle(s01))
    plus = np.where(small0, minus, plus)
    minus = np.where(small1, plus, minus)
    return alpha, 0.5 * (plus + minus), b, 0.5 * (plus - minus)


def phases_to_circuit(
    ph: PhaseSequence,
    negative_slots: int = 0,
    coord: int = 0,
    arg_dim: int = 1,
) -> tuple[CircuitIR, dict]:
    """Rotation/encoding circuit realizing ``z^{-negative_slots} U`` in SU(2).

    Each signal step uses a half-angle encoding e^{+-i pi x Z / 2}.  The last
    ``negative_slots`` steps use the inverted sign, with the two Pauli-X
    conjugations folded into the neighbouring constant gates.  Every constant
    gate is split as e^{i alpha} Rz Ry Rz; the accumulated phase is replaced
    by a final Rz so the whole circuit is special unitary.  The first column
    is unchanged by that replacement.
    """
    d = ph.degree
    if not 0 <= negative_slots <= d:
        raise ValidationError("negative_slots must lie in [0, degree]")
    consts = _build_R_batch(ph.thetas, ph.phis, np.r_[ph.lam, np.zeros(d)])
    signs = np.ones(d, dtype=int)
    signs[d - negative_slots :] = -1
    neg = np.nonzero(signs < 0)[0] + 1
    # X @ M swaps rows of the earlier constant, M @ X swaps columns of the later one
    consts[neg - 1] = consts[neg - 1][:, ::-1, :]
    consts[neg] = consts[neg][:, :, ::-1]
    alpha, a, b, c = _zyz_batch(consts)
    total_phase = float(np.sum(alpha))
    carry = np.r_[0.0, a[:-1]]
    gates = []
    for j in range(d + 1):
        gates.append(rz(carry[j] + c[j]))
        gates.append(ry(b[j]))
        if j < d:
            gates.append(encode(coord, int(signs[j]), half=True))
    carry = float(a[-1])
    # e^{i Gamma} S  ->  Rz(Gamma) S keeps the first column and lands in SU(2)
    gates.append(rz(carry + total_phase))
    gates = _drop_trivial(gates)
    meta = {
        "positive_encodings": d - negative_slots,
        "negative_encodings": negative_slots,
        # every half encoding carries a factor z^{-1/2} whatever its sign
        "mode_shift": -d / 2,
        "absorbed_phase": canonical_angle(total_phase),
    }
    return CircuitIR(2, arg_dim, tuple(gates), {}), meta


def _drop_trivial(gates):
    return [g for g in gates if not (g.kind in ("rot_z", "rot_y") and g.angle == 0.0)]


def synthesize(F: LaurentPoly, coord: int = 0, arg_dim: int = 1, grid=None) -> SynthesisResult:
    """Fixed-encoding circuit with <0|U(x)|0> = F(x) for a bounded F on modes -L..L.

    ``grid`` (a GridSpec or an array of x values) is where the residual
    against F is measured; defaults to the 4096-point grid and its shift.
    """
    L = F.max_mode
    Q = complete_polynomial(F)
    ph = gqsp_phases(F, Q)
    circ, meta = phases_to_circuit(ph, negative_slots=L, coord=coord, arg_dim=arg_dim)
    grid = GridSpec(1, 4096) if grid is None else grid
    if isinstance(grid, GridSpec):
        if grid.m != 1:
            grid = GridSpec(1, grid.n, grid.shifted)
        x, expected = eval_poly_grid(F, grid)
    else:
        x = np.asarray(grid, dtype=float).reshape(-1)
        expected = eval_poly(F, x)
    X = np.zeros((x.size, arg_dim))
    X[:, coord] = x
    col = eval_first_column_batch(circ, X)
    residual = float(np.max(np.abs(col[:, 0] - expected)))
    meta.update(
        {
            "degree": 2 * L,
            "residual": residual,
            "completion_method": Q.meta.get("method"),
            "constraint_residual": Q.meta.get("constraint_residual"),
        }
    )
    if residual > STRIP_TOL:
        raise ConditioningError(f"synthesized circuit misses the target by {residual:.3e}", defect=residual)
    circ = CircuitIR(circ.dim, circ.arg_dim, circ.gates, {"synthesis": meta})
    return SynthesisResult(ph, Q, residual, circ, meta, x, col)


def synthesize_fourier(F: LaurentPoly) -> CircuitIR:
    return synthesize(F).circuit
