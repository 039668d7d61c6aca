"""Cesaro/Fejer approximation of the phase function exp(i w x) on [0, 1].

The target is extended to the period-2 mirror image ``a(x)``, equal to
``exp(i w x)`` on [0, 1] and ``exp(i w (2 - x))`` on [1, 2], so that its
Fourier series in ``exp(i pi n x)`` converges under Fejer summation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import CeilingExceededError, SchemaError, ValidationError
from .grid import GridSpec

__all__ = [
    "LaurentPoly",
    "ErrorBoundReport",
    "reduce_weight",
    "aux_coefficients",
    "fejer_kernel",
    "cesaro_mean",
    "eval_poly",
    "eval_poly_grid",
    "sup_error",
    "error_bound",
    "choose_N",
    "default_ceiling",
    "DEFAULT_CEILING",
]

DEFAULT_CEILING = 2**20
_SINGULAR_REL = 1e-6


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    """Trigonometric polynomial sum_n c_n exp(i pi n x), n = -N..N.

    ``coeffs[j]`` holds the coefficient of mode ``j - N``.
    """

    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size % 2 != 1:
            raise ValidationError("a Laurent polynomial needs an odd number of coefficients")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_modes(cls, modes: dict[int, complex], max_mode: int | None = None) -> "LaurentPoly":
        n = max((abs(k) for k in modes), default=0) if max_mode is None else max_mode
        c = np.zeros(2 * n + 1, dtype=complex)
        for k, v in modes.items():
            if abs(k) > n:
                raise ValidationError(f"mode {k} outside window [-{n}, {n}]")
            c[k + n] = v
        return cls(c)

    @property
    def max_mode(self) -> int:
        return (self.coeffs.size - 1) // 2

    def coeff(self, n: int) -> complex:
        N = self.max_mode
        if abs(n) > N:
            return 0j
        return complex(self.coeffs[n + N])

    def __call__(self, x):
        return eval_poly(self, x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(np.all(self.coeffs == other.coeffs))

    def to_json(self) -> dict:
        doc = {
            "max_mode": self.max_mode,
            "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs],
        }
        if self.meta:
            doc["meta"] = self.meta
        return doc

    @classmethod
    def from_json(cls, doc, path: str = "") -> "LaurentPoly":
        if not isinstance(doc, dict):
            raise SchemaError(path, "expected an object")
        for key in ("max_mode", "coeffs"):
            if key not in doc:
                raise SchemaError(f"{path}/{key}", "missing required field")
        n = doc["max_mode"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise SchemaError(f"{path}/max_mode", "must be a nonnegative integer")
        raw = doc["coeffs"]
        if not isinstance(raw, list) or len(raw) != 2 * n + 1:
            raise SchemaError(f"{path}/coeffs", f"expected a list of {2 * n + 1} [re, im] pairs")
        c = np.empty(2 * n + 1, dtype=complex)
        for i, pair in enumerate(raw):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(_is_number(v) for v in pair)
            ):
                raise SchemaError(f"{path}/coeffs/{i}", "expected [re, im] numbers")
            c[i] = complex(pair[0], pair[1])
        if not np.all(np.isfinite(c)):
            raise SchemaError(f"{path}/coeffs", "coefficients must be finite")
        meta = doc.get("meta", {})
        if not isinstance(meta, dict):
            raise SchemaError(f"{path}/meta", "expected an object")
        return cls(c, dict(meta))


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@dataclass(frozen=True)
class ErrorBoundReport:
    N: int
    first_term: float
    second_term: float
    total: float


def reduce_weight(w: float) -> tuple[int, float]:
    """Split ``w = K pi + r`` with K rounded half away from zero, so |r| <= pi/2."""
    q = w / math.pi
    K = int(math.copysign(math.floor(abs(q) + 0.5), q))
    return K, w - K * math.pi


def _segment_integral(a: float, lo: float, hi: float, nodes: int = 64) -> complex:
    """int_lo^hi exp(i a x) dx by Gauss-Legendre quadrature."""
    t, wts = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (hi - lo)
    x = 0.5 * (hi + lo) + half * t
    return complex(half * np.sum(wts * np.exp(1j * a * x)))


def aux_coefficients(w: float, N: int) -> LaurentPoly:
    """Fourier coefficients, modes -N..N, of the period-2 mirror extension of exp(i w x)."""
    if N < 0:
        raise ValidationError("N must be nonnegative")
    if not math.isfinite(w):
        raise ValidationError("w must be finite")
    n = np.arange(-N, N + 1)
    npi = n * math.pi
    denom = w * w - npi * npi
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    singular = np.abs(denom) < _SINGULAR_REL * np.maximum(1.0, npi * npi)
    safe = np.where(singular, 1.0, denom)
    c = -1j * w * (sign * np.exp(1j * w) - 1.0) / safe
    for j in np.nonzero(singular)[0]:
        k = float(npi[j])
        c[j] = 0.5 * (
            _segment_integral(w - k, 0.0, 1.0)
            + np.exp(2j * w) * _segment_integral(-(w + k), 1.0, 2.0)
        )
    meta = {"w": float(w)}
    if abs(w) > math.pi / 2 + 1e-15:
        meta["outside_bound_validity"] = True
    return LaurentPoly(c, meta)


def fejer_kernel(N: int, t):
    """(1/(N+1)) * (sin((N+1)t/2) / sin(t/2))^2, continuous at multiples of 2 pi."""
    if N < 0:
        raise ValidationError("N must be nonnegative")
    t = np.asarray(t, dtype=float)
    s = np.sin(0.5 * t)
    small = np.abs(s) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = (np.sin(0.5 * (N + 1) * t) / s) ** 2 / (N + 1)
    if np.any(small):
        k = np.arange(1, N + 1)
        wts = 1.0 - k / (N + 1)
        ts = np.atleast_1d(t[small])
        series = 1.0 + 2.0 * np.cos(np.outer(ts, k)) @ wts
        closed = np.array(closed, copy=True)
        closed[small] = series.reshape(closed[small].shape)
    return closed if closed.ndim else float(closed)


def cesaro_mean(series: LaurentPoly, N: int) -> LaurentPoly:
    """Damp mode n by (N + 1 - |n|)/(N + 1) and drop modes beyond N."""
    if N < 0:
        raise ValidationError("N must be nonnegative")
    M = series.max_mode
    if M < N:
        raise ValidationError(f"series has max_mode {M} < requested order {N}")
    c = series.coeffs[M - N : M + N + 1]
    n = np.arange(-N, N + 1)
    weights = (N + 1 - np.abs(n)) / (N + 1)
    meta = dict(series.meta)
    meta["cesaro_order"] = int(N)
    return LaurentPoly(c * weights, meta)


def eval_poly(p: LaurentPoly, x):
    """Evaluate sum c_n exp(i pi n x) by Horner's rule in exp(i pi x)."""
    xa = np.asarray(x, dtype=float)
    flat = np.ascontiguousarray(xa.reshape(-1))
    out = _kernels.horner_modes(np.ascontiguousarray(p.coeffs), flat)
    if xa.ndim == 0:
        return complex(out[0])
    return out.reshape(xa.shape)


def _eval_uniform(coeffs: np.ndarray, n_pts: int, shift: float) -> np.ndarray:
    # values at x_j = j/(n_pts - 1) + shift, j = 0..n_pts-1, via one FFT of the folded coefficients
    N = (coeffs.size - 1) // 2
    M = 2 * (n_pts - 1)
    modes = np.arange(-N, N + 1)
    c = coeffs * np.exp(1j * math.pi * modes * shift) if shift else coeffs
    folded = np.zeros(M, dtype=complex)
    np.add.at(folded, modes % M, c)
    vals = np.fft.ifft(folded) * M
    return vals[:n_pts]


def eval_poly_grid(p: LaurentPoly, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate on a one-dimensional GridSpec; returns (x, values)."""
    if grid.m != 1:
        raise ValidationError("eval_poly_grid needs a one-dimensional grid")
    xs = [grid.base_axis]
    vals = [_eval_uniform(p.coeffs, grid.n, 0.0)]
    if grid.shifted:
        k = grid.shifted_axis.size
        xs.append(grid.shifted_axis)
        vals.append(_eval_uniform(p.coeffs, grid.n, 1.0 / (2 * grid.n))[:k])
    return np.concatenate(xs), np.concatenate(vals)


def _grid_values(p: LaurentPoly, grid) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(grid, GridSpec):
        return eval_poly_grid(p, grid)
    x = np.asarray(grid, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValidationError("empty grid")
    return x, eval_poly(p, x)


def sup_error(p: LaurentPoly, w: float, grid=None) -> float:
    """Max over the grid of |p(x) - exp(i w x)|; a lower estimate of the true sup."""
    grid = GridSpec(1, 4096) if grid is None else grid
    x, v = _grid_values(p, grid)
    if x.size < 2:
        raise ValidationError("grid needs at least 2 points")
    return float(np.max(np.abs(v - np.exp(1j * w * x))))


def error_bound(N: int) -> ErrorBoundReport:
    """Analytic sup-norm bound for the order-N Cesaro mean, valid for |w| <= pi/2."""
    if N < 1:
        raise ValidationError("error_bound needs N >= 1")
    first = (2 / math.pi) * (4 / 3 + 0.5 * math.log((4 * N * N - 1) / 3))
    second = (2 / math.pi) / (N - 0.25)
    total = (2 / (N + 1)) * first + 2 * second
    return ErrorBoundReport(int(N), first, second, total)


def default_ceiling() -> int:
    raw = os.environ.get("REQUP_MAX_N")
    if raw is None or raw.strip() == "":
        return DEFAULT_CEILING
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"REQUP_MAX_N must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValidationError("REQUP_MAX_N must be positive")
    return value


def _frobenius_profile(w: float, N: int, grid) -> float:
    # max over grid of the Frobenius distance between the unitary completing the
    # order-N Cesaro mean and exp(i w x sigma_z)
    p = cesaro_mean(aux_coefficients(w, N), N)
    x, v = _grid_values(p, grid)
    target = np.exp(1j * w * x)
    q2 = np.maximum(1.0 - np.abs(v) ** 2, 0.0)
    return float(np.max(np.sqrt(2.0 * (np.abs(v - target) ** 2 + q2))))


def _measured_sup(w: float, N: int, grid) -> float:
    return sup_error(cesaro_mean(aux_coefficients(w, N), N), w, grid)


def _search(metric, target: float, ceiling: int) -> int:
    """Smallest N >= 1 with metric(N) <= target, assuming metric is decreasing."""
    lo, hi = 0, 1
    val = metric(hi)
    while val > target:
        lo = hi
        if hi >= ceiling:
            estimate = int(math.ceil(hi * val / target))
            raise CeilingExceededError(max(estimate, ceiling + 1), ceiling)
        hi = min(2 * hi, ceiling)
        val = metric(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if metric(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def choose_N(w: float, eps: float, mode: str = "analytic", *, grid=None, ceiling: int | None = None) -> int:
    """Cesaro order for the fractional part of ``w`` at tolerance ``eps``.

    ``analytic`` and ``adaptive`` demand a sup error of at most eps**2/6, the
    first through ``error_bound``, the second through the measured error on
    ``grid``.  ``frobenius`` asks directly for the measured Frobenius distance
    of the completed unitary to be at most ``eps``.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if mode not in ("analytic", "adaptive", "frobenius"):
        raise ValidationError(f"unknown mode {mode!r}")
    ceiling = default_ceiling() if ceiling is None else int(ceiling)
    _, r = reduce_weight(w)
    if abs(r) <= 1e-12:
        return 0
    target = eps * eps / 6.0
    grid = GridSpec(1, 4096) if grid is None else grid
    if mode == "analytic":
        if error_bound(1).total <= target:
            return 1
        lo, hi = 1, 2
        while error_bound(hi).total > target:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if error_bound(mid).total <= target:
                hi = mid
            else:
                lo = mid
        if hi > ceiling:
            raise CeilingExceededError(hi, ceiling)
        return hi
    if mode == "adaptive":
        return _search(lambda n: _measured_sup(r, n, grid), target, ceiling)
    # small margin so that the synthesized circuit, which matches the Cesaro
    # mean only to ~1e-9, still meets eps
    return _search(lambda n: _frobenius_profile(r, n, grid), eps * (1 - 1e-6), ceiling)
