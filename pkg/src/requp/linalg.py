"""Small dense complex matrix helpers and the two norms used for error bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

__all__ = [
    "NormReport",
    "as_matrix",
    "mat_mul",
    "frobenius_dist",
    "schatten_inf_dist",
    "norm_report",
    "is_unitary",
    "phase_aligned_dist",
    "rot_z",
    "rot_y",
    "zyz_decompose",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class NormReport:
    frobenius: float
    schatten_inf: float


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite square complex array, or raise."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def mat_mul(a, b) -> np.ndarray:
    a, b = _pair(a, b)
    return a @ b


def frobenius_dist(a, b) -> float:
    a, b = _pair(a, b)
    d = a - b
    return float(np.sqrt(np.sum(d.real**2 + d.imag**2)))


def _sv2_max(d: np.ndarray) -> float:
    # largest singular value of a 2x2 matrix in closed form
    fro2 = float(np.sum(np.abs(d) ** 2))
    det = abs(d[0, 0] * d[1, 1] - d[0, 1] * d[1, 0])
    disc = max(fro2 * fro2 - 4.0 * det * det, 0.0)
    return float(np.sqrt(max(0.5 * (fro2 + np.sqrt(disc)), 0.0)))


def schatten_inf_dist(a, b) -> float:
    """Largest singular value of ``a - b``."""
    a, b = _pair(a, b)
    d = a - b
    if d.shape[0] == 2:
        return _sv2_max(d)
    return float(np.linalg.svd(d, compute_uv=False)[0])


def norm_report(a, b) -> NormReport:
    return NormReport(frobenius_dist(a, b), schatten_inf_dist(a, b))


def is_unitary(a, tol: float = 1e-12) -> bool:
    if tol <= 0:
        raise ValidationError("tol must be positive")
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.all(np.isfinite(a)):
        return False
    return frobenius_dist(a.conj().T @ a, np.eye(a.shape[0])) <= tol


def phase_aligned_dist(a, b) -> float:
    """Frobenius distance between ``a`` and ``b`` after removing the best global phase.

    The minimizer of ``||a - e^{i alpha} b||_F`` is ``alpha = arg Tr(b^H a)``,
    which leaves ``sqrt(||a||^2 + ||b||^2 - 2 |Tr(b^H a)|)``.
    """
    a, b = _pair(a, b)
    overlap = np.vdot(b, a)  # Tr(b^H a)
    alpha = np.angle(overlap) if abs(overlap) > 0 else 0.0
    return frobenius_dist(a, np.exp(1j * alpha) * b)


def rot_z(angle: float) -> np.ndarray:
    """exp(i * angle * sigma_z)."""
    return np.diag([np.exp(1j * angle), np.exp(-1j * angle)])


def rot_y(angle: float) -> np.ndarray:
    """exp(i * angle * sigma_y)."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]], dtype=complex)


def zyz_decompose(u) -> tuple[float, float, float, float]:
    """Angles (alpha, a, b, c) with u = e^{i alpha} rot_z(a) rot_y(b) rot_z(c)."""
    u = as_matrix(u)
    if u.shape != (2, 2):
        raise ValidationError("zyz_decompose needs a 2x2 matrix")
    alpha = 0.5 * float(np.angle(u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]))
    s = u * np.exp(-1j * alpha)
    b = float(np.arctan2(abs(s[0, 1]), abs(s[0, 0])))
    plus = float(np.angle(s[0, 0])) if abs(s[0, 0]) > 1e-15 else 0.0
    minus = float(np.angle(s[0, 1])) if abs(s[0, 1]) > 1e-15 else 0.0
    if abs(s[0, 0]) <= 1e-15:
        plus = minus
    if abs(s[0, 1]) <= 1e-15:
        minus = plus
    a = 0.5 * (plus + minus)
    c = 0.5 * (plus - minus)
    return alpha, a, b, c
