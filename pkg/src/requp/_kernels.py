"""Compiled inner loops.  Everything here is private and shape-unchecked."""

import numba
import numpy as np


@numba.njit(cache=True)
def horner_modes(coeffs, x):
    """sum_n coeffs[n + N] * exp(i pi n x) for n in [-N, N]."""
    deg = coeffs.shape[0] - 1
    n_mode = deg // 2
    out = np.empty(x.shape[0], dtype=np.complex128)
    for i in range(x.shape[0]):
        z = np.exp(1j * np.pi * x[i])
        acc = 0j
        for j in range(deg, -1, -1):
            acc = acc * z + coeffs[j]
        out[i] = acc * np.exp(-1j * np.pi * n_mode * x[i])
    return out


@numba.njit(cache=True)
def strip_layers(p, q):
    """Peel GQSP layers off the polynomial pair (p, q), highest layer first.

    ``p`` and ``q`` are ascending coefficient arrays of equal length d + 1.
    Returns (thetas, phis, lam, max_defect, worst_step) where layer j (1..d)
    undoes one signal step and layer 0 holds the remaining constant gate.
    ``max_defect`` is the largest coefficient that the recursion discards as
    zero.  Work arrays hold real and imaginary parts separately so the
    update loop vectorizes.
    """
    d = p.shape[0] - 1
    thetas = np.zeros(d + 1)
    phis = np.zeros(d + 1)
    Pr = p.real.copy()
    Pi = p.imag.copy()
    Qr = q.real.copy()
    Qi = q.imag.copy()
    off = 0
    max_defect = 0.0
    worst = -1
    for step in range(d, 0, -1):
        # P occupies [off, off + step], Q occupies [0, step]
        p_lead = complex(Pr[off + step], Pi[off + step])
        q_lead = complex(Qr[step], Qi[step])
        p_low = complex(Pr[off], Pi[off])
        q_low = complex(Qr[0], Qi[0])
        if abs(p_lead) + abs(q_lead) >= abs(p_low) + abs(q_low):
            th = np.arctan2(abs(q_lead), abs(p_lead))
            ph = np.angle(p_lead * np.conj(q_lead))
        else:
            th = np.arctan2(abs(p_low), abs(q_low))
            ph = np.angle(-p_low * np.conj(q_low))
        c = np.cos(th)
        s = np.sin(th)
        er = np.cos(ph)
        ei = -np.sin(ph)
        ecr = er * c
        eci = ei * c
        esr = er * s
        esi = ei * s
        for k in range(step + 1):
            pr = Pr[off + k]
            pi = Pi[off + k]
            qr = Qr[k]
            qi = Qi[k]
            Pr[off + k] = ecr * pr - eci * pi + s * qr
            Pi[off + k] = ecr * pi + eci * pr + s * qi
            Qr[k] = esr * pr - esi * pi - c * qr
            Qi[k] = esr * pi + esi * pr - c * qi
        dp = abs(complex(Pr[off], Pi[off]))
        dq = abs(complex(Qr[step], Qi[step]))
        dmax = dp if dp > dq else dq
        if dmax > max_defect:
            max_defect = dmax
            worst = step
        off += 1
        thetas[step] = th
        phis[step] = ph
    p0 = complex(Pr[off], Pi[off])
    q0 = complex(Qr[0], Qi[0])
    thetas[0] = np.arctan2(abs(q0), abs(p0))
    lam = np.angle(q0) if abs(q0) > 0.0 else 0.0
    phis[0] = np.angle(p0) - lam if abs(p0) > 0.0 else -lam
    return thetas, phis, lam, max_defect, worst


@numba.njit(cache=True)
def _propagate(kinds, freqs, mats, x, a0, b0):
    # gates in the outer loop and points in the inner one, on split real and
    # imaginary parts, so the point loop vectorizes
    n = x.shape[0]
    ar = np.full(n, a0.real)
    ai = np.full(n, a0.imag)
    br = np.full(n, b0.real)
    bi = np.full(n, b0.imag)
    hr = np.cos(0.5 * np.pi * x)
    hi = np.sin(0.5 * np.pi * x)
    fr = hr * hr - hi * hi
    fi = 2.0 * hr * hi
    for g in range(kinds.shape[0]):
        if kinds[g] == 1:
            f = freqs[g]
            if f == 0.5 or f == -0.5:
                er = hr
                ei = hi
            elif f == 1.0 or f == -1.0:
                er = fr
                ei = fi
            else:
                er = np.cos(np.pi * abs(f) * x)
                ei = np.sin(np.pi * abs(f) * x)
            s = 1.0 if f > 0 else -1.0
            for i in range(n):
                c = er[i]
                d = s * ei[i]
                t = ar[i] * c - ai[i] * d
                ai[i] = ar[i] * d + ai[i] * c
                ar[i] = t
                t = br[i] * c + bi[i] * d
                bi[i] = bi[i] * c - br[i] * d
                br[i] = t
        else:
            m00r = mats[g, 0, 0].real
            m00i = mats[g, 0, 0].imag
            m01r = mats[g, 0, 1].real
            m01i = mats[g, 0, 1].imag
            m10r = mats[g, 1, 0].real
            m10i = mats[g, 1, 0].imag
            m11r = mats[g, 1, 1].real
            m11i = mats[g, 1, 1].imag
            for i in range(n):
                a_r = ar[i]
                a_i = ai[i]
                b_r = br[i]
                b_i = bi[i]
                ar[i] = m00r * a_r - m00i * a_i + m01r * b_r - m01i * b_i
                ai[i] = m00r * a_i + m00i * a_r + m01r * b_i + m01i * b_r
                br[i] = m10r * a_r - m10i * a_i + m11r * b_r - m11i * b_i
                bi[i] = m10r * a_i + m10i * a_r + m11r * b_i + m11i * b_r
    out = np.empty((n, 2), dtype=np.complex128)
    for i in range(n):
        out[i, 0] = complex(ar[i], ai[i])
        out[i, 1] = complex(br[i], bi[i])
    return out


@numba.njit(cache=True)
def propagate_su2_column(kinds, freqs, mats, x):
    """First column of a dim-2 circuit of merged constant blocks and encodings.

    ``kinds[g]`` is 0 for a constant 2x2 block ``mats[g]`` and 1 for an
    encoding diag(exp(i pi f x), exp(-i pi f x)) with ``f = freqs[g]``.
    Returns an (n, 2) array.
    """
    return _propagate(kinds, freqs, mats, x, 1.0 + 0j, 0j)


@numba.njit(cache=True)
def propagate_2x2(kinds, freqs, mats, x):
    """Full 2x2 unitary of a dim-2 circuit, same encoding as propagate_su2_column."""
    n = x.shape[0]
    out = np.empty((n, 2, 2), dtype=np.complex128)
    c0 = _propagate(kinds, freqs, mats, x, 1.0 + 0j, 0j)
    c1 = _propagate(kinds, freqs, mats, x, 0j, 1.0 + 0j)
    for i in range(n):
        out[i, 0, 0] = c0[i, 0]
        out[i, 1, 0] = c0[i, 1]
        out[i, 0, 1] = c1[i, 0]
        out[i, 1, 1] = c1[i, 1]
    return out
