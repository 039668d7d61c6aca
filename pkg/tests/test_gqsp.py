import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from requp.circuit import eval_h_batch, gate_matrix, resource_count
from requp.exceptions import BoundViolationError, ConditioningError, SchemaError, ValidationError
from requp.fourier import LaurentPoly, aux_coefficients, cesaro_mean, eval_poly
from requp.gqsp import (
    PhaseSequence,
    _complete_roots,
    build_R,
    canonical_angle,
    complete_polynomial,
    gqsp_phases,
    phase_product,
    phases_to_circuit,
    synthesize,
    synthesize_fourier,
)
from requp.grid import GridSpec
from requp.linalg import is_unitary


def random_bounded(L, seed, peak=0.9):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=2 * L + 1) + 1j * rng.normal(size=2 * L + 1)
    p = LaurentPoly(c)
    x = np.linspace(-1, 1, 16 * (2 * L + 1) + 1)
    return LaurentPoly(c * peak / np.max(np.abs(eval_poly(p, x))))


def constraint(P, Q, n=4096):
    x = np.linspace(-1, 1, n)
    return np.max(np.abs(np.abs(eval_poly(P, x)) ** 2 + np.abs(eval_poly(Q, x)) ** 2 - 1))


def dense_h(circ, x):
    # independent route: multiply dense gate matrices one by one
    U = np.eye(circ.dim, dtype=complex)
    for g in circ.gates:
        U = gate_matrix(g, circ.dim, [x], circ.arg_dim) @ U
    return U[0, 0]


def test_build_R_examples():
    assert_allclose(build_R(0, 0, 0), [[1, 0], [0, -1]])
    assert_allclose(build_R(np.pi / 2, 0, 0), [[0, 1], [1, 0]], atol=1e-16)


@given(st.floats(-7, 7), st.floats(-7, 7), st.floats(-7, 7))
def test_build_R_unitary(t, p, l):
    assert is_unitary(build_R(t, p, l), tol=1e-14)


def test_canonical_angle():
    assert canonical_angle(-np.pi) == pytest.approx(np.pi)
    assert canonical_angle(3 * np.pi / 2) == pytest.approx(-np.pi / 2)
    assert -np.pi < canonical_angle(-7.0) <= np.pi


def test_complete_trivial_and_half_mode():
    Q = complete_polynomial(LaurentPoly.from_modes({0: 1.0}))
    assert np.all(Q.coeffs == 0)
    for method in ("roots", "cepstral", "auto"):
        Q = complete_polynomial(LaurentPoly.from_modes({1: 0.5}), method)
        assert_allclose(Q.coeffs, [0, np.sqrt(3) / 2, 0], atol=1e-12)


def test_complete_random_degree8():
    P = random_bounded(4, 11)
    Q = complete_polynomial(P)
    assert constraint(P, Q) <= 1e-9
    assert Q.meta["constraint_residual"] <= 1e-9


def test_complete_minimum_phase_roots():
    P = random_bounded(3, 12)
    q = complete_polynomial(P, "roots").coeffs
    nz = np.nonzero(np.abs(q) > 1e-14)[0]
    roots = np.roots(q[nz[0] : nz[-1] + 1][::-1])
    assert np.all(np.abs(roots) <= 1 + 1e-6)


def test_complete_independent_of_root_order():
    P = random_bounded(5, 13)
    x = np.linspace(-1, 1, 512)
    a = _complete_roots(P.coeffs, np.random.default_rng(1))
    b = _complete_roots(P.coeffs, np.random.default_rng(2))
    va = np.abs(eval_poly(LaurentPoly(a), x))
    vb = np.abs(eval_poly(LaurentPoly(b), x))
    assert np.max(np.abs(va - vb)) <= 1e-8


def test_complete_rejects_unbounded():
    with pytest.raises(BoundViolationError) as exc:
        complete_polynomial(LaurentPoly.from_modes({-1: 0.8, 1: 0.8}))
    assert exc.value.value > 1
    assert 0 <= exc.value.x < 2
    with pytest.raises(ValidationError):
        complete_polynomial(LaurentPoly.from_modes({0: 0.5}), "bogus")


def test_phases_unit_constant():
    P = LaurentPoly.from_modes({0: np.exp(0.4j)})
    ph = gqsp_phases(P, complete_polynomial(P))
    assert ph.degree == 0
    assert phase_product(ph, 0.3)[0, 0] == pytest.approx(np.exp(0.4j), abs=1e-15)


def test_phases_single_mode():
    P = LaurentPoly.from_modes({1: np.exp(0.7j)}, max_mode=1)
    ph = gqsp_phases(P, complete_polynomial(P))
    for x in np.linspace(-1, 1, 9):
        # first column is (z^N P, z^N Q) with N = 1
        z = np.exp(1j * np.pi * x)
        assert abs(phase_product(ph, x)[0, 0] - z * eval_poly(P, x)) <= 1e-10


def test_phases_random_degree16():
    P = random_bounded(8, 14)
    Q = complete_polynomial(P)
    ph = gqsp_phases(P, Q)
    for x in np.linspace(-1, 1, 33):
        U = phase_product(ph, x)
        z = np.exp(1j * np.pi * x)
        assert abs(U[0, 0] - z**8 * eval_poly(P, x)) <= 1e-8
        assert abs(U[1, 0] - z**8 * eval_poly(Q, x)) <= 1e-8
        assert is_unitary(U, tol=1e-11)


def test_phases_reject_inconsistent_pair():
    P = LaurentPoly.from_modes({0: 0.5})
    with pytest.raises(ValidationError):
        gqsp_phases(P, LaurentPoly.from_modes({0: 0.5}))


def test_strip_reports_conditioning_failure(monkeypatch):
    import requp.gqsp as gq

    P = random_bounded(6, 17)
    Q = complete_polynomial(P)
    monkeypatch.setattr(gq, "STRIP_TOL", 0.0)
    with pytest.raises(ConditioningError) as exc:
        gqsp_phases(P, Q)
    assert 1 <= exc.value.step <= 12
    assert exc.value.defect > 0


def test_synthesize_constant():
    c = synthesize_fourier(LaurentPoly.from_modes({0: 1.0}))
    assert resource_count(c)["encodings_per_coord"] == [0]
    assert eval_h_batch(c, np.array([0.1, 0.9])) == pytest.approx([1, 1])


def test_synthesize_cosine():
    F = LaurentPoly.from_modes({-1: 0.5, 1: 0.5})
    c = synthesize_fourier(F)
    assert resource_count(c)["encodings_per_coord"] == [2]
    x = GridSpec(1, 4096).points[:, 0]
    assert np.max(np.abs(eval_h_batch(c, x) - np.cos(np.pi * x))) <= 1e-9


def test_synthesize_cesaro_mean():
    F = cesaro_mean(aux_coefficients(1.0, 32), 32)
    res = synthesize(F)
    assert res.residual <= 1e-8
    assert resource_count(res.circuit)["encodings_per_coord"] == [64]
    # cross-check with the dense gate-by-gate product at a few points
    for x in (0.0, 0.123, 0.5, 0.77, 1.0):
        assert abs(dense_h(res.circuit, x) - eval_poly(F, x)) <= 1e-8


def test_synthesize_sign_split():
    F = random_bounded(5, 21)
    res = synthesize(F)
    assert res.meta["positive_encodings"] == 5
    assert res.meta["negative_encodings"] == 5
    signs = [g.sign for g in res.circuit.gates if g.kind == "encode"]
    assert signs.count(1) == 5 and signs.count(-1) == 5


@given(st.integers(1, 16), st.integers(0, 2**31))
def test_synthesize_random_property(L, seed):
    F = random_bounded(L, seed)
    res = synthesize(F, grid=GridSpec(1, 512))
    assert res.residual <= 1e-8
    assert resource_count(res.circuit)["encodings_per_coord"] == [2 * L]


def test_reconstructed_products_unitary():
    F = random_bounded(6, 31)
    res = synthesize(F)
    for x in np.linspace(0, 1, 1024)[::37]:
        U = np.eye(2, dtype=complex)
        for g in res.circuit.gates:
            U = gate_matrix(g, 2, [x]) @ U
        assert is_unitary(U, tol=1e-11)


def test_phase_json_round_trip():
    ph = gqsp_phases(random_bounded(3, 5), complete_polynomial(random_bounded(3, 5)))
    back = PhaseSequence.from_json(json.loads(json.dumps(ph.to_json())))
    assert back == ph
    assert np.all(np.abs(ph.thetas) <= np.pi) and np.all(ph.thetas > -np.pi)
    with pytest.raises(SchemaError):
        PhaseSequence.from_json({"degree": 1, "thetas": [0.0], "phis": [0.0, 0.0], "lambda": 0})


def test_phases_to_circuit_rejects_bad_slots():
    ph = PhaseSequence(np.zeros(3), np.zeros(3), 0.0)
    with pytest.raises(ValidationError):
        phases_to_circuit(ph, negative_slots=4)
