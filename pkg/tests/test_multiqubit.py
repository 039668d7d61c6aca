import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from requp.circuit import CircuitIR, encode, eval_h_batch, eval_unitary_batch, ry, rz
from requp.compiler import approx_weight_gate
from requp.exceptions import ConstructionError, ValidationError
from requp.grid import GridSpec
from requp.linalg import PAULI_Y, PAULI_Z, is_unitary
from requp.multiqubit import (
    EulerAngles,
    build_block_perm,
    build_circular_perm,
    build_leading_perm,
    build_Rk,
    build_Rk_prime,
    build_vm,
    build_vm_prime,
    compile_multiqubit,
    euler_unitary,
    gell_mann,
    gell_mann_family,
    multiqubit_equivalence,
    rk_prime_tally,
)


def block_target(x, k):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = np.ones(2 * x.size, dtype=complex)
    d[2 * (k - 1)] = np.exp(1j * np.pi * x[k - 1])
    d[2 * (k - 1) + 1] = np.exp(-1j * np.pi * x[k - 1])
    return np.diag(d)


def is_permutation_matrix(P):
    return (
        set(np.unique(P)) <= {0, 1}
        and np.all(P.sum(axis=0) == 1)
        and np.all(P.sum(axis=1) == 1)
    )


def test_vm_examples():
    assert_allclose(build_vm([0.0]), np.eye(2))
    assert_allclose(
        build_vm([1.0, 0.5]),
        np.diag([1j, -1j, np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)]),
        atol=1e-15,
    )
    with pytest.raises(ValidationError):
        build_vm([])


def test_vm_prime_examples():
    assert_allclose(build_vm_prime([0.0]), np.eye(2))
    assert_allclose(build_vm_prime([1.0, 1.0]), np.diag([1j, 1j, -1]), atol=1e-15)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_encodings_are_special_unitary(m, seed):
    x = np.random.default_rng(seed).uniform(-1, 1, m)
    for V in (build_vm(x), build_vm_prime(x)):
        assert np.count_nonzero(V - np.diag(np.diag(V))) == 0
        assert is_unitary(V, tol=1e-13)
        assert abs(np.linalg.det(V) - 1) <= 1e-13


def test_block_perm_examples():
    assert build_block_perm(1, 1).perm == (0, 1)
    P = build_block_perm(1, 2).matrix
    assert_allclose(P, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    with pytest.raises(ValidationError):
        build_block_perm(3, 2)
    with pytest.raises(ValidationError):
        build_block_perm(0, 2)


@pytest.mark.parametrize("m", range(1, 9))
def test_pairwise_and_leading_gadgets_are_involutions(m):
    for k in range(1, m + 1):
        for g in (build_block_perm(k, m), build_leading_perm(k, m)):
            P = g.matrix
            assert is_permutation_matrix(P)
            assert_allclose(P @ P, np.eye(2 * m))


def test_Rk_examples():
    assert_allclose(build_Rk([1.0, 0.5], 1), np.diag([-1, -1, 1, 1]), atol=1e-15)
    assert_allclose(build_Rk([0.3], 1), expm(1j * np.pi * 0.3 * PAULI_Z), atol=1e-15)
    assert_allclose(build_Rk([0.2, 0.0, 0.7], 2), np.eye(6), atol=1e-15)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_Rk_exact(m, seed):
    x = np.random.default_rng(seed).uniform(0, 1, m)
    for k in range(1, m + 1):
        assert np.max(np.abs(build_Rk(x, k) - block_target(x, k))) <= 1e-14
        lead = build_Rk(x, k, leading=True)
        assert abs(lead[0, 0] - np.exp(1j * np.pi * x[k - 1])) <= 1e-14
        assert np.all(np.abs(lead[2:, 2:] - np.eye(2 * m - 2)) <= 1e-14)


def test_circular_perm_displayed_pattern():
    x = np.array([0.3, 0.5, 0.9])
    V = build_vm_prime(x)
    C = build_circular_perm(1, 1, 3).matrix
    d, moved = np.diag(V), np.diag(C @ V @ C.T)
    assert moved[0] == d[0]
    assert sorted(np.angle(moved[1:])) == pytest.approx(sorted(np.angle(d[1:])))
    assert not np.allclose(moved[1:], d[1:])
    assert moved[1:].tolist() in [np.roll(d[1:], s).tolist() for s in (1, 2)]


def test_circular_perm_preconditions():
    with pytest.raises(ValidationError):
        build_circular_perm(1, 0, 3)
    with pytest.raises(ValidationError):
        build_circular_perm(1, 3, 3)
    with pytest.raises(ValidationError):
        build_circular_perm(5, 1, 3)
    with pytest.raises(ValidationError):
        build_circular_perm(1, 1, 1)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_circular_perm_properties(m):
    for k in range(1, m + 2):
        for j in range(1, m):
            g = build_circular_perm(k, j, m)
            P = g.matrix
            assert is_permutation_matrix(P)
            assert g.perm[k - 1] == k - 1
            order = m // np.gcd(m, j)
            assert_allclose(np.linalg.matrix_power(P, order), np.eye(m + 1))


@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_first_stage_product_pattern(m):
    # product over j of C_j V' C_j^T: level 1 keeps its own phase m-1 times,
    # every other level collects all the moving phases except its own
    x = np.random.default_rng(m).uniform(0, 1, m)
    V = build_vm_prime(x)
    U = np.eye(m + 1, dtype=complex)
    for j in range(1, m):
        C = build_circular_perm(1, j, m).matrix
        U = C @ V @ C.T @ U
    slots = np.append(x, -x.sum())
    expect = np.exp(1j * np.pi / m * np.append((m - 1) * x[0], -x[0] - slots[1:]))
    assert_allclose(np.diag(U), expect, atol=1e-14)
    assert abs(U[0, 0] - np.exp(1j * np.pi * x[0] * (m - 1) / m)) <= 1e-14


def test_Rk_prime_trivial_cases():
    assert_allclose(build_Rk_prime([0.4], 1), expm(1j * np.pi * 0.4 * PAULI_Z), atol=1e-15)
    for m in (2, 3, 5):
        assert_allclose(build_Rk_prime(np.zeros(m), 1), np.eye(m + 1), atol=1e-15)


@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_Rk_prime_tally(m):
    x = np.random.default_rng(10 + m).uniform(0, 1, m)
    U, rep = build_Rk_prime(x, 1, return_report=True)
    tally = rk_prime_tally(m)
    assert rep["encodings"] == tally["encodings"] == m * m - 1
    assert rep["circular_permutations"] == tally["circular_permutations"] == 2 * m - 2
    assert is_unitary(U, tol=1e-13)
    # every factor is diagonal up to permutations that cancel: the product is diagonal
    assert np.count_nonzero(np.abs(U - np.diag(np.diag(U))) > 1e-14) == 0


def test_Rk_prime_relabel_recorded():
    x = np.array([0.1, 0.6, 0.3])
    U1, r1 = build_Rk_prime(x, 1, return_report=True)
    U2, r2 = build_Rk_prime(x, 2, return_report=True)
    assert r1["relabel"] is None and r2["relabel"] == [1, 0, 2, 3]
    # coordinate 2 takes the role of coordinate 1
    swapped = build_Rk_prime(x[[1, 0, 2]], 1)
    assert_allclose(U2, swapped, atol=1e-14)


def test_gell_mann_displayed_forms():
    assert_allclose(gell_mann(3, 2), PAULI_Z)
    assert_allclose(gell_mann(1, 2), [[0, 1], [1, 0]])
    assert_allclose(gell_mann((2 - 1) ** 2 + 1, 2), PAULI_Y)
    g = gell_mann(8, 3)
    assert_allclose(g, np.diag([1, 1, -2]) / np.sqrt(3))
    assert_allclose(gell_mann(5, 3), [[0, 0, -1j], [0, 0, 0], [1j, 0, 0]])
    with pytest.raises(ValidationError):
        gell_mann(9, 3)
    with pytest.raises(ValidationError):
        gell_mann(0, 3)


@pytest.mark.parametrize("N", range(2, 7))
def test_gell_mann_family(N):
    fam = gell_mann_family(N)
    assert len(fam) == N * N - 1
    for g in fam:
        assert abs(np.trace(g)) <= 1e-14
        assert_allclose(g, g.conj().T)
    # orthogonal with Tr(g_a g_b) = 2 delta_ab
    gram = np.array([[np.trace(a @ b) for b in fam] for a in fam])
    assert_allclose(gram, 2 * np.eye(N * N - 1), atol=1e-13)


def test_euler_identity_and_count():
    for N in (2, 3, 4, 5, 6):
        assert_allclose(euler_unitary((N, np.zeros(N * N - 1))), np.eye(N), atol=1e-15)
    with pytest.raises(ValidationError):
        EulerAngles(3, np.zeros(7))


def test_euler_N2_matches_zyz():
    rng = np.random.default_rng(3)
    for _ in range(20):
        t = rng.uniform(-np.pi, np.pi, 3)
        direct = expm(1j * t[0] * PAULI_Z) @ expm(1j * t[1] * PAULI_Y) @ expm(1j * t[2] * PAULI_Z)
        assert np.max(np.abs(euler_unitary((2, t)) - direct)) <= 1e-13


def test_euler_against_generator_exponentials():
    rng = np.random.default_rng(4)
    N = 3
    t = rng.uniform(-np.pi, np.pi, 8)
    E = lambda i, a: expm(1j * a * gell_mann(i, N))  # noqa: E731
    sub = np.eye(3, dtype=complex)
    sub[:2, :2] = expm(1j * t[4] * PAULI_Z) @ expm(1j * t[5] * PAULI_Y) @ expm(1j * t[6] * PAULI_Z)
    direct = E(3, t[0]) @ E(2, t[1]) @ E(3, t[2]) @ E(5, t[3]) @ sub @ E(8, t[7])
    assert_allclose(euler_unitary((N, t)), direct, atol=1e-13)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_euler_special_unitary(N, seed):
    t = np.random.default_rng(seed).uniform(-np.pi, np.pi, N * N - 1)
    U = euler_unitary(EulerAngles(N, t))
    assert is_unitary(U, tol=1e-10)
    assert abs(np.linalg.det(U) - 1) <= 1e-10


def test_lift_m1_identical():
    single, _ = approx_weight_gate(1.3, 0.1)
    lifted = compile_multiqubit(single, "vm")
    x = GridSpec(1, 512).points
    assert np.max(np.abs(eval_h_batch(lifted, x) - eval_h_batch(single, x))) <= 1e-12


def test_lift_weight_gate_on_second_coordinate():
    single, _ = approx_weight_gate(2.0, 0.1, coord=1, arg_dim=2)
    lifted = compile_multiqubit(single, "vm")
    X = GridSpec(2, 32).points
    eq = multiqubit_equivalence(single, lifted, X)
    assert eq["h_sup"] <= 1e-9 and eq["leak_sup"] <= 1e-12
    assert lifted.dim == 4


def test_lift_complement_block_is_identity():
    single, _ = approx_weight_gate(-0.8, 0.2, coord=2, arg_dim=3)
    single = CircuitIR(2, 3, single.gates + (encode(0), rz(0.3), encode(1, -1), ry(0.2)))
    lifted = compile_multiqubit(single, "vm")
    X = np.random.default_rng(5).uniform(0, 1, (30, 3))
    U = eval_unitary_batch(lifted, X)
    assert np.max(np.abs(U[:, 2:, 2:] - np.eye(4))) <= 1e-12
    assert np.max(np.abs(U[:, :2, 2:])) <= 1e-12
    assert np.max(np.abs(U[:, :2, :2] - eval_unitary_batch(single, X))) <= 1e-9


def test_lift_tally_two_per_full_encoding():
    single = CircuitIR(2, 3, (encode(0), encode(2, -1), rz(0.1), encode(1)))
    lifted = compile_multiqubit(single, "vm")
    assert lifted.meta["block_encodings"] == 6
    assert lifted.meta["block_encodings_per_full_encoding"] == 2


def test_lift_vm_prime_counts_and_rejects_half():
    single = CircuitIR(2, 3, (encode(0), rz(0.2), encode(2, -1)))
    lifted = compile_multiqubit(single, "vm-prime")
    assert lifted.dim == 4
    assert lifted.meta["block_encodings"] == 2 * (3 * 3 - 1)
    half, _ = approx_weight_gate(0.7, 0.2, arg_dim=2)
    with pytest.raises(ConstructionError):
        compile_multiqubit(half, "vm_prime")


def test_lift_rejects_bad_variant():
    with pytest.raises(ValidationError):
        compile_multiqubit(CircuitIR(2, 1), "vm3")
