import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqanneal.problems import Axis, PauliTerm, QubitId, ScheduleTag
from dqanneal.states import (DensityMatrix, GateKind, GateOp, RegisterError,
                             StateVector, apply_gate, apply_pauli_exponential,
                             dump_statevector, expectation, inner_fidelity,
                             load_statevector, partial_trace,
                             sample_measurement)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
I2 = np.eye(2, dtype=complex)


def reg(n):
    return tuple(QubitId(i, f"q{i}") for i in range(n))


def dense_op(mats):
    """Tensor product with mats[i] acting on qubit i (little-endian kron order)."""
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(m, out)
    return out


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return v / np.linalg.norm(v)


def test_zero_state_and_norm():
    sv = StateVector.zero(reg(3))
    assert sv.norm() == 1.0
    assert sv.amplitudes[0] == 1.0
    assert sv.probabilities()[0] == 1.0


def test_position_raises_for_foreign_qubit():
    sv = StateVector.zero(reg(2))
    with pytest.raises(RegisterError):
        sv.position(QubitId(5, "zz"))


@pytest.mark.parametrize("kind,mat", [(GateKind.X, X), (GateKind.Z, Z), (GateKind.H, H)])
@pytest.mark.parametrize("pos", [0, 1, 2])
def test_single_qubit_gates_match_dense(kind, mat, pos):
    r = reg(3)
    psi = random_state(3, 7)
    sv = StateVector(psi.copy(), r)
    apply_gate(sv, GateOp(kind, (r[pos],)))
    mats = [I2] * 3
    mats[pos] = mat
    expect = dense_op(mats) @ psi
    assert np.allclose(sv.amplitudes, expect)


def test_phase_gate_dense():
    r = reg(2)
    psi = random_state(2, 3)
    sv = StateVector(psi.copy(), r)
    apply_gate(sv, GateOp(GateKind.PHASE, (r[1],), theta=0.7))
    u = np.diag([1.0, np.exp(0.7j)])
    assert np.allclose(sv.amplitudes, dense_op([I2, u]) @ psi)


def test_cnot_matches_dense():
    r = reg(3)
    psi = random_state(3, 11)
    sv = StateVector(psi.copy(), r)
    apply_gate(sv, GateOp(GateKind.CNOT, (r[2], r[0])))  # control q2, target q0
    expect = psi.copy()
    dim = 8
    out = np.zeros(dim, dtype=complex)
    for i in range(dim):
        j = i ^ 1 if (i >> 2) & 1 else i
        out[j] = expect[i]
    assert np.allclose(sv.amplitudes, out)


def test_cnot_on_density_matrix_is_conjugation():
    r = reg(2)
    psi = random_state(2, 5)
    dm = StateVector(psi.copy(), r).to_density_matrix()
    apply_gate(dm, GateOp(GateKind.CNOT, (r[0], r[1])))
    sv = StateVector(psi.copy(), r)
    apply_gate(sv, GateOp(GateKind.CNOT, (r[0], r[1])))
    assert np.allclose(dm.matrix, np.outer(sv.amplitudes, sv.amplitudes.conj()))


def zz_term(r, i, j, coeff=1.0):
    return PauliTerm(coeff, ((r[i], Axis.Z), (r[j], Axis.Z)), ScheduleTag.PROBLEM)


def xx_term(r, i, j, coeff=1.0):
    return PauliTerm(coeff, ((r[i], Axis.X), (r[j], Axis.X)), ScheduleTag.DRIVER)


@pytest.mark.parametrize("angle", [0.0, 0.3, -1.2, np.pi])
def test_zz_exponential_matches_expm(angle):
    r = reg(3)
    psi = random_state(3, 17)
    sv = StateVector(psi.copy(), r)
    apply_pauli_exponential(sv, zz_term(r, 0, 2), angle)
    P = dense_op([Z, I2, Z])
    expect = (np.cos(angle) * np.eye(8) - 1j * np.sin(angle) * P) @ psi
    assert np.allclose(sv.amplitudes, expect)


@pytest.mark.parametrize("angle", [0.4, -0.9])
def test_xx_exponential_matches_expm(angle):
    r = reg(2)
    psi = random_state(2, 23)
    sv = StateVector(psi.copy(), r)
    apply_pauli_exponential(sv, xx_term(r, 0, 1), angle)
    P = dense_op([X, X])
    expect = (np.cos(angle) * np.eye(4) - 1j * np.sin(angle) * P) @ psi
    assert np.allclose(sv.amplitudes, expect)


def test_exponential_on_density_matrix():
    r = reg(2)
    psi = random_state(2, 29)
    dm = StateVector(psi.copy(), r).to_density_matrix()
    apply_pauli_exponential(dm, xx_term(r, 0, 1), 0.8)
    P = dense_op([X, X])
    u = np.cos(0.8) * np.eye(4) - 1j * np.sin(0.8) * P
    expect = u @ np.outer(psi, psi.conj()) @ u.conj().T
    assert np.allclose(dm.matrix, expect)
    dm.check(psd=True)


@given(st.floats(-3, 3, allow_nan=False), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_pauli_exponential_preserves_norm(angle, seed):
    r = reg(3)
    sv = StateVector(random_state(3, seed), r)
    apply_pauli_exponential(sv, zz_term(r, 1, 2), angle)
    apply_pauli_exponential(sv, xx_term(r, 0, 2), angle / 2)
    assert abs(sv.norm() - 1.0) < 1e-12


def test_expectation_with_schedule_weights():
    r = reg(2)
    # |00>: <Z0 Z1> = 1, <X> = 0
    sv = StateVector.zero(r)
    terms = [zz_term(r, 0, 1, 2.0),
             PauliTerm(1.0, ((r[0], Axis.X),), ScheduleTag.DRIVER)]
    assert expectation(sv, terms, 1.0) == pytest.approx(2.0)
    assert expectation(sv, terms, 0.5) == pytest.approx(1.0)  # 0.5*2 + 0.5*0
    dm = sv.to_density_matrix()
    assert expectation(dm, terms, 1.0) == pytest.approx(2.0)


def test_inner_fidelity_is_phase_invariant():
    r = reg(2)
    psi = random_state(2, 31)
    a = StateVector(psi * np.exp(0.3j), r)
    b = StateVector(psi.copy(), r)
    assert inner_fidelity(a, b) == pytest.approx(1.0)
    dm = DensityMatrix(np.eye(4) / 4.0, r)
    assert inner_fidelity(dm, b) == pytest.approx(0.25)


def test_partial_trace_of_product_state():
    r = reg(3)
    v0 = np.array([1.0, 0.0], dtype=complex)
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    v1 = np.array([0.6, 0.8j], dtype=complex)
    full = np.kron(v1, np.kron(plus, v0))  # q0 = v0, q1 = plus, q2 = v1
    dm = StateVector(full, r).to_density_matrix()
    red = partial_trace(dm, [r[1]])
    assert np.allclose(red.matrix, np.outer(plus, plus.conj()))
    red2 = partial_trace(dm, [r[0], r[2]])
    expect = np.kron(np.outer(v1, v1.conj()), np.outer(v0, v0.conj()))
    assert np.allclose(red2.matrix, expect)
    assert red2.register == (r[0], r[2])


def test_partial_trace_of_entangled_pair_is_mixed():
    r = reg(2)
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    red = partial_trace(StateVector(bell, r).to_density_matrix(), [r[0]])
    assert np.allclose(red.matrix, np.eye(2) / 2.0)


def test_sample_measurement_distribution():
    r = reg(2)
    sv = StateVector(np.array([np.sqrt(0.7), 0, 0, np.sqrt(0.3)], dtype=complex), r)
    rng = np.random.default_rng(0)
    draws = [sample_measurement(sv, rng) for _ in range(4000)]
    assert set(draws) <= {0, 3}
    frac = draws.count(0) / len(draws)
    assert abs(frac - 0.7) < 0.03


def test_statevector_binary_round_trip():
    r = reg(3)
    sv = StateVector(random_state(3, 41), r)
    again = load_statevector(dump_statevector(sv), r)
    assert np.array_equal(again.amplitudes, sv.amplitudes)


def test_density_matrix_check_flags_bad_trace():
    r = reg(1)
    dm = DensityMatrix(np.eye(2, dtype=complex), r)
    with pytest.raises(ValueError):
        dm.check()
