"""Dense statevector / density-matrix kernels.

Register order is little-endian project-wide: qubit 0 is the least
significant bit of the basis index.  All Pauli-product exponentials are
applied exactly via the closed form exp(-i a P) = cos(a) I - i sin(a) P,
which is valid because every Pauli product squares to the identity.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problems import Axis, PauliTerm, QubitId, ScheduleTag, schedule_weight

NORM_TOL = 1e-10


class RegisterError(ValueError):
    """Operation referenced a qubit outside the state's register."""


@dataclass
class StateVector:
    amplitudes: np.ndarray
    register: tuple[QubitId, ...]

    @classmethod
    def zero(cls, register) -> "StateVector":
        amp = np.zeros(2 ** len(register), dtype=complex)
        amp[0] = 1.0
        return cls(amp, tuple(register))

    @property
    def n_qubits(self) -> int:
        return len(self.register)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.register)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def position(self, qubit: QubitId) -> int:
        try:
            return self.register.index(qubit)
        except ValueError:
            raise RegisterError(f"qubit {qubit.label!r} not in register") from None

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.register)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class DensityMatrix:
    matrix: np.ndarray
    register: tuple[QubitId, ...]

    @classmethod
    def zero(cls, register) -> "DensityMatrix":
        dim = 2 ** len(register)
        m = np.zeros((dim, dim), dtype=complex)
        m[0, 0] = 1.0
        return cls(m, tuple(register))

    @property
    def n_qubits(self) -> int:
        return len(self.register)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.matrix.copy(), self.register)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def position(self, qubit: QubitId) -> int:
        try:
            return self.register.index(qubit)
        except ValueError:
            raise RegisterError(f"qubit {qubit.label!r} not in register") from None

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def check(self, psd: bool = False):
        """Verify Hermiticity / unit trace (and optionally positivity)."""
        if abs(self.trace() - 1.0) > NORM_TOL:
            raise ValueError(f"trace deviates from 1 by {abs(self.trace() - 1.0):.2e}")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > NORM_TOL:
            raise ValueError("density matrix is not Hermitian")
        if psd:
            lo = float(np.min(np.linalg.eigvalsh(self.matrix)))
            if lo < -1e-8:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.2e}")


State = StateVector | DensityMatrix


class GateKind(str, Enum):
    X = "X"
    Z = "Z"
    H = "H"
    CNOT = "CNOT"
    PHASE = "PHASE"
    PAULI_EXP = "PAULI_EXP"


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    targets: tuple[QubitId, ...]
    theta: float = 0.0                 # PHASE angle or PAULI_EXP angle
    term: PauliTerm | None = None      # PAULI_EXP only

    def __post_init__(self):
        arity = {GateKind.X: 1, GateKind.Z: 1, GateKind.H: 1,
                 GateKind.CNOT: 2, GateKind.PHASE: 1}
        if self.kind is GateKind.PAULI_EXP:
            if self.term is None:
                raise ValueError("PAULI_EXP requires a term")
        elif len(self.targets) != arity[self.kind]:
            raise ValueError(f"{self.kind.value} expects {arity[self.kind]} target(s)")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("gate targets must be distinct")


def _masks(state: State, term: PauliTerm) -> tuple[int, int]:
    """(xmask, zmask) of the Pauli product in the state's register."""
    xmask = zmask = 0
    for q, ax in term.factors:
        pos = state.position(q)
        if ax is Axis.X:
            xmask |= 1 << pos
        else:
            zmask |= 1 << pos
    return xmask, zmask


def _z_signs(n: int, zmask: int) -> np.ndarray:
    """(-1)^popcount(i & zmask) over basis indices i."""
    idx = np.arange(2 ** n)
    par = np.zeros(2 ** n, dtype=np.int64)
    while zmask:
        bit = zmask & -zmask
        par ^= ((idx & bit) != 0).astype(np.int64)
        zmask ^= bit
    return 1 - 2 * par


def pauli_action(state_arr: np.ndarray, xmask: int, zmask: int, side: str = "left") -> np.ndarray:
    """Apply a Pauli product (given by bit masks) to a vector or matrix.

    ``side`` selects P @ rho ("left") or rho @ P ("right") for matrices.
    """
    n = state_arr.shape[0].bit_length() - 1
    signs = _z_signs(n, zmask)
    perm = np.arange(2 ** n) ^ xmask
    if state_arr.ndim == 1:
        # (P psi)[i] = signs[i ^ xmask] * psi[i ^ xmask] for X then Z order;
        # our convention is P = (product of X) * (product of Z), pure-axis
        # products make the order irrelevant.
        return signs[perm] * state_arr[perm] if zmask else state_arr[perm]
    if side == "left":
        out = state_arr[perm, :]
        if zmask:
            out = (signs[perm])[:, None] * out
        return out
    out = state_arr[:, perm]
    if zmask:
        out = out * (signs[perm])[None, :]
    return out


def apply_pauli_exponential(state: State, term: PauliTerm, angle: float) -> State:
    """In-place state <- exp(-i * angle * P) state (conjugation for matrices)."""
    xmask, zmask = _masks(state, term)
    if xmask == 0:
        # diagonal phase mask
        phases = np.exp(-1j * angle * _z_signs(state.n_qubits, zmask))
        if isinstance(state, StateVector):
            state.amplitudes *= phases
        else:
            state.matrix *= np.outer(phases, phases.conj())
        return state
    c, s = np.cos(angle), np.sin(angle)
    if isinstance(state, StateVector):
        state.amplitudes = c * state.amplitudes - 1j * s * pauli_action(state.amplitudes, xmask, zmask)
        return state
    rho = state.matrix
    p_rho = pauli_action(rho, xmask, zmask, "left")
    rho_p = pauli_action(rho, xmask, zmask, "right")
    p_rho_p = pauli_action(p_rho, xmask, zmask, "right")
    state.matrix = c * c * rho - 1j * c * s * (p_rho - rho_p) + s * s * p_rho_p
    return state


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _contract_axis(arr: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(u, np.moveaxis(arr, axis, 0), axes=([1], [0]))
    return np.moveaxis(out, 0, axis)


def _apply_1q_unitary(state: State, u: np.ndarray, pos: int):
    # reshaping index i lists bit n-1 first (C order), so qubit pos maps to
    # axis n-1-pos on the row side (and n + n-1-pos on the column side)
    n = state.n_qubits
    ax = n - 1 - pos
    if isinstance(state, StateVector):
        psi = state.amplitudes.reshape([2] * n)
        state.amplitudes = _contract_axis(psi, u, ax).reshape(-1)
    else:
        dim = 2 ** n
        m = state.matrix.reshape([2] * (2 * n))
        m = _contract_axis(m, u, ax)
        m = _contract_axis(m, u.conj(), n + ax)
        state.matrix = m.reshape(dim, dim)


def apply_gate(state: State, gate: GateOp) -> State:
    """Apply a basic gate in place; PAULI_EXP delegates to the exact kernel."""
    if gate.kind is GateKind.PAULI_EXP:
        return apply_pauli_exponential(state, gate.term, gate.theta)
    positions = [state.position(q) for q in gate.targets]
    if gate.kind is GateKind.H:
        _apply_1q_unitary(state, _H, positions[0])
    elif gate.kind is GateKind.X:
        _apply_1q_unitary(state, _X, positions[0])
    elif gate.kind is GateKind.Z:
        _apply_1q_unitary(state, _Z, positions[0])
    elif gate.kind is GateKind.PHASE:
        u = np.diag([1.0, np.exp(1j * gate.theta)]).astype(complex)
        _apply_1q_unitary(state, u, positions[0])
    elif gate.kind is GateKind.CNOT:
        ctrl, tgt = positions
        idx = np.arange(2 ** state.n_qubits)
        # self-inverse permutation: flip target bit where control bit is set
        perm = np.where(((idx >> ctrl) & 1) == 1, idx ^ (1 << tgt), idx)
        if isinstance(state, StateVector):
            state.amplitudes = state.amplitudes[perm]
        else:
            state.matrix = state.matrix[np.ix_(perm, perm)]
    return state


def expectation(state: State, terms: list[PauliTerm], s: float) -> float:
    """<H(s)> with schedule weights (1-s)/s/1 applied per term tag."""
    total = 0.0
    for term in terms:
        w = schedule_weight(term.schedule_tag, s)
        if w == 0.0 or term.coefficient == 0.0:
            continue
        xmask, zmask = _masks(state, term)
        if isinstance(state, StateVector):
            val = np.vdot(state.amplitudes, pauli_action(state.amplitudes, xmask, zmask))
        else:
            val = np.trace(pauli_action(state.matrix, xmask, zmask, "left"))
        total += w * term.coefficient * float(np.real(val))
    return total


def inner_fidelity(a: State, b: StateVector) -> float:
    """Global-phase-invariant fidelity of a (pure or mixed) state with |b>."""
    if a.register != b.register:
        raise RegisterError("register mismatch in fidelity")
    if isinstance(a, StateVector):
        return float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    return float(np.real(np.vdot(b.amplitudes, a.matrix @ b.amplitudes)))


def partial_trace(dm: DensityMatrix, keep: set[QubitId] | list[QubitId]) -> DensityMatrix:
    keep_positions = sorted(dm.position(q) for q in keep)
    n = dm.n_qubits
    k = len(keep_positions)
    drop = [p for p in range(n) if p not in keep_positions]
    idx = np.arange(2 ** n)
    keep_part = np.zeros(2 ** n, dtype=np.int64)
    for t, p in enumerate(keep_positions):
        keep_part |= ((idx >> p) & 1) << t
    drop_part = np.zeros(2 ** n, dtype=np.int64)
    for t, p in enumerate(drop):
        drop_part |= ((idx >> p) & 1) << t
    order = np.argsort((drop_part << k) | keep_part, kind="stable")
    rho = dm.matrix[np.ix_(order, order)].reshape(2 ** (n - k), 2 ** k, 2 ** (n - k), 2 ** k)
    out = np.trace(rho, axis1=0, axis2=2)
    new_reg = tuple(dm.register[p] for p in keep_positions)
    return DensityMatrix(out, new_reg)


def sample_measurement(state: State, rng: np.random.Generator) -> int:
    """Sample a computational-basis outcome (basis index, little-endian)."""
    p = state.probabilities()
    p = np.clip(np.real(p), 0.0, None)
    p = p / p.sum()
    return int(rng.choice(len(p), p=p))


def dump_statevector(sv: StateVector) -> bytes:
    """Debug dump: u64 length prefix + interleaved re/im doubles, little-endian."""
    n = len(sv.amplitudes)
    out = struct.pack("<Q", n)
    return out + sv.amplitudes.astype("<c16").tobytes()


def load_statevector(data: bytes, register) -> StateVector:
    (n,) = struct.unpack_from("<Q", data)
    amps = np.frombuffer(data, dtype="<c16", offset=8, count=n).astype(complex)
    return StateVector(amps, tuple(register))
