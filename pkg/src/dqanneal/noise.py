"""Noisy entanglement resources and the distributed-CNOT channel.

The shared pair is a Werner state rho = x |Phi><Phi| + (1-x)/4 I with
fidelity F = x + (1-x)/4 and infidelity delta = 1 - F.  A remote CNOT
consuming one such pair acts as

    DCNOT[rho] = x CNOT[rho] + (1-x) Theta[rho]

where Theta is the telegate run with a maximally mixed resource.  With M_D
consumed pairs the noisy/ideal output fidelity obeys
p_N >= (1 - 4 delta / 3)^M_D, tightened to (1 - 4 delta (1-beta)/3)^M_D by
the per-fault survival factor beta.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .problems import QubitId
from .states import DensityMatrix, GateKind, GateOp, StateVector, apply_gate


@dataclass(frozen=True)
class BellResource:
    x: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0):
            raise ValueError(f"Werner weight x={self.x} outside [0, 1]")

    @property
    def fidelity(self) -> float:
        return self.x + (1.0 - self.x) / 4.0

    @property
    def delta(self) -> float:
        return 1.0 - self.fidelity

    @classmethod
    def from_fidelity(cls, F: float) -> "BellResource":
        if not (0.25 <= F <= 1.0):
            raise ValueError(f"entanglement fidelity {F} outside [0.25, 1]")
        return cls(1.0 - (4.0 / 3.0) * (1.0 - F))

    @classmethod
    def from_delta(cls, delta: float) -> "BellResource":
        return cls.from_fidelity(1.0 - delta)


# ---------------------------------------------------------------------------
# Telegate circuit.
#
# Register [c, t, e1, e2] (little-endian positions 0..3): e1 sits with the
# control's node, e2 with the target's, (e1, e2) hold the shared pair.  The
# mid-circuit measurements with feed-forward are equivalent to coherent
# controlled corrections followed by discarding e1, e2, which is how the
# exact channel is evaluated; the trajectory sampler performs the actual
# measurements.
# ---------------------------------------------------------------------------

_BELL_STATES = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


def _telegate_unitary() -> np.ndarray:
    """Dense 16x16 unitary of the measurement-deferred telegate circuit."""
    reg = tuple(QubitId(i, lab) for i, lab in enumerate(["c", "t", "e1", "e2"]))
    c, t, e1, e2 = reg
    dim = 16
    u = np.eye(dim, dtype=complex)
    cols = []
    for j in range(dim):
        sv = StateVector(u[:, j].copy(), reg)
        apply_gate(sv, GateOp(GateKind.CNOT, (c, e1)))
        apply_gate(sv, GateOp(GateKind.CNOT, (e1, e2)))   # deferred X correction
        apply_gate(sv, GateOp(GateKind.CNOT, (e2, t)))
        apply_gate(sv, GateOp(GateKind.H, (e2,)))
        cols.append(sv.amplitudes)
    u_mid = np.stack(cols, axis=1)
    # deferred Z correction: CZ between e2 and c
    idx = np.arange(dim)
    cz = np.where((((idx >> 3) & 1) & ((idx >> 0) & 1)) == 1, -1.0, 1.0)
    return cz[:, None] * u_mid


@lru_cache(maxsize=1)
def _theta_superop() -> np.ndarray:
    """16x16 superoperator of Theta on the (control, target) pair.

    Row-major vectorization: Theta[E] reshaped from S @ vec(E).
    """
    u = _telegate_unitary()
    s = np.zeros((16, 16), dtype=complex)
    eye4 = np.eye(4, dtype=complex) / 4.0
    for i in range(4):
        for j in range(4):
            e = np.zeros((4, 4), dtype=complex)
            e[i, j] = 1.0
            rho_ext = np.kron(eye4, e)   # kron(high bits = e1,e2; low bits = c,t)
            out = u @ rho_ext @ u.conj().T
            # trace out e1 (pos 2), e2 (pos 3): block-trace over the high factor
            red = sum(out[4 * b: 4 * b + 4, 4 * b: 4 * b + 4] for b in range(4))
            s[:, 4 * i + j] = red.reshape(-1)
    return s


@lru_cache(maxsize=1)
def _cnot_superop() -> np.ndarray:
    cnot = np.eye(4, dtype=complex)[:, [0, 3, 2, 1]]
    # basis order |t c>: index = 2*t + c (c is qubit 0). CNOT c->t flips t when c=1:
    # |00>=0 -> 0, |01>(c=1,t=0) -> |11>=3, |10>=2 -> 2, |11> -> 1
    return np.kron(cnot, cnot.conj())


def dcnot_superop(resource: BellResource) -> np.ndarray:
    """Superoperator of the noisy remote CNOT on (control, target)."""
    x = resource.x
    return x * _cnot_superop() + (1.0 - x) * _theta_superop()


def apply_two_qubit_superop(dm: DensityMatrix, sop: np.ndarray,
                            control: QubitId, target: QubitId) -> DensityMatrix:
    """Apply a 2-qubit channel (row-major 16x16 superoperator) in place."""
    n = dm.n_qubits
    pc, pt = dm.position(control), dm.position(target)
    idx = np.arange(2 ** n)
    sub = ((idx >> pt) & 1) * 2 + ((idx >> pc) & 1)
    others = [p for p in range(n) if p not in (pc, pt)]
    comp = np.zeros(2 ** n, dtype=np.int64)
    for t_i, p in enumerate(others):
        comp |= ((idx >> p) & 1) << t_i
    m = 2 ** (n - 2)
    order = np.argsort((sub << (n - 2)) | comp, kind="stable")
    rho = dm.matrix[np.ix_(order, order)].reshape(4, m, 4, m)
    # vectorize the two system indices row-major: row = 4 * i_sub + j_sub
    rho = np.transpose(rho, (0, 2, 1, 3)).reshape(16, m * m)
    rho = sop @ rho
    rho = rho.reshape(4, 4, m, m).transpose(0, 2, 1, 3).reshape(4 * m, 4 * m)
    rank = np.argsort(order)
    dm.matrix = rho[np.ix_(rank, rank)]
    return dm


def dcnot_channel(dm: DensityMatrix, control: QubitId, target: QubitId,
                  resource: BellResource) -> DensityMatrix:
    """Exact noisy remote CNOT: x CNOT[rho] + (1-x) Theta[rho], in place."""
    if control == target:
        raise ValueError("control and target must differ")
    return apply_two_qubit_superop(dm, dcnot_superop(resource), control, target)


def _measure_qubit(sv: StateVector, pos: int, rng: np.random.Generator) -> int:
    """Projective Z measurement of one qubit with Born sampling, in place."""
    idx = np.arange(len(sv.amplitudes))
    mask1 = ((idx >> pos) & 1) == 1
    p1 = float(np.sum(np.abs(sv.amplitudes[mask1]) ** 2))
    outcome = 1 if rng.random() < p1 else 0
    keep = mask1 if outcome == 1 else ~mask1
    sv.amplitudes[~keep] = 0.0
    sv.amplitudes /= np.sqrt(p1 if outcome == 1 else 1.0 - p1)
    return outcome


def dcnot_trajectory(state: StateVector, control: QubitId, target: QubitId,
                     resource: BellResource, rng: np.random.Generator) -> StateVector:
    """Pure-state unraveling of the noisy remote CNOT.

    Samples the Werner mixture in the Bell basis, runs the telegate with
    sampled mid-circuit measurement outcomes, applies the corrections and
    discards the measured pair.  Averages to ``dcnot_channel``.
    """
    if control == target:
        raise ValueError("control and target must differ")
    x = resource.x
    probs = np.array([x + (1 - x) / 4, (1 - x) / 4, (1 - x) / 4, (1 - x) / 4])
    which = rng.choice(4, p=probs / probs.sum())
    bell = _BELL_STATES[["phi+", "phi-", "psi+", "psi-"][which]]

    n = state.n_qubits
    e1 = QubitId(n, "_e1")
    e2 = QubitId(n + 1, "_e2")
    ext_reg = state.register + (e1, e2)
    # e1 at position n, e2 at n+1; bell index = 2*b_e2 + b_e1
    amp = np.kron(bell, state.amplitudes)
    ext = StateVector(amp, ext_reg)

    apply_gate(ext, GateOp(GateKind.CNOT, (control, e1)))
    m1 = _measure_qubit(ext, n, rng)
    if m1:
        apply_gate(ext, GateOp(GateKind.X, (e2,)))
    apply_gate(ext, GateOp(GateKind.CNOT, (e2, target)))
    apply_gate(ext, GateOp(GateKind.H, (e2,)))
    m2 = _measure_qubit(ext, n + 1, rng)
    if m2:
        apply_gate(ext, GateOp(GateKind.Z, (control,)))

    # ancillas are now in |m1>|m2>; slice them away
    idx = np.arange(2 ** (n + 2))
    sel = (((idx >> n) & 1) == m1) & (((idx >> (n + 1)) & 1) == m2)
    state.amplitudes = ext.amplitudes[sel]
    return state


# ---------------------------------------------------------------------------
# Closed-form fidelity bounds and the beta ansatz
# ---------------------------------------------------------------------------

def pn_bound(delta: float, M_D: int) -> float:
    """No-fault lower bound (1 - 4 delta / 3)^M_D."""
    if not (0.0 <= delta <= 0.75):
        raise ValueError(f"delta={delta} outside [0, 3/4]")
    if M_D < 0:
        raise ValueError("M_D must be non-negative")
    return (1.0 - (4.0 / 3.0) * delta) ** M_D


def pn_beta(delta: float, M_D: int, beta: float) -> float:
    """Tightened form (1 - 4 delta (1-beta) / 3)^M_D."""
    if not (0.0 <= beta < 1.0):
        raise ValueError(f"beta={beta} outside [0, 1)")
    if not (0.0 <= delta <= 0.75):
        raise ValueError(f"delta={delta} outside [0, 3/4]")
    if M_D < 0:
        raise ValueError("M_D must be non-negative")
    return (1.0 - (4.0 / 3.0) * delta * (1.0 - beta)) ** M_D


def fit_beta(curve: list[tuple[float, float]], M_D: int,
             floor: float = 0.0) -> tuple[float, float]:
    """Least-squares fit of beta to measured (delta, p) pairs, in log domain.

    Points with p <= floor (the maximally-mixed plateau) are excluded.
    Returns (beta_hat, rms log-residual).  The search is a deterministic
    coarse grid followed by golden-section refinement.
    """
    pts = [(d, p) for d, p in curve if p > floor and p > 0.0]
    if len(pts) < 3:
        raise ValueError(f"need >= 3 fittable points above the floor, got {len(pts)}")
    deltas = np.array([d for d, _ in pts])
    logp = np.log(np.array([p for _, p in pts]))

    def loss(beta: float) -> float:
        arg = 1.0 - (4.0 / 3.0) * deltas * (1.0 - beta)
        if np.any(arg <= 0.0):
            return np.inf
        return float(np.sum((logp - M_D * np.log(arg)) ** 2))

    hi = 1.0 - 1e-12
    grid = np.linspace(0.0, hi, 2001)
    values = [loss(b) for b in grid]
    k = int(np.argmin(values))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = loss(x1), loss(x2)
    for _ in range(200):
        if b - a < 1e-14:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = loss(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = loss(x2)
    beta_hat = 0.5 * (a + b)
    residual = float(np.sqrt(loss(beta_hat) / len(pts)))
    return beta_hat, residual


def measure_beta_direct(partition, plan, resource: BellResource) -> float:
    """beta = <Psi| D_1[rho_0] |Psi> via explicit single-fault enumeration.

    Averages, over every telegate position, the exact-density run where that
    one telegate suffers a fault (maximally mixed resource) and all others
    are perfect, then overlaps with the ideal-distribution output.
    """
    from .evolution import run_fault_pattern, run_trotter_ideal
    from .partition import prepare_initial_state

    if plan.M_D == 0:
        raise ValueError("plan has no telegates; beta is undefined")
    ideal = run_trotter_ideal(plan, prepare_initial_state(plan.partition))
    psi = ideal.final_state
    total = 0.0
    for j in range(plan.M_D):
        rho = run_fault_pattern(plan, prepare_initial_state(plan.partition, density=True),
                                fault_positions={j})
        total += float(np.real(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)))
    return total / plan.M_D
