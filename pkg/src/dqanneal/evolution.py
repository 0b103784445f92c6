"""The three evolutions: continuous annealing, ideal Trotterized distribution,
and noisy telegate-compiled distribution.

The continuous reference integrates the Schrodinger equation under
H(t) = (1-s) H_driver + s H_problem with a fixed-step fourth-order method and
step-doubling acceptance on the final energy.  The Trotterized evolutions
alternate the local exponentials U_L(t_k) with the compiled non-local program
U_N(t_k), coefficients evaluated at the left step endpoint; each non-local
two-qubit exponential costs two remote CNOTs (telegates).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .noise import (BellResource, _theta_superop, apply_two_qubit_superop,
                    dcnot_channel, dcnot_trajectory, dcnot_superop)
from .partition import (Partition, logical_projection, misaligned_population,
                        prepare_initial_state, trivial_partition)
from .problems import (Axis, IsingProblem, PauliTerm, QubitId, Schedule,
                       ScheduleTag, build_problem_terms, schedule_weight)
from .rng import trajectory_rng
from .states import (DensityMatrix, GateKind, GateOp, State, StateVector,
                     apply_gate, apply_pauli_exponential, expectation,
                     inner_fidelity)


class CompileError(ValueError):
    """Plan cannot be compiled (unsupported non-local term)."""


class ConvergenceError(RuntimeError):
    """Continuous integrator failed to meet tolerance within the step budget."""


@dataclass(frozen=True)
class NonlocalOp:
    kind: str               # "zz" or "xx"
    a: QubitId
    b: QubitId
    angle: float            # theta of exp(-i theta P)


@dataclass(frozen=True)
class TrotterStep:
    k: int
    s: float
    local: tuple[tuple[PauliTerm, float], ...]   # (term, angle)
    nonlocal_ops: tuple[NonlocalOp, ...]


@dataclass
class TrotterPlan:
    partition: Partition
    schedule: Schedule
    M: int
    dt: float
    steps: list[TrotterStep]
    M_D: int


@dataclass
class EvolutionResult:
    final_state: State                 # over the physical (partition) register
    logical_state: State               # contracted to the source problem register
    energy: float                      # <H_F> of the logical state
    fidelity_gs: float
    aligned_probability: float
    telegates_used: int
    wall_time: float
    p_N: float | None = None           # noisy vs ideal-distribution fidelity
    sigma_stat: float = 0.0
    trajectories: list[dict] = field(default_factory=list)


def _term_sort_key(term: PauliTerm):
    return tuple(q.index for q in term.qubits)


def _ordered(terms, tag):
    return sorted((t for t in terms if t.schedule_tag is tag), key=_term_sort_key)


def compile_trotter_plan(partition: Partition, schedule: Schedule, M: int,
                         endpoint: str = "left") -> TrotterPlan:
    """Compile the per-step gate program for the split evolution.

    Step k evaluates the schedule at the left endpoint t_k = k dt (``endpoint
    = "mid"`` switches to midpoints).  Factors with exactly zero step
    coefficient are skipped and consume no telegates.
    """
    if M < 1:
        raise CompileError(f"M must be >= 1, got {M}")
    for term in partition.nonlocal_terms:
        if len(term.qubits) > 2:
            raise CompileError(
                f"non-local term on {len(term.qubits)} qubits is unsupported; "
                "only two-qubit telegate programs are compiled")
    dt = schedule.t_F / M
    steps = []
    n_nonlocal = 0
    local_order = (_ordered(partition.local_terms, ScheduleTag.DRIVER)
                   + _ordered(partition.local_terms, ScheduleTag.PROBLEM)
                   + _ordered(partition.local_terms, ScheduleTag.STATIC))
    nonlocal_order = (_ordered(partition.nonlocal_terms, ScheduleTag.DRIVER)
                      + _ordered(partition.nonlocal_terms, ScheduleTag.PROBLEM)
                      + _ordered(partition.nonlocal_terms, ScheduleTag.STATIC))
    for k in range(M):
        s_k = (k + (0.5 if endpoint == "mid" else 0.0)) / M
        local = []
        for term in local_order:
            angle = schedule_weight(term.schedule_tag, s_k) * term.coefficient * dt
            if angle != 0.0:
                local.append((term, angle))
        nl = []
        for term in nonlocal_order:
            angle = schedule_weight(term.schedule_tag, s_k) * term.coefficient * dt
            if angle == 0.0:
                continue
            a, b = term.qubits
            kind = "xx" if term.axis is Axis.X else "zz"
            nl.append(NonlocalOp(kind, a, b, angle))
        n_nonlocal += len(nl)
        steps.append(TrotterStep(k, s_k, tuple(local), tuple(nl)))
    return TrotterPlan(partition, schedule, M, dt, steps, 2 * n_nonlocal)


def _run_nonlocal_op(state: State, op: NonlocalOp, cnot):
    """Telegate template: [CNOT; PHASE(2 theta) on b; CNOT], H-conjugated for XX."""
    if op.kind == "xx":
        apply_gate(state, GateOp(GateKind.H, (op.a,)))
        apply_gate(state, GateOp(GateKind.H, (op.b,)))
    cnot(state, op.a, op.b)
    apply_gate(state, GateOp(GateKind.PHASE, (op.b,), theta=2.0 * op.angle))
    cnot(state, op.a, op.b)
    if op.kind == "xx":
        apply_gate(state, GateOp(GateKind.H, (op.a,)))
        apply_gate(state, GateOp(GateKind.H, (op.b,)))


def _execute_plan(plan: TrotterPlan, state: State, cnot) -> tuple[State, int]:
    telegates = 0
    for step in plan.steps:
        for term, angle in step.local:
            apply_pauli_exponential(state, term, angle)
        for op in step.nonlocal_ops:
            _run_nonlocal_op(state, op, cnot)
            telegates += 2
    return state, telegates


def _finalize(plan_or_partition, state: State, telegates: int, started: float,
              p_N=None, sigma=0.0, trajectories=None) -> EvolutionResult:
    partition = (plan_or_partition.partition
                 if isinstance(plan_or_partition, TrotterPlan) else plan_or_partition)
    problem = partition.source
    aligned, logical = logical_projection(partition, state)
    hf_terms = build_problem_terms(problem)
    energy = expectation(logical, hf_terms, 1.0)
    gs = metrics.ground_state_space(problem)
    fid = metrics.fidelity_gs(logical, gs)
    return EvolutionResult(
        final_state=state, logical_state=logical, energy=energy, fidelity_gs=fid,
        aligned_probability=aligned, telegates_used=telegates,
        wall_time=time.perf_counter() - started, p_N=p_N, sigma_stat=sigma,
        trajectories=trajectories or [])


def _perfect_cnot(state: State, a: QubitId, b: QubitId):
    apply_gate(state, GateOp(GateKind.CNOT, (a, b)))


def run_trotter_ideal(plan: TrotterPlan, initial_state: State) -> EvolutionResult:
    """Execute the plan with telegate markers realized as perfect CNOTs."""
    started = time.perf_counter()
    state, telegates = _execute_plan(plan, initial_state.copy(), _perfect_cnot)
    return _finalize(plan, state, telegates, started)


def run_trotter_noisy(plan: TrotterPlan, initial_state: State, bell_fidelity: float,
                      mode: str = "exact-density", trajectories: int = 0,
                      seed: int = 0, density_cap: int = 10) -> EvolutionResult:
    """Execute the plan with every telegate consuming a noisy shared pair.

    ``mode="exact-density"`` evolves a density matrix through the exact
    channel; ``mode="trajectories"`` averages pure-state unravelings.  p_N is
    the fidelity between the noisy output and the ideal-distribution output.
    """
    started = time.perf_counter()
    resource = BellResource.from_fidelity(bell_fidelity)
    if not isinstance(initial_state, StateVector):
        raise ValueError("noisy mode expects a pure initial state (promoted internally)")
    ideal = run_trotter_ideal(plan, initial_state)
    psi_ideal = ideal.final_state

    if mode == "exact-density":
        n = len(plan.partition.register)
        if n > density_cap:
            raise ValueError(f"register of {n} qubits exceeds exact-density cap {density_cap}")
        rho = initial_state.to_density_matrix() if isinstance(initial_state, StateVector) \
            else initial_state.copy()
        sop = dcnot_superop(resource)

        def noisy_cnot(state, a, b):
            apply_two_qubit_superop(state, sop, a, b)

        state, telegates = _execute_plan(plan, rho, noisy_cnot)
        p_N = inner_fidelity(state, psi_ideal)
        return _finalize(plan, state, telegates, started, p_N=p_N)

    if mode != "trajectories":
        raise ValueError(f"unknown mode {mode!r}")
    if trajectories < 1:
        raise ValueError("trajectory count must be >= 1")

    records = []
    mean_rho = np.zeros((len(psi_ideal.amplitudes),) * 2, dtype=complex)
    for i in range(trajectories):
        rng = trajectory_rng(seed, i)

        def noisy_cnot(state, a, b, rng=rng):
            dcnot_trajectory(state, a, b, resource, rng)

        state, telegates = _execute_plan(plan, initial_state.copy(), noisy_cnot)
        pn_i = inner_fidelity(state, psi_ideal)
        records.append({"trajectory": i, "p_N": pn_i})
        mean_rho += np.outer(state.amplitudes, state.amplitudes.conj())
    mean_rho /= trajectories
    pn_vals = np.array([r["p_N"] for r in records])
    sigma = float(pn_vals.std(ddof=1) / np.sqrt(trajectories)) if trajectories > 1 else 0.0
    mean_state = DensityMatrix(mean_rho, psi_ideal.register)
    result = _finalize(plan, mean_state, telegates, started,
                       p_N=float(pn_vals.mean()), sigma=sigma, trajectories=records)
    return result


def run_fault_pattern(plan: TrotterPlan, rho: DensityMatrix,
                      fault_positions: set[int]) -> DensityMatrix:
    """Exact-density run where the listed telegate indices suffer a fault.

    Faulted telegates apply the fault branch (maximally mixed resource);
    all others act as perfect CNOTs.  Telegates are indexed 0..M_D-1 in
    execution order.
    """
    theta = _theta_superop()
    counter = {"i": 0}

    def cnot(state, a, b):
        if counter["i"] in fault_positions:
            apply_two_qubit_superop(state, theta, a, b)
        else:
            _perfect_cnot(state, a, b)
        counter["i"] += 1

    state, _ = _execute_plan(plan, rho, cnot)
    return state


# ---------------------------------------------------------------------------
# Continuous reference annealing
# ---------------------------------------------------------------------------

class _Hamiltonian:
    """Matrix-free H(s) psi for a schedule-tagged term list."""

    def __init__(self, terms: list[PauliTerm], register: tuple[QubitId, ...]):
        n = len(register)
        pos = {q: i for i, q in enumerate(register)}
        dim = 2 ** n
        idx = np.arange(dim)
        self.diag = {}          # tag -> diagonal vector (Z-type terms)
        self.flips = []         # (tag, coefficient, permutation) for X-type terms
        for term in terms:
            if term.axis is Axis.Z:
                signs = np.ones(dim)
                for q, _ in term.factors:
                    signs *= 1.0 - 2.0 * ((idx >> pos[q]) & 1)
                vec = self.diag.setdefault(term.schedule_tag, np.zeros(dim))
                vec += term.coefficient * signs
            else:
                xmask = 0
                for q, _ in term.factors:
                    xmask |= 1 << pos[q]
                self.flips.append((term.schedule_tag, term.coefficient, idx ^ xmask))
        self.norm1 = sum(abs(t.coefficient) for t in terms)

    def apply(self, psi: np.ndarray, s: float) -> np.ndarray:
        out = np.zeros_like(psi)
        for tag, vec in self.diag.items():
            w = schedule_weight(tag, s)
            if w:
                out += (w * vec) * psi
        for tag, c, perm in self.flips:
            w = schedule_weight(tag, s)
            if w:
                out += (w * c) * psi[perm]
        return out


def _rk4_anneal(ham: _Hamiltonian, psi0: np.ndarray, t_F: float, n_steps: int) -> np.ndarray:
    psi = psi0.astype(complex).copy()
    dt = t_F / n_steps
    for j in range(n_steps):
        t = j * dt
        s0, s1, s2 = t / t_F, (t + 0.5 * dt) / t_F, (t + dt) / t_F
        k1 = -1j * ham.apply(psi, s0)
        k2 = -1j * ham.apply(psi + 0.5 * dt * k1, s1)
        k3 = -1j * ham.apply(psi + 0.5 * dt * k2, s1)
        k4 = -1j * ham.apply(psi + dt * k3, s2)
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        psi /= np.linalg.norm(psi)
    return psi


def anneal_reference(target: Partition | IsingProblem, schedule: Schedule,
                     tolerance: float = 1e-9, max_steps: int = 1 << 22) -> EvolutionResult:
    """Continuous annealing under the full H(t), no distribution.

    Fourth-order fixed-step integration; the step count doubles until the
    final energy moves by less than ``tolerance``.
    """
    started = time.perf_counter()
    partition = target if isinstance(target, Partition) else trivial_partition(target)
    terms = partition.local_terms + partition.nonlocal_terms
    register = partition.register
    ham = _Hamiltonian(terms, register)
    psi0 = prepare_initial_state(partition).amplitudes

    hf = _Hamiltonian([t for t in terms if t.schedule_tag is not ScheduleTag.DRIVER], register)

    def final_energy(psi):
        return float(np.real(np.vdot(psi, hf.apply(psi, 1.0))))

    n = max(128, int(np.ceil(2.0 * schedule.t_F * max(ham.norm1, 1.0))))
    psi = _rk4_anneal(ham, psi0, schedule.t_F, n)
    energy = final_energy(psi)
    while True:
        n *= 2
        if n > max_steps:
            raise ConvergenceError(
                f"integrator did not reach tolerance {tolerance:g} within {max_steps} steps")
        psi_fine = _rk4_anneal(ham, psi0, schedule.t_F, n)
        energy_fine = final_energy(psi_fine)
        done = abs(energy_fine - energy) < tolerance
        psi, energy = psi_fine, energy_fine
        if done:
            break
    state = StateVector(psi, register)
    return _finalize(partition, state, 0, started)
