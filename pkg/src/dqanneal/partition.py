"""Splitting an annealing problem across annealer nodes.

Two mechanisms: edge splitting (couplings whose endpoints sit on different
nodes become non-local ZZ terms) and vertex splitting (a qubit is replicated
across n nodes, its copies held aligned by a product-X driver term and a
GHZ- initial state; the logical value is read out by projecting onto the
aligned subspace).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problems import (Axis, IsingProblem, PauliTerm, QubitId, ScheduleTag,
                       build_driver_terms, build_problem_terms)
from .states import DensityMatrix, State, StateVector

ALIGNMENT_FLOOR = 1e-12


class SplitError(ValueError):
    """Invalid assignment or duplication plan."""


class DegenerateProjectionError(ValueError):
    """Aligned-subspace weight below the numerical floor."""


@dataclass(frozen=True)
class AnnealerNode:
    node_id: int
    qubits: tuple[QubitId, ...]


@dataclass(frozen=True)
class DuplicationRecord:
    original: str                       # label in the source problem
    copies: tuple[QubitId, ...]         # one copy per hosting node
    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.copies) < 2:
            raise SplitError(f"duplication of {self.original!r} needs n >= 2 copies")
        if len(set(self.nodes)) != len(self.nodes):
            raise SplitError(f"copies of {self.original!r} must live on distinct nodes")


@dataclass(frozen=True)
class StatePreparation:
    kind: str                           # "minus" or "ghz_minus"
    qubits: tuple[QubitId, ...]


@dataclass
class Partition:
    nodes: list[AnnealerNode]
    local_terms: list[PauliTerm]
    nonlocal_terms: list[PauliTerm]
    duplications: list[DuplicationRecord]
    source: IsingProblem
    node_of: dict[QubitId, int] = field(default_factory=dict)

    @property
    def register(self) -> tuple[QubitId, ...]:
        out = []
        for node in self.nodes:
            out.extend(node.qubits)
        return tuple(sorted(out, key=lambda q: q.index))

    def validate(self):
        for term in self.local_terms:
            if len({self.node_of[q] for q in term.qubits}) != 1:
                raise SplitError(f"local term touches several nodes: {term}")
        for term in self.nonlocal_terms:
            if len({self.node_of[q] for q in term.qubits}) < 2:
                raise SplitError(f"non-local term confined to one node: {term}")


def trivial_partition(problem: IsingProblem) -> Partition:
    """All qubits on a single node; useful as the undistributed reference."""
    assignment = {q: 0 for q in problem.qubits}
    return split_edges(problem, assignment)


def split_edges(problem: IsingProblem, assignment: dict[QubitId, int]) -> Partition:
    """Partition by assigning every qubit to a node and cutting crossing edges."""
    missing = [q.label for q in problem.qubits if q not in assignment]
    if missing:
        raise SplitError(f"assignment missing qubits: {missing}")
    node_ids = sorted(set(assignment.values()))
    nodes = [AnnealerNode(nid, tuple(q for q in problem.qubits if assignment[q] == nid))
             for nid in node_ids]
    local, nonlocal_ = [], []
    for term in build_driver_terms(problem) + build_problem_terms(problem):
        span = {assignment[q] for q in term.qubits}
        (local if len(span) == 1 else nonlocal_).append(term)
    part = Partition(nodes, local, nonlocal_, [], problem, dict(assignment))
    part.validate()
    return part


def split_vertices(problem: IsingProblem,
                   duplication_plan: dict[QubitId, list[int]],
                   assignment: dict[QubitId, int]) -> Partition:
    """Partition by n-plicating selected qubits across nodes.

    Replicated qubit q becomes copies q_0..q_{n-1}, one per listed node.
    Field terms are spread as (h/n) Z on each copy; each original coupling
    incident to q reattaches to the copy living on the other endpoint's node
    (full coefficient).  Couplings between two non-duplicated qubits on
    different nodes are edge-split into non-local ZZ terms.  The driver for a
    copy group is a single X-product over all copies, kept non-local.
    """
    for q in duplication_plan:
        if q in assignment:
            raise SplitError(f"qubit {q.label!r} both duplicated and assigned")
        if len(duplication_plan[q]) < 2:
            raise SplitError(f"duplication of {q.label!r} needs n >= 2 nodes")
        if len(set(duplication_plan[q])) != len(duplication_plan[q]):
            raise SplitError(f"duplicate node in plan for {q.label!r}")
    for q in problem.qubits:
        if q not in duplication_plan and q not in assignment:
            raise SplitError(f"qubit {q.label!r} not covered by plan or assignment")

    node_ids = sorted(set(assignment.values())
                      | {nid for nids in duplication_plan.values() for nid in nids})

    # build the post-split register: ordinary qubits keep their label, copies
    # get "<label>_<node>"; indices are reassigned contiguously
    new_qubits: list[QubitId] = []
    node_of: dict[QubitId, int] = {}
    copy_of: dict[tuple[str, int], QubitId] = {}
    mapped: dict[QubitId, QubitId] = {}
    duplications: list[DuplicationRecord] = []

    def add(label: str, nid: int) -> QubitId:
        q = QubitId(len(new_qubits), label)
        new_qubits.append(q)
        node_of[q] = nid
        return q

    for q in problem.qubits:
        if q in duplication_plan:
            copies = []
            for nid in duplication_plan[q]:
                c = add(f"{q.label}_{nid}", nid)
                copy_of[(q.label, nid)] = c
                copies.append(c)
            duplications.append(DuplicationRecord(q.label, tuple(copies),
                                                 tuple(duplication_plan[q])))
        else:
            mapped[q] = add(q.label, assignment[q])

    def host(q: QubitId, prefer: int | None) -> QubitId:
        """Copy of q on node ``prefer``, or the ordinary mapped qubit."""
        if q in duplication_plan:
            if prefer is None or (q.label, prefer) not in copy_of:
                raise SplitError(
                    f"edge endpoint {q.label!r} has no copy on node {prefer}; "
                    "edge reattachment must be local")
            return copy_of[(q.label, prefer)]
        return mapped[q]

    local, nonlocal_ = [], []

    # driver terms
    for q in problem.qubits:
        if q in duplication_plan:
            copies = tuple(copy_of[(q.label, nid)] for nid in duplication_plan[q])
            nonlocal_.append(PauliTerm(1.0, tuple((c, Axis.X) for c in copies),
                                       ScheduleTag.DRIVER))
        else:
            local.append(PauliTerm(1.0, ((mapped[q], Axis.X),), ScheduleTag.DRIVER))

    # field terms, 1/n per copy
    for q, h in sorted(problem.fields.items(), key=lambda kv: kv[0].index):
        if h == 0.0:
            continue
        if q in duplication_plan:
            n = len(duplication_plan[q])
            for nid in duplication_plan[q]:
                local.append(PauliTerm(h / n, ((copy_of[(q.label, nid)], Axis.Z),),
                                       ScheduleTag.PROBLEM))
        else:
            local.append(PauliTerm(h, ((mapped[q], Axis.Z),), ScheduleTag.PROBLEM))

    # couplings
    for a, b, J in problem.edges():
        a_dup, b_dup = a in duplication_plan, b in duplication_plan
        if a_dup and b_dup:
            shared = [nid for nid in duplication_plan[a] if nid in duplication_plan[b]]
            if not shared:
                raise SplitError(
                    f"coupling ({a.label},{b.label}) joins two replicated qubits "
                    "with no common node")
            nid = shared[0]
            pa, pb = copy_of[(a.label, nid)], copy_of[(b.label, nid)]
        elif a_dup or b_dup:
            dup, other = (a, b) if a_dup else (b, a)
            nid = assignment[other]
            pa, pb = host(dup, nid), mapped[other]
        else:
            pa, pb = mapped[a], mapped[b]
            nid = None
        term_qubits = tuple(sorted((pa, pb), key=lambda q: q.index))
        term = PauliTerm(J, tuple((q, Axis.Z) for q in term_qubits), ScheduleTag.PROBLEM)
        if nid is None and node_of[pa] != node_of[pb]:
            nonlocal_.append(term)      # plain edge split of an uninvolved coupling
        else:
            local.append(term)

    nodes = [AnnealerNode(nid, tuple(q for q in new_qubits if node_of[q] == nid))
             for nid in node_ids]
    part = Partition(nodes, local, nonlocal_, duplications, problem, node_of)
    part.validate()
    return part


def initial_state_spec(partition: Partition) -> list[StatePreparation]:
    """|-> on ordinary qubits, GHZ- over each copy group."""
    in_group = {c for d in partition.duplications for c in d.copies}
    preps = [StatePreparation("minus", (q,))
             for q in partition.register if q not in in_group]
    preps += [StatePreparation("ghz_minus", d.copies) for d in partition.duplications]
    return preps


def prepare_initial_state(partition: Partition, density: bool = False) -> State:
    """Materialize the prepared state over the partition register."""
    register = partition.register
    n = len(register)
    pos = {q: i for i, q in enumerate(register)}
    idx = np.arange(2 ** n)
    amp = np.ones(2 ** n, dtype=complex)
    for prep in initial_state_spec(partition):
        if prep.kind == "minus":
            bit = (idx >> pos[prep.qubits[0]]) & 1
            amp *= np.where(bit == 0, 1.0, -1.0) / np.sqrt(2)
        else:
            bits = np.stack([(idx >> pos[q]) & 1 for q in prep.qubits])
            all0 = np.all(bits == 0, axis=0)
            all1 = np.all(bits == 1, axis=0)
            amp *= np.where(all0, 1.0, np.where(all1, -1.0, 0.0)) / np.sqrt(2)
    sv = StateVector(amp, register)
    return sv.to_density_matrix() if density else sv


def _alignment_maps(partition: Partition):
    """(aligned physical indices, corresponding logical indices)."""
    register = partition.register
    pos = {q: i for i, q in enumerate(register)}
    n = len(register)
    source = partition.source
    dup_by_label = {d.original: d for d in partition.duplications}
    by_label = {q.label: q for q in register}

    idx = np.arange(2 ** n)
    aligned = np.ones(2 ** n, dtype=bool)
    logical = np.zeros(2 ** n, dtype=np.int64)
    for q in source.qubits:
        if q.label in dup_by_label:
            d = dup_by_label[q.label]
            bits = np.stack([(idx >> pos[c]) & 1 for c in d.copies])
            aligned &= np.all(bits == bits[0], axis=0)
            logical |= bits[0] << q.index
        else:
            logical |= (((idx >> pos[by_label[q.label]]) & 1) << q.index)
    phys = np.nonzero(aligned)[0]
    return phys, logical[phys]


def logical_projection(partition: Partition, state: State) -> tuple[float, State]:
    """Project onto the all-copies-agree subspace and contract to the source register.

    Returns the aligned probability and the renormalized logical state over
    the original problem qubits.
    """
    if tuple(state.register) != partition.register:
        raise SplitError("state register does not match partition register")
    phys, logical = _alignment_maps(partition)
    source_reg = partition.source.qubits
    dim = 2 ** len(source_reg)
    if isinstance(state, StateVector):
        weight = float(np.sum(np.abs(state.amplitudes[phys]) ** 2))
        if weight < ALIGNMENT_FLOOR:
            raise DegenerateProjectionError(
                f"aligned probability {weight:.3e} below floor {ALIGNMENT_FLOOR:g}")
        out = np.zeros(dim, dtype=complex)
        np.add.at(out, logical, state.amplitudes[phys])
        out /= np.sqrt(weight)
        return weight, StateVector(out, source_reg)
    sub = state.matrix[np.ix_(phys, phys)]
    weight = float(np.real(np.trace(sub)))
    if weight < ALIGNMENT_FLOOR:
        raise DegenerateProjectionError(
            f"aligned probability {weight:.3e} below floor {ALIGNMENT_FLOOR:g}")
    out = np.zeros((dim, dim), dtype=complex)
    np.add.at(out, (logical[:, None], logical[None, :]), sub)
    out /= weight
    return weight, DensityMatrix(out, source_reg)


def misaligned_population(partition: Partition, state: State) -> float:
    """Diagnostic: total weight outside the aligned subspace."""
    phys, _ = _alignment_maps(partition)
    if isinstance(state, StateVector):
        return float(1.0 - np.sum(np.abs(state.amplitudes[phys]) ** 2))
    return float(1.0 - np.real(np.trace(state.matrix[np.ix_(phys, phys)])))


# ---------------------------------------------------------------------------
# Partition JSON
# ---------------------------------------------------------------------------

def partition_to_doc(partition: Partition) -> dict:
    def term_doc(t: PauliTerm) -> dict:
        return {"coefficient": t.coefficient,
                "factors": [[q.label, ax.value] for q, ax in t.factors],
                "tag": t.schedule_tag.value}

    from .problems import serialize_problem
    import json as _json
    return {
        "nodes": [{"node_id": nd.node_id, "qubits": [q.label for q in nd.qubits]}
                  for nd in partition.nodes],
        "register": [q.label for q in partition.register],
        "duplications": [{"original": d.original,
                          "copies": [c.label for c in d.copies],
                          "nodes": list(d.nodes)} for d in partition.duplications],
        "local_terms": [term_doc(t) for t in partition.local_terms],
        "nonlocal_terms": [term_doc(t) for t in partition.nonlocal_terms],
        "endianness": "little",
        "source": _json.loads(serialize_problem(partition.source)),
    }


def partition_from_doc(doc: dict) -> Partition:
    import json as _json

    from .problems import parse_problem
    source = parse_problem(_json.dumps(doc["source"]))
    labels = doc["register"]
    register = {lab: QubitId(i, lab) for i, lab in enumerate(labels)}
    node_of = {}
    nodes = []
    for nd in doc["nodes"]:
        qs = tuple(register[lab] for lab in nd["qubits"])
        nodes.append(AnnealerNode(nd["node_id"], qs))
        for q in qs:
            node_of[q] = nd["node_id"]

    def term(d) -> PauliTerm:
        return PauliTerm(d["coefficient"],
                         tuple((register[lab], Axis(ax)) for lab, ax in d["factors"]),
                         ScheduleTag(d["tag"]))

    dups = [DuplicationRecord(d["original"],
                              tuple(register[lab] for lab in d["copies"]),
                              tuple(d["nodes"]))
            for d in doc["duplications"]]
    part = Partition(nodes, [term(t) for t in doc["local_terms"]],
                     [term(t) for t in doc["nonlocal_terms"]], dups, source, node_of)
    part.validate()
    return part
