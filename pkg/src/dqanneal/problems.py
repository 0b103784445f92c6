"""Ising annealing problems: graph data model, term lists and the JSON format.

A problem is a weighted graph: local fields ``h_i`` on vertices and couplings
``J_ij`` on edges, together with a linear annealing schedule.  The driver
Hamiltonian is a transverse field (one X per qubit, weight ``1 - s``) and the
problem Hamiltonian collects the Z / ZZ terms (weight ``s = t / t_F``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .rng import SplitMix64


class ProblemFormatError(ValueError):
    """Malformed or semantically invalid problem document."""


class Axis(str, Enum):
    X = "X"
    Z = "Z"


class ScheduleTag(str, Enum):
    DRIVER = "DRIVER"    # weight 1 - s
    PROBLEM = "PROBLEM"  # weight s
    STATIC = "STATIC"    # weight 1


def schedule_weight(tag: ScheduleTag, s: float) -> float:
    if tag is ScheduleTag.DRIVER:
        return 1.0 - s
    if tag is ScheduleTag.PROBLEM:
        return s
    return 1.0


@dataclass(frozen=True, order=True)
class QubitId:
    index: int
    label: str

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative qubit index {self.index}")


@dataclass(frozen=True)
class Schedule:
    """Linear interpolation from driver to problem Hamiltonian over [0, t_F]."""

    t_F: float

    def __post_init__(self):
        if not (self.t_F > 0):
            raise ValueError(f"t_F must be positive, got {self.t_F}")

    def s(self, t: float) -> float:
        return t / self.t_F


@dataclass(frozen=True)
class PauliTerm:
    """Coefficient-weighted product of same-axis Pauli factors.

    The protocol only ever produces pure-X products (driver side) and pure-Z
    products (problem side), so a single axis per term is enforced.
    """

    coefficient: float
    factors: tuple[tuple[QubitId, Axis], ...]
    schedule_tag: ScheduleTag

    def __post_init__(self):
        if not self.factors:
            raise ValueError("PauliTerm requires at least one factor")
        qubits = [q for q, _ in self.factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError("repeated qubit in PauliTerm factors")
        axes = {ax for _, ax in self.factors}
        if len(axes) != 1:
            raise ValueError("mixed axes in PauliTerm; only pure-X/pure-Z products are supported")

    @property
    def axis(self) -> Axis:
        return self.factors[0][1]

    @property
    def qubits(self) -> tuple[QubitId, ...]:
        return tuple(q for q, _ in self.factors)


@dataclass(frozen=True)
class IsingProblem:
    qubits: tuple[QubitId, ...]
    fields: dict[QubitId, float]
    couplings: dict[frozenset, float]  # keys are frozensets of two QubitIds
    name: str = ""
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.qubits:
            raise ValueError("IsingProblem requires at least one qubit")
        indices = sorted(q.index for q in self.qubits)
        if indices != list(range(len(self.qubits))):
            raise ValueError("qubit indices must be contiguous 0..N-1")
        labels = [q.label for q in self.qubits]
        if len(set(labels)) != len(labels):
            raise ValueError("qubit labels must be unique")
        known = set(self.qubits)
        for q in self.fields:
            if q not in known:
                raise ValueError(f"field on unknown qubit {q.label!r}")
        for pair, J in self.couplings.items():
            if len(pair) != 2:
                raise ValueError("self-coupling is not allowed")
            if not pair <= known:
                bad = ",".join(sorted(q.label for q in pair))
                raise ValueError(f"coupling references unknown qubit in pair ({bad})")
            if J == 0.0:
                bad = ",".join(sorted(q.label for q in pair))
                raise ValueError(f"zero coupling on pair ({bad}); drop the edge instead")

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def qubit_by_label(self, label: str) -> QubitId:
        for q in self.qubits:
            if q.label == label:
                return q
        raise KeyError(label)

    def edges(self) -> list[tuple[QubitId, QubitId, float]]:
        """Couplings as (a, b, J) with a.index < b.index, sorted."""
        out = []
        for pair, J in self.couplings.items():
            a, b = sorted(pair, key=lambda q: q.index)
            out.append((a, b, J))
        out.sort(key=lambda e: (e[0].index, e[1].index))
        return out


def make_problem(labels: Iterable[str], h: dict[str, float] | None = None,
                 J: dict[tuple[str, str], float] | None = None, name: str = "",
                 seed: int | None = None, metadata: dict | None = None) -> IsingProblem:
    """Convenience constructor from plain labels."""
    qubits = tuple(QubitId(i, lab) for i, lab in enumerate(labels))
    by_label = {q.label: q for q in qubits}
    fields = {by_label[k]: v for k, v in (h or {}).items()}
    couplings = {frozenset((by_label[a], by_label[b])): v for (a, b), v in (J or {}).items()}
    return IsingProblem(qubits, fields, couplings, name=name, seed=seed,
                        metadata=dict(metadata or {}))


def build_driver_terms(problem: IsingProblem) -> list[PauliTerm]:
    """Transverse-field driver: one unit-coefficient X term per qubit."""
    return [PauliTerm(1.0, ((q, Axis.X),), ScheduleTag.DRIVER) for q in problem.qubits]


def build_problem_terms(problem: IsingProblem) -> list[PauliTerm]:
    """Final Hamiltonian terms: Z fields (h_i != 0) and ZZ couplings."""
    terms = [PauliTerm(h, ((q, Axis.Z),), ScheduleTag.PROBLEM)
             for q, h in sorted(problem.fields.items(), key=lambda kv: kv[0].index)
             if h != 0.0]
    for a, b, J in problem.edges():
        terms.append(PauliTerm(J, ((a, Axis.Z), (b, Axis.Z)), ScheduleTag.PROBLEM))
    return terms


# ---------------------------------------------------------------------------
# JSON problem format
#
# { "name": str, "qubits": [str...], "h": {label: float},
#   "J": {"a,b": float}, "metadata": {...} }
#
# Coupling keys are "a,b" with lexicographically sorted labels.  Floats are
# serialized with round-trip-exact (shortest repr) formatting.
# ---------------------------------------------------------------------------

def serialize_problem(problem: IsingProblem) -> bytes:
    doc = {
        "name": problem.name,
        "qubits": [q.label for q in problem.qubits],
        "h": {q.label: problem.fields[q]
              for q in problem.qubits if q in problem.fields},
        "J": {",".join(sorted([a.label, b.label])): J
              for a, b, J in problem.edges()},
        "metadata": problem.metadata,
    }
    # canonical key order for J: lexicographic on the "a,b" string
    doc["J"] = dict(sorted(doc["J"].items()))
    if problem.seed is not None:
        doc["seed"] = problem.seed
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def parse_problem(text: bytes | str) -> IsingProblem:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(
            f"malformed problem JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem document must be a JSON object")
    try:
        labels = doc["qubits"]
    except KeyError:
        raise ProblemFormatError("missing 'qubits' array") from None
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ProblemFormatError("'qubits' must be an array of strings")
    if len(set(labels)) != len(labels):
        raise ProblemFormatError("duplicate qubit label")
    qubits = tuple(QubitId(i, lab) for i, lab in enumerate(labels))
    by_label = {q.label: q for q in qubits}

    fields = {}
    for lab, val in doc.get("h", {}).items():
        if lab not in by_label:
            raise ProblemFormatError(f"field on unknown qubit {lab!r}")
        fields[by_label[lab]] = _require_float(val, f"h[{lab!r}]")

    couplings = {}
    for key, val in doc.get("J", {}).items():
        parts = key.split(",")
        if len(parts) != 2:
            raise ProblemFormatError(f"coupling key {key!r} is not of the form 'a,b'")
        a, b = parts
        if a == b:
            raise ProblemFormatError(f"self-coupling on pair ({key})")
        for lab in (a, b):
            if lab not in by_label:
                raise ProblemFormatError(f"coupling ({key}) references unknown qubit {lab!r}")
        pair = frozenset((by_label[a], by_label[b]))
        if pair in couplings:
            raise ProblemFormatError(f"duplicate coupling pair ({key})")
        J = _require_float(val, f"J[{key!r}]")
        if J == 0.0:
            raise ProblemFormatError(f"zero coupling on pair ({key}); drop the edge instead")
        couplings[pair] = J

    try:
        return IsingProblem(qubits, fields, couplings,
                            name=doc.get("name", ""), seed=doc.get("seed"),
                            metadata=doc.get("metadata", {}))
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from exc


def _require_float(val, what: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ProblemFormatError(f"{what} must be a number")
    val = float(val)
    if not math.isfinite(val):
        raise ProblemFormatError(f"{what} must be finite")
    return val


# ---------------------------------------------------------------------------
# Generated instance families
# ---------------------------------------------------------------------------

def generate_spin_chain(N: int, s: int) -> IsingProblem:
    """Path of N qubits cut into s equal segments.

    Edges interior to a segment carry J = +1; the s - 1 edges bridging
    consecutive segments carry J = -2.  All local fields are zero.  Segment
    membership is stored in metadata for the partitioner.
    """
    if N < 2 or s < 1 or s > N or N % s != 0:
        raise ValueError(f"invalid spin chain parameters (N, s) = ({N}, {s})")
    seg_len = N // s
    labels = [f"q{i}" for i in range(N)]
    J = {}
    for i in range(N - 1):
        bridge = (i + 1) % seg_len == 0
        J[(labels[i], labels[i + 1])] = -2.0 if bridge else 1.0
    segments = [labels[k * seg_len:(k + 1) * seg_len] for k in range(s)]
    return make_problem(
        labels, h={}, J=J, name=f"spin_chain_N{N}_s{s}",
        metadata={"family": "spin_chain", "N": N, "s": s, "segments": segments})


def generate_sparse_network(N: int, l: int, i0: int, i1: int, seed: int) -> IsingProblem:
    """Two ring clusters of sizes l and N - l with all-to-all interface edges.

    i0 / i1 interface qubits are marked in cluster 0 / 1; every interface
    qubit of cluster 0 couples to every interface qubit of cluster 1.  All
    couplings have |J| = 1 with the sign drawn from a splitmix64 stream
    seeded by ``seed`` (edge order: cluster-0 ring, cluster-1 ring, then
    cross edges).  The intra-cluster ring topology is recorded in metadata.
    """
    if not (1 <= l < N) or not (0 <= i0 <= l) or not (0 <= i1 <= N - l):
        raise ValueError(f"invalid sparse network parameters (N, l, i0, i1) = ({N}, {l}, {i0}, {i1})")
    sizes = (l, N - l)
    labels = [f"a{i}" for i in range(l)] + [f"b{i}" for i in range(N - l)]
    clusters = [labels[:l], labels[l:]]
    stream = SplitMix64(seed)
    J = {}

    def ring_edges(members):
        n = len(members)
        if n == 2:
            return [(members[0], members[1])]
        if n < 2:
            return []
        return [(members[i], members[(i + 1) % n]) for i in range(n)]

    for members in clusters:
        for a, b in ring_edges(members):
            J[(a, b)] = float(stream.next_sign())
    interface0 = clusters[0][:i0]
    interface1 = clusters[1][:i1]
    for a in interface0:
        for b in interface1:
            J[(a, b)] = float(stream.next_sign())
    return make_problem(
        labels, h={}, J=J, name=f"sparse_network_N{N}_l{l}_i{i0}_{i1}", seed=seed,
        metadata={"family": "sparse_network", "N": N, "l": l, "i0": i0, "i1": i1,
                  "topology": "ring", "prng": "splitmix64",
                  "clusters": clusters, "interface": [interface0, interface1],
                  "sizes": list(sizes)})


def generate_triangle(J_ab: float = 1.0, J_ac: float = 1.0, J_bc: float = 1.0) -> IsingProblem:
    """Three-qubit triangle used throughout the worked split examples."""
    return make_problem(
        ["a", "b", "c"], h={},
        J={("a", "b"): J_ab, ("a", "c"): J_ac, ("b", "c"): J_bc},
        name="triangle", metadata={"family": "triangle"})


def generate_k4(J: float = 1.0) -> IsingProblem:
    """Fully connected 4-vertex graph with uniform couplings and zero fields."""
    labels = ["a", "b", "c", "d"]
    edges = {(labels[i], labels[j]): J for i in range(4) for j in range(i + 1, 4)}
    return make_problem(labels, h={}, J=edges, name="k4",
                        metadata={"family": "k4", "J": J})
