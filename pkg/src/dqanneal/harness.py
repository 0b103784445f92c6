"""Declarative sweep runner: model building, grid execution, CSV/JSON output.

A sweep config names a model family, how to split it, a parameter grid over
{t_F, M or dt, F_phi/delta, J_M} and which evolutions to run.  Rows echo the
full parameter tuple plus all success metrics, so every figure is
regenerable from its result file alone.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .evolution import (EvolutionResult, anneal_reference, compile_trotter_plan,
                        run_trotter_ideal, run_trotter_noisy)
from .partition import Partition, split_edges, split_vertices, trivial_partition
from .problems import (IsingProblem, QubitId, Schedule, generate_k4,
                       generate_sparse_network, generate_spin_chain,
                       generate_triangle, make_problem)

CSV_SCHEMA = "dqanneal-sweep-v1"
CSV_COLUMNS = ["point", "t_F", "M", "dt", "delta", "F_phi", "J_M",
               "eps_A0", "eps_T0", "eps_TA", "p_A0", "p_T0", "p_N",
               "M_D", "dt_M", "aligned_probability", "sigma_stat", "error",
               "wall_time"]


class ConfigError(ValueError):
    """Invalid sweep or model configuration."""


# ---------------------------------------------------------------------------
# Model builders
# ---------------------------------------------------------------------------

def toy_chain_partition() -> Partition:
    """The (N, s) = (4, 2) chain split into two 2-qubit nodes."""
    return chain_partition(4, 2)


def chain_partition(N: int, s: int) -> Partition:
    problem = generate_spin_chain(N, s)
    segments = problem.metadata["segments"]
    assignment = {}
    for nid, seg in enumerate(segments):
        for lab in seg:
            assignment[problem.qubit_by_label(lab)] = nid
    return split_edges(problem, assignment)


def sparse_partition(N: int, l: int, i0: int, i1: int, seed: int) -> Partition:
    problem = generate_sparse_network(N, l, i0, i1, seed)
    assignment = {}
    for nid, cluster in enumerate(problem.metadata["clusters"]):
        for lab in cluster:
            assignment[problem.qubit_by_label(lab)] = nid
    return split_edges(problem, assignment)


def triangle_partition(J_ab: float = 1.0, J_ac: float = 1.0,
                       J_bc: float = 1.0) -> Partition:
    """Worked example: duplicate c across both nodes, edge-split (a, b)."""
    problem = generate_triangle(J_ab, J_ac, J_bc)
    a, b, c = (problem.qubit_by_label(x) for x in "abc")
    return split_vertices(problem, {c: [0, 1]}, {a: 0, b: 1})


def embedded_k4(J_M: float, J: float = -1.5) -> IsingProblem:
    """K4 minor-embedded on a square-grid layout with one 2-qubit chain.

    Logical qubit d becomes the chain (d0, d1) held together by the
    ferromagnetic coupling J_M < 0; problem edges keep their original J.
    """
    if J_M >= 0:
        raise ConfigError(f"chain coupling J_M must be negative, got {J_M}")
    return make_problem(
        ["a", "b", "c", "d0", "d1"], h={},
        J={("a", "b"): J, ("a", "c"): J, ("b", "c"): J,
           ("a", "d0"): J, ("b", "d0"): J, ("c", "d1"): J,
           ("d0", "d1"): J_M},
        name=f"k4_embedded_JM{J_M}",
        metadata={"family": "k4_embedded", "chain": ["d0", "d1"], "J_M": J_M})


def build_comparison_models(J_M: float, J: float = -1.5) -> dict:
    """The four-way comparison family: original, embedded, and two splits.

    A0: K4 itself (single node).  A1: its chain embedding.  D0: the vertex
    split (every vertex replicated onto both nodes, four problem-independent
    XX links).  D1: the 2+2 edge split (four problem-dependent ZZ links).
    """
    a0 = generate_k4(J)
    qs = {q.label: q for q in a0.qubits}
    d0 = split_vertices(
        a0,
        {qs["a"]: [0, 1], qs["b"]: [0, 1], qs["c"]: [0, 1], qs["d"]: [0, 1]},
        {})
    d1 = split_edges(a0, {qs["a"]: 0, qs["b"]: 0, qs["c"]: 1, qs["d"]: 1})
    a1 = embedded_k4(J_M, J)
    return {"A0": trivial_partition(a0), "A1": trivial_partition(a1),
            "D0": d0, "D1": d1}


def build_model(spec: dict) -> Partition:
    """Instantiate a partitioned model from a config 'model' block."""
    family = spec.get("family")
    params = spec.get("params", {})
    try:
        if family == "spin_chain":
            return chain_partition(params["N"], params["s"])
        if family == "sparse_network":
            return sparse_partition(params["N"], params["l"], params["i0"],
                                    params["i1"], params["seed"])
        if family == "triangle":
            return triangle_partition(params.get("J_ab", 1.0),
                                      params.get("J_ac", 1.0),
                                      params.get("J_bc", 1.0))
        if family in ("A0", "A1", "D0", "D1"):
            return build_comparison_models(params.get("J_M", -2.0),
                                           params.get("J", -1.5))[family]
    except KeyError as exc:
        raise ConfigError(f"model family {family!r} missing parameter {exc}") from exc
    raise ConfigError(f"unknown model family {family!r}")


def build_partition_from_config(doc: dict) -> Partition:
    """Resolve a config block into a partition.

    Either ``model`` (a named family, split as that family prescribes) or an
    inline ``problem`` document plus a ``split`` block of kind none / edges /
    vertices.
    """
    if "model" in doc:
        return build_model(doc["model"])
    if "problem" not in doc:
        raise ConfigError("config needs a 'model' or 'problem' block")
    import json as _json

    from .problems import parse_problem
    problem = parse_problem(_json.dumps(doc["problem"]))
    split = doc.get("split", {"kind": "none"})
    kind = split.get("kind", "none")
    if kind == "none":
        return trivial_partition(problem)
    by_label = {q.label: q for q in problem.qubits}
    try:
        assignment = {by_label[lab]: nid
                      for lab, nid in split.get("assignment", {}).items()}
        if kind == "edges":
            return split_edges(problem, assignment)
        if kind == "vertices":
            plan = {by_label[lab]: list(nids)
                    for lab, nids in split.get("plan", {}).items()}
            return split_vertices(problem, plan, assignment)
    except KeyError as exc:
        raise ConfigError(f"split references unknown qubit {exc}") from exc
    raise ConfigError(f"unknown split kind {kind!r}")


# ---------------------------------------------------------------------------
# Sweep configuration and execution
# ---------------------------------------------------------------------------

_AXIS_ORDER = ("t_F", "M", "dt", "delta", "F_phi", "J_M")


@dataclass
class SweepConfig:
    name: str
    model: dict
    grid: dict[str, list]
    evolutions: list[str]
    noise_mode: str = "exact-density"
    trajectories: int = 0
    seed: int = 0
    anneal_tolerance: float = 1e-9
    out_prefix: str | None = None

    @classmethod
    def from_doc(cls, doc: dict) -> "SweepConfig":
        if not isinstance(doc, dict):
            raise ConfigError("sweep config must be a JSON object")
        for key in ("model", "grid", "evolutions"):
            if key not in doc:
                raise ConfigError(f"sweep config missing {key!r}")
        grid = doc["grid"]
        if not grid or any(not axis for axis in grid.values()):
            raise ConfigError("grid axes must be non-empty")
        unknown = set(grid) - set(_AXIS_ORDER)
        if unknown:
            raise ConfigError(f"unknown grid axes {sorted(unknown)}")
        if "M" in grid and "dt" in grid:
            raise ConfigError("specify M or dt, not both")
        if "delta" in grid and "F_phi" in grid:
            raise ConfigError("specify delta or F_phi, not both")
        evolutions = doc["evolutions"]
        bad = set(evolutions) - {"A", "T_ideal", "T_noisy"}
        if bad:
            raise ConfigError(f"unknown evolutions {sorted(bad)}")
        return cls(name=doc.get("name", "sweep"), model=doc["model"], grid=dict(grid),
                   evolutions=list(evolutions),
                   noise_mode=doc.get("noise_mode", "exact-density"),
                   trajectories=doc.get("trajectories", 0),
                   seed=doc.get("seed", 0),
                   anneal_tolerance=doc.get("anneal_tolerance", 1e-9))


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows])


def _grid_points(grid: dict[str, list]) -> list[dict]:
    axes = [a for a in _AXIS_ORDER if a in grid]
    points = [{}]
    for axis in axes:
        points = [dict(p, **{axis: v}) for p in points for v in grid[axis]]
    return points


def _partition_for_point(config: SweepConfig, point: dict) -> Partition:
    model = dict(config.model)
    if "J_M" in point:
        model = dict(model, params=dict(model.get("params", {}), J_M=point["J_M"]))
    return build_model(model)


def run_sweep(config: SweepConfig, threads: int = 1,
              progress=None) -> SweepResult:
    """Execute every grid point; failures become error rows, the run continues."""
    points = _grid_points(config.grid)
    anneal_cache: dict = {}
    bound_cache: dict = {}

    def eval_point(args):
        index, point = args
        t0 = time.perf_counter()
        row = {"point": index, "t_F": point.get("t_F"), "M": point.get("M"),
               "dt": point.get("dt"), "delta": point.get("delta"),
               "F_phi": point.get("F_phi"), "J_M": point.get("J_M"),
               "eps_A0": None, "eps_T0": None, "eps_TA": None,
               "p_A0": None, "p_T0": None, "p_N": None, "M_D": None,
               "dt_M": None, "aligned_probability": None, "sigma_stat": None,
               "error": ""}
        try:
            _eval_point(config, point, row, anneal_cache, bound_cache, index)
        except Exception as exc:  # recorded, run continues
            row["error"] = f"{type(exc).__name__}: {exc}"
        row["wall_time"] = time.perf_counter() - t0
        if progress:
            progress(index, len(points))
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(eval_point, enumerate(points)))
    else:
        rows = [eval_point(x) for x in enumerate(points)]
    failed = sum(1 for r in rows if r["error"])
    meta = {"schema": CSV_SCHEMA, "failed_points": failed, "total_points": len(points),
            "norm_convention": metrics.calibrated_convention()}
    return SweepResult(config, rows, meta)


def _eval_point(config: SweepConfig, point: dict, row: dict,
                anneal_cache: dict, bound_cache: dict, index: int):
    partition = _partition_for_point(config, point)
    problem = partition.source
    t_F = point.get("t_F")
    if t_F is None:
        raise ConfigError("grid must include a t_F axis")
    schedule = Schedule(t_F)
    gs = metrics.ground_state_space(problem)
    E_0 = gs.energy
    E_mix = metrics.mixed_state_energy(partition)

    part_key = (config.model.get("family"), point.get("J_M"))
    if part_key not in bound_cache:
        bound_cache[part_key] = metrics.trotter_bound(partition, Schedule(1.0), 256)
    row["dt_M"] = bound_cache[part_key].dt_M

    E_A = None
    if "A" in config.evolutions:
        akey = (part_key, t_F)
        if akey not in anneal_cache:
            anneal_cache[akey] = anneal_reference(partition, schedule,
                                                  config.anneal_tolerance)
        res_a: EvolutionResult = anneal_cache[akey]
        E_A = res_a.energy
        row["eps_A0"] = metrics.energy_error(E_A, E_0, E_mix)
        row["p_A0"] = res_a.fidelity_gs

    needs_plan = {"T_ideal", "T_noisy"} & set(config.evolutions)
    if needs_plan:
        if "M" in point:
            M = int(point["M"])
        elif "dt" in point:
            M = max(1, round(t_F / point["dt"]))
        else:
            raise ConfigError("grid must include an M or dt axis for Trotter runs")
        plan = compile_trotter_plan(partition, schedule, M)
        row["M"] = M
        row["dt"] = t_F / M
        row["M_D"] = plan.M_D
        from .partition import prepare_initial_state
        psi0 = prepare_initial_state(partition)

        if "T_noisy" in config.evolutions:
            delta = point.get("delta")
            F_phi = point.get("F_phi", 1.0 - delta if delta is not None else None)
            if F_phi is None:
                raise ConfigError("T_noisy requires a delta or F_phi axis")
            res_t = run_trotter_noisy(plan, psi0, F_phi, mode=config.noise_mode,
                                      trajectories=config.trajectories,
                                      seed=(config.seed << 20) + index)
            row["p_N"] = res_t.p_N
            row["sigma_stat"] = res_t.sigma_stat
        else:
            res_t = run_trotter_ideal(plan, psi0)
        row["eps_T0"] = metrics.energy_error(res_t.energy, E_0, E_mix)
        row["p_T0"] = res_t.fidelity_gs
        row["aligned_probability"] = res_t.aligned_probability
        if E_A is not None:
            row["eps_TA"] = metrics.energy_error(res_t.energy, E_A, E_mix)


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def result_to_csv(result: SweepResult) -> str:
    """Render the frozen CSV schema; the checksum footer skips wall_time."""
    lines = [f"# schema: {CSV_SCHEMA}", ",".join(CSV_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_fmt(row.get(c)) for c in CSV_COLUMNS))
    digest_src = "\n".join(
        ",".join(_fmt(row.get(c)) for c in CSV_COLUMNS if c != "wall_time")
        for row in result.rows)
    checksum = hashlib.sha256(digest_src.encode()).hexdigest()
    lines.append(f"# checksum: {checksum}")
    return "\n".join(lines) + "\n"


def result_to_json(result: SweepResult) -> str:
    doc = {"schema": CSV_SCHEMA, "name": result.config.name,
           "config": {"model": result.config.model, "grid": result.config.grid,
                      "evolutions": result.config.evolutions,
                      "noise_mode": result.config.noise_mode,
                      "trajectories": result.config.trajectories,
                      "seed": result.config.seed},
           "meta": result.meta, "rows": result.rows}
    return json.dumps(doc, indent=2) + "\n"


def write_result(result: SweepResult, prefix: str | Path) -> dict:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    csv_path.write_text(result_to_csv(result))
    json_path.write_text(result_to_json(result))
    return {"csv": str(csv_path), "json": str(json_path)}


def load_result(json_path: str | Path) -> SweepResult:
    doc = json.loads(Path(json_path).read_text())
    cfg = SweepConfig.from_doc(dict(doc["config"], name=doc.get("name", "sweep")))
    return SweepResult(cfg, doc["rows"], doc.get("meta", {}))


# ---------------------------------------------------------------------------
# Derived reports
# ---------------------------------------------------------------------------

def run_complexity_report(result: SweepResult) -> list[dict]:
    """Expected repetitions, time and entanglement cost per row: 1/p_N scaled."""
    report = []
    for row in result.rows:
        p_N = row.get("p_N")
        if p_N is None:
            continue
        if p_N <= 0.0:
            entry = {"point": row["point"], "runs": float("inf"),
                     "time": float("inf"), "ebits": float("inf"),
                     "warning": "p_N = 0"}
        else:
            entry = {"point": row["point"], "runs": 1.0 / p_N,
                     "time": row["t_F"] / p_N, "ebits": row["M_D"] / p_N}
        report.append(entry)
    return report


def render_heatmap(result: SweepResult, x: str, y: str, value: str,
                   out_path: str | Path, log_axes: bool = True) -> str:
    """Pseudocolor map of ``value`` over the (x, y) grid, saved as SVG.

    When the axes are (M, t_F) or one axis is dt, the guaranteed-convergence
    step size is drawn as a dashed reference line.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = sorted({r[x] for r in result.rows if r.get(x) is not None})
    ys = sorted({r[y] for r in result.rows if r.get(y) is not None})
    grid = np.full((len(ys), len(xs)), np.nan)
    for r in result.rows:
        if r.get(x) is None or r.get(y) is None or r.get(value) is None:
            continue
        grid[ys.index(r[y]), xs.index(r[x])] = r[value]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=value)
    if log_axes:
        ax.set_xscale("log")
        ax.set_yscale("log")
    dt_m = next((r["dt_M"] for r in result.rows if r.get("dt_M")), None)
    if dt_m:
        if x == "dt":
            ax.axvline(dt_m, ls="--", color="limegreen", label=f"dt_M = {dt_m:g}")
            ax.legend(loc="upper left")
        elif {x, y} == {"M", "t_F"}:
            ms = np.array(xs if x == "M" else ys, dtype=float)
            line = dt_m * ms
            if x == "M":
                ax.plot(ms, line, ls="--", color="limegreen", label=f"dt = dt_M = {dt_m:g}")
            else:
                ax.plot(line, ms, ls="--", color="limegreen", label=f"dt = dt_M = {dt_m:g}")
            ax.set_xlim(min(xs), max(xs))
            ax.set_ylim(min(ys), max(ys))
            ax.legend(loc="upper left")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(result.config.name)
    out_path = str(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def render_curves(result: SweepResult, x: str, value: str, out_path: str | Path,
                  series: str | None = None, logy: bool = True) -> str:
    """Line plot of ``value`` against ``x``, one line per ``series`` value."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups: dict = {}
    for r in result.rows:
        if r.get(x) is None or r.get(value) is None:
            continue
        key = r.get(series) if series else ""
        groups.setdefault(key, []).append((r[x], r[value]))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key in sorted(groups, key=str):
        pts = sorted(groups[key])
        label = f"{series}={key}" if series else value
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    if logy:
        ax.set_yscale("log")
    dt_m = next((r["dt_M"] for r in result.rows if r.get("dt_M")), None)
    if x == "dt" and dt_m:
        ax.axvline(dt_m, ls="--", color="limegreen", label=f"dt_M = {dt_m:g}")
    ax.set_xlabel(x)
    ax.set_ylabel(value)
    ax.set_title(result.config.name)
    ax.legend()
    out_path = str(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def locate_transition(result: SweepResult, t_F_min: float = 20.0,
                      threshold: float = 0.5) -> float:
    """Interpolated dt where eps_T0 crosses the threshold, at large t_F.

    Scans each t_F row of a heatmap result along increasing dt and linearly
    interpolates the first upward crossing; returns the median over rows.
    """
    by_tf: dict[float, list] = {}
    for row in result.rows:
        if row.get("eps_T0") is None or row.get("dt") is None:
            continue
        if row["t_F"] is None or row["t_F"] < t_F_min:
            continue
        by_tf.setdefault(row["t_F"], []).append((row["dt"], row["eps_T0"]))
    crossings = []
    for t_F, pts in by_tf.items():
        pts.sort()
        for (d0, e0), (d1, e1) in zip(pts, pts[1:]):
            if e0 < threshold <= e1:
                frac = (threshold - e0) / (e1 - e0)
                crossings.append(d0 + frac * (d1 - d0))
                break
    if not crossings:
        raise ValueError("no threshold crossing found in the requested rows")
    return float(np.median(crossings))
