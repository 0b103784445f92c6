"""Command-line front end: config-driven runs with JSON/CSV/SVG outputs.

Every subcommand reads a JSON config, writes its outputs under the --out
prefix and emits a manifest echoing the resolved parameters, so any output
file can be regenerated from its manifest alone.

Exit codes: 0 success, 2 configuration error, 3 partial failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, metrics
from .evolution import (anneal_reference, compile_trotter_plan,
                        run_trotter_ideal, run_trotter_noisy)
from .harness import (ConfigError, SweepConfig, build_comparison_models,
                      build_partition_from_config, locate_transition,
                      render_curves, render_heatmap, result_to_csv,
                      run_complexity_report, run_sweep, write_result,
                      load_result)
from .noise import fit_beta, measure_beta_direct, BellResource
from .partition import partition_to_doc, prepare_initial_state
from .problems import ProblemFormatError, Schedule

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed config {path}: line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise CliError(f"config {path} must be a JSON object")
    return doc


def _write_json(path: Path, doc) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return str(path)


def _manifest(args, resolved: dict, outputs: list[str]) -> str:
    doc = {"tool": "dqanneal", "version": __version__,
           "subcommand": args.subcommand, "config_path": args.config,
           "seed": args.seed, "threads": args.threads,
           "resolved": resolved, "outputs": outputs}
    return _write_json(Path(f"{args.out}.manifest.json"), doc)


def _schedule(doc: dict) -> Schedule:
    if "t_F" not in doc:
        raise CliError("config missing 't_F'")
    try:
        return Schedule(float(doc["t_F"]))
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad t_F: {exc}")


def _steps(doc: dict, schedule: Schedule) -> int:
    if "M" in doc and "dt" in doc:
        raise CliError("specify M or dt, not both")
    if "M" in doc:
        return int(doc["M"])
    if "dt" in doc:
        return max(1, round(schedule.t_F / float(doc["dt"])))
    raise CliError("config missing 'M' or 'dt'")


def _result_doc(res) -> dict:
    return {"energy": res.energy, "fidelity_gs": res.fidelity_gs,
            "aligned_probability": res.aligned_probability,
            "telegates_used": res.telegates_used, "p_N": res.p_N,
            "sigma_stat": res.sigma_stat, "wall_time": res.wall_time}


def cmd_anneal(args, cfg: dict) -> int:
    part = build_partition_from_config(cfg)
    schedule = _schedule(cfg)
    res = anneal_reference(part, schedule, cfg.get("tolerance", 1e-9))
    E_0 = metrics.ground_state_space(part.source).energy
    E_mix = metrics.mixed_state_energy(part)
    doc = _result_doc(res)
    doc["eps_A0"] = metrics.energy_error(res.energy, E_0, E_mix)
    out = _write_json(Path(f"{args.out}.json"), doc)
    _manifest(args, {"t_F": schedule.t_F, "tolerance": cfg.get("tolerance", 1e-9),
                     "model": cfg.get("model"), "problem": cfg.get("problem"),
                     "split": cfg.get("split")}, [out])
    print(f"anneal: E = {res.energy:.9g}, eps_A0 = {doc['eps_A0']:.3e}, "
          f"p_A0 = {res.fidelity_gs:.6f}")
    return EXIT_OK


def cmd_trotter(args, cfg: dict) -> int:
    part = build_partition_from_config(cfg)
    schedule = _schedule(cfg)
    M = _steps(cfg, schedule)
    plan = compile_trotter_plan(part, schedule, M)
    psi0 = prepare_initial_state(part)
    F = cfg.get("F_phi", 1.0 - cfg["delta"] if "delta" in cfg else None)
    if F is None or F >= 1.0:
        res = run_trotter_ideal(plan, psi0)
    else:
        res = run_trotter_noisy(plan, psi0, F,
                                mode=cfg.get("noise_mode", "exact-density"),
                                trajectories=cfg.get("trajectories", 0),
                                seed=args.seed)
    E_0 = metrics.ground_state_space(part.source).energy
    E_mix = metrics.mixed_state_energy(part)
    doc = _result_doc(res)
    doc["eps_T0"] = metrics.energy_error(res.energy, E_0, E_mix)
    doc["M"] = M
    doc["dt"] = plan.dt
    doc["M_D"] = plan.M_D
    out = _write_json(Path(f"{args.out}.json"), doc)
    _manifest(args, {"t_F": schedule.t_F, "M": M, "F_phi": F,
                     "model": cfg.get("model"), "problem": cfg.get("problem"),
                     "split": cfg.get("split")}, [out])
    print(f"trotter: E = {res.energy:.9g}, eps_T0 = {doc['eps_T0']:.3e}, "
          f"M_D = {plan.M_D}" + ("" if res.p_N is None else f", p_N = {res.p_N:.6f}"))
    return EXIT_OK


def cmd_split(args, cfg: dict) -> int:
    part = build_partition_from_config(cfg)
    out = _write_json(Path(f"{args.out}.json"), partition_to_doc(part))
    _manifest(args, {"model": cfg.get("model"), "problem": cfg.get("problem"),
                     "split": cfg.get("split")}, [out])
    print(f"split: {len(part.nodes)} nodes, {len(part.local_terms)} local terms, "
          f"{len(part.nonlocal_terms)} non-local terms, "
          f"{len(part.duplications)} duplicated qubits")
    return EXIT_OK


def cmd_bound(args, cfg: dict) -> int:
    part = build_partition_from_config(cfg)
    # dt_M only needs the s in [0, 1] norm grid, so t_F and M have defaults
    schedule = _schedule(cfg) if "t_F" in cfg else Schedule(1.0)
    M = _steps(cfg, schedule) if ("M" in cfg or "dt" in cfg) else 256
    rep = metrics.trotter_bound(part, schedule, M, cfg.get("convention"))
    doc = {"dt_M": rep.dt_M, "convention": rep.convention, "dt": rep.dt, "M": rep.M,
           "calligraphic_M": rep.calligraphic_M, "converged": rep.converged,
           "series_value": rep.series_value, "small_dt_bound": rep.small_dt_bound,
           "per_step_norms": rep.per_step_norms}
    out = _write_json(Path(f"{args.out}.json"), doc)
    _manifest(args, {"t_F": schedule.t_F, "M": M,
                     "convention": rep.convention, "model": cfg.get("model"),
                     "problem": cfg.get("problem"), "split": cfg.get("split")}, [out])
    print(f"bound: dt_M = {rep.dt_M:g} ({rep.convention}), dt = {rep.dt:g}, "
          f"converged = {rep.converged}")
    return EXIT_OK


def cmd_sweep(args, cfg: dict) -> int:
    config = SweepConfig.from_doc(dict(cfg, seed=cfg.get("seed", args.seed)))
    result = run_sweep(config, threads=args.threads)
    paths = write_result(result, args.out)
    outputs = [paths["csv"], paths["json"]]
    for plot in cfg.get("plots", []):
        svg = f"{args.out}.{plot.get('name', plot['kind'])}.svg"
        if plot["kind"] == "heatmap":
            render_heatmap(result, plot["x"], plot["y"], plot["value"], svg,
                           log_axes=plot.get("log_axes", True))
        else:
            render_curves(result, plot["x"], plot["value"], svg,
                          series=plot.get("series"), logy=plot.get("logy", True))
        outputs.append(svg)
    if cfg.get("complexity_report"):
        outputs.append(_write_json(Path(f"{args.out}.complexity.json"),
                                   run_complexity_report(result)))
    _manifest(args, {"sweep": {"name": config.name, "model": config.model,
                               "grid": config.grid, "evolutions": config.evolutions,
                               "seed": config.seed}}, outputs)
    failed = result.meta["failed_points"]
    total = result.meta["total_points"]
    print(f"sweep: {total - failed}/{total} points ok -> {paths['csv']}")
    if failed > 0.1 * total:
        print(f"sweep: {failed} failed points exceed the 10% budget", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_beta_fit(args, cfg: dict) -> int:
    part = build_partition_from_config(cfg)
    schedule = _schedule(cfg)
    M = _steps(cfg, schedule)
    plan = compile_trotter_plan(part, schedule, M)
    deltas = cfg.get("deltas")
    if not deltas:
        raise CliError("beta-fit config needs a non-empty 'deltas' list")
    psi0 = prepare_initial_state(part)
    curve = []
    for d in deltas:
        res = run_trotter_noisy(plan, psi0, 1.0 - d,
                                mode=cfg.get("noise_mode", "exact-density"),
                                trajectories=cfg.get("trajectories", 0),
                                seed=args.seed,
                                density_cap=cfg.get("density_cap", 10))
        curve.append((d, res.p_N))
    beta_hat, residual = fit_beta(curve, plan.M_D, floor=cfg.get("floor", 0.0))
    doc = {"M_D": plan.M_D, "curve": [{"delta": d, "p_N": p} for d, p in curve],
           "beta_hat": beta_hat, "rms_log_residual": residual}
    if cfg.get("direct"):
        doc["beta_direct"] = measure_beta_direct(part, plan, BellResource(1.0))
    out = _write_json(Path(f"{args.out}.json"), doc)
    _manifest(args, {"t_F": schedule.t_F, "M": M, "deltas": deltas,
                     "model": cfg.get("model"), "problem": cfg.get("problem"),
                     "split": cfg.get("split")}, [out])
    print(f"beta-fit: M_D = {plan.M_D}, beta_hat = {beta_hat:.6f}, "
          f"rms log residual = {residual:.3e}")
    return EXIT_OK


def cmd_compare(args, cfg: dict) -> int:
    J_M = cfg.get("J_M", -2.0)
    J = cfg.get("J", -1.5)
    t_fs = cfg.get("t_F_grid")
    if not t_fs:
        raise CliError("compare config needs a non-empty 't_F_grid'")
    tolerance = cfg.get("tolerance", 1e-9)
    models = build_comparison_models(J_M, J)
    rows = []
    for name in ("A0", "A1", "D0", "D1"):
        part = models[name]
        E_0 = metrics.ground_state_space(part.source).energy
        E_mix = metrics.mixed_state_energy(part)
        for t_F in t_fs:
            res = anneal_reference(part, Schedule(t_F), tolerance)
            rows.append({"model": name, "t_F": t_F, "energy": res.energy,
                         "eps_A0": metrics.energy_error(res.energy, E_0, E_mix),
                         "p_A0": res.fidelity_gs,
                         "aligned_probability": res.aligned_probability})
    doc = {"J": J, "J_M": J_M, "rows": rows}
    out = _write_json(Path(f"{args.out}.json"), doc)
    outputs = [out]
    if cfg.get("plot", True):
        from .harness import SweepResult
        pseudo = SweepResult(SweepConfig(name="model comparison", model={},
                                         grid={"t_F": list(t_fs)}, evolutions=["A"]),
                             rows)
        svg = f"{args.out}.curves.svg"
        render_curves(pseudo, "t_F", "eps_A0", svg, series="model")
        outputs.append(svg)
    _manifest(args, {"J": J, "J_M": J_M, "t_F_grid": list(t_fs)}, outputs)
    for name in ("A0", "A1", "D0", "D1"):
        eps = [r["eps_A0"] for r in rows if r["model"] == name]
        print(f"compare: {name} eps_A0 range [{min(eps):.3e}, {max(eps):.3e}]")
    return EXIT_OK


def cmd_render(args, cfg: dict) -> int:
    if "input" not in cfg:
        raise CliError("render config needs 'input' (a sweep result JSON path)")
    if not Path(cfg["input"]).is_file():
        raise CliError(f"render input not found: {cfg['input']}")
    result = load_result(cfg["input"])
    kind = cfg.get("kind", "curves")
    svg = f"{args.out}.svg"
    if kind == "heatmap":
        render_heatmap(result, cfg["x"], cfg["y"], cfg["value"], svg,
                       log_axes=cfg.get("log_axes", True))
    elif kind == "curves":
        render_curves(result, cfg["x"], cfg["value"], svg,
                      series=cfg.get("series"), logy=cfg.get("logy", True))
    else:
        raise CliError(f"unknown render kind {kind!r}")
    _manifest(args, {"input": cfg["input"], "kind": kind}, [svg])
    print(f"render: wrote {svg}")
    return EXIT_OK


_COMMANDS = {"anneal": cmd_anneal, "trotter": cmd_trotter, "split": cmd_split,
             "bound": cmd_bound, "sweep": cmd_sweep, "beta-fit": cmd_beta_fit,
             "compare": cmd_compare, "render": cmd_render}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqanneal",
        description="Distributed quantum annealing simulator and sweep harness.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output path prefix")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=lambda v: int(v, 0), default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.out is None:
        args.out = f"out/{args.subcommand}"
    try:
        cfg = _load_config(args.config)
        return _COMMANDS[args.subcommand](args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ProblemFormatError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
