"""Command-line front end.

Subcommands: run, stationary, verify, converge, reproduce-fig1.  Exit codes:
0 success, 1 validation, 2 solver failure, 3 verification failure, 4 I/O.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import build_mesh, build_model, load_config, resolve_dt, solver_config
from .diagnostics import (
    boundary_layer_probe,
    entropy_sweep,
    locate_violations,
    refinement_study,
    relative_mass_drift,
    solve_ladder,
)
from .errors import ConvergenceError, ParameterError, ZeroFluxError
from .expr import SpaceFunction
from .io import (
    ensure_dir,
    read_trajectory,
    write_json,
    write_ladder_script,
    write_profile_script,
    write_rows,
    write_trajectory,
)
from .mesh import build_interval_mesh
from .model import FIG1_U0, builtin_model, validate
from .scheme import SolverConfig, cell_averages, cfl_limit, run_evolution
from .stationary import StationaryProblem, resolvent_contraction_probe, source_vector, stationary_solve

log = logging.getLogger("zeroflux")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3, 4

# Figure 1 reproduction constants (printed in the manifest)
FIG1 = {
    "u0": FIG1_U0,
    "domain": [0.0, 1.0],
    "T": 0.5,
    "n": 200,
    "mode": "explicit",
    "flux": "godunov",
    "cfl_safety": 0.5,
    "ladder_model": "fig1b",
    "ladder_control": "fig1a",
    "ladder_T": 2.0,
    "ladder_n": [100, 200, 400],
    "interior": [0.1, 0.8],
}


class VerificationFailure(Exception):
    pass


def _setup(args):
    cfg = load_config(args.config)
    out = args.out or cfg.output["dir"]
    emit = args.emit_plots or cfg.output["emit_plots"]
    ensure_dir(out)
    mesh = build_mesh(cfg)
    model = build_model(cfg, mesh)
    report = validate(model)
    for w in report.warnings:
        log.warning("%s", w)
    return cfg, out, emit, mesh, model, report


def _manifest(cfg, command, model=None, mesh=None, dt=None, extra=None):
    payload = {"command": command, "version": __version__, "config_file": cfg.source if cfg else None,
               "config": cfg.resolved(model, mesh, dt) if cfg else None}
    payload.update(extra or {})
    return payload


def _coord_header(mesh):
    return ["x"] if mesh.dim == 1 else ["x", "y"]


def _solve(cfg, model, mesh, dt):
    return run_evolution(model, mesh, dt, cfg.scheme["flux"], solver_config(cfg), cfg.scheme["mode"])


def _step_rows(solution):
    drift = relative_mass_drift(solution)
    mass = solution.mass()
    rows = []
    for n in range(solution.steps.shape[0]):
        its = solution.iterations[n - 1] if n > 0 else 0
        res = solution.residuals[n - 1] if n > 0 else 0.0
        u = solution.steps[n]
        rows.append((n, float(solution.times[n]), float(mass[n]), float(drift[n]),
                     float(u.min()), float(u.max()), its, float(res)))
    return rows


def cmd_run(args):
    cfg, out, emit, mesh, model, report = _setup(args)
    dt, limit = resolve_dt(cfg, model, mesh)
    sol = _solve(cfg, model, mesh, dt)
    files = []
    if cfg.output["trajectory"]:
        files.append(write_trajectory(os.path.join(out, "trajectory.csv"), sol))
    files.append(write_rows(os.path.join(out, "steps.csv"),
                            ["step", "t", "mass", "relative_drift", "min", "max", "iterations", "residual"],
                            _step_rows(sol)))
    final = [(K, *map(float, mesh.centers[K]), float(sol.steps[-1, K])) for K in range(mesh.n_cells)]
    files.append(write_rows(os.path.join(out, "final.csv"), ["cell", *_coord_header(mesh), "u"], final))
    if emit and mesh.dim == 1:
        files.append(write_profile_script(out, ["final"], "final"))
    drift = float(np.max(np.abs(relative_mass_drift(sol))))
    summary = {"n_steps": sol.n_steps, "dt": dt, "cfl_limit": limit, "max_relative_mass_drift": drift,
               "min": float(sol.steps.min()), "max": float(sol.steps.max()),
               "mean_iterations": float(np.mean(sol.iterations)) if sol.iterations else 0.0,
               "validation": report.to_dict(), "files": [os.path.basename(f) for f in files]}
    write_json(os.path.join(out, "manifest.json"), _manifest(cfg, "run", model, mesh, dt, {"summary": summary}))
    print(f"run: {sol.n_steps} steps, dt={dt:.6g}, mass drift {drift:.2e}, "
          f"range [{summary['min']:.6g}, {summary['max']:.6g}] -> {out}")
    return EXIT_OK


def cmd_stationary(args):
    cfg, out, emit, mesh, model, report = _setup(args)
    sc = solver_config(cfg)
    flux = cfg.scheme["flux"]
    g = source_vector(model, mesh)
    problem = StationaryProblem(model, mesh, g, flux)
    u = stationary_solve(problem, sc)
    rows = [(K, *map(float, mesh.centers[K]), float(g[K]), float(u[K])) for K in range(mesh.n_cells)]
    files = [write_rows(os.path.join(out, "stationary.csv"), ["cell", *_coord_header(mesh), "g", "u"], rows)]
    diag = cfg.diagnostics
    others = []
    if diag["paired_source"] is not None:
        others.append(("paired", g, cell_averages(SpaceFunction(str(diag["paired_source"])), mesh)))
    rng = np.random.default_rng(diag["seed"])
    for i in range(diag["random_pairs"]):
        a, b = rng.uniform(0.0, model.u_max, (2, mesh.n_cells))
        others.append((f"random{i}", a, b))
    reports = []
    for label, ga, gb in others:
        rep = resolvent_contraction_probe(StationaryProblem(model, mesh, ga, flux),
                                          StationaryProblem(model, mesh, gb, flux), sc)
        reports.append((label, rep))
    if reports:
        files.append(write_rows(
            os.path.join(out, "contraction.csv"),
            ["pair", "solution_gap", "source_gap", "excess", "budget", "ordered", "monotone", "violation"],
            [(label, r.solution_gap, r.source_gap, r.excess, r.budget, r.ordered, r.monotone, r.violation)
             for label, r in reports]))
    failed = [label for label, r in reports if r.violation]
    summary = {"mass_g": float(mesh.volumes @ g), "mass_u": float(mesh.volumes @ u),
               "pairs": len(reports), "violations": failed, "validation": report.to_dict(),
               "files": [os.path.basename(f) for f in files]}
    write_json(os.path.join(out, "manifest.json"), _manifest(cfg, "stationary", model, mesh, None,
                                                             {"summary": summary}))
    print(f"stationary: {mesh.n_cells} cells, {len(reports)} contraction pair(s), "
          f"{len(failed)} violation(s) -> {out}")
    if failed:
        raise VerificationFailure(f"contraction violated for {', '.join(failed)}")
    return EXIT_OK


def cmd_verify(args):
    cfg, out, emit, mesh, model, report = _setup(args)
    diag = cfg.diagnostics
    dt, limit = resolve_dt(cfg, model, mesh)
    if diag["trajectory_file"]:
        sol = read_trajectory(diag["trajectory_file"], model, mesh, cfg.scheme["flux"], cfg.scheme["mode"])
    else:
        sol = _solve(cfg, model, mesh, dt)
    rep = entropy_sweep(sol, diag["k_grid"], diag["xi_family"])
    budget = diag["nu_budget"] if diag["nu_budget"] is not None else mesh.h
    violations = locate_violations(sol, tol=diag["discrete_tol"])
    files = [write_rows(os.path.join(out, "entropy_sweep.csv"), ["k", "xi", "residual", "discrete_residual"],
                        rep.rows())]
    if violations:
        files.append(write_rows(os.path.join(out, "violations.csv"), ["kind", "step", "cell", "size", "k"],
                                [(v.kind, v.step, v.cell, v.size, v.k) for v in violations]))
    checks = {
        "discrete_nonnegative": rep.min_discrete >= -diag["discrete_tol"],
        "within_nu_budget": rep.min_residual >= -budget,
        "no_located_violations": not violations,
    }
    summary = {**rep.to_dict(), "nu_budget": budget, "checks": checks,
               "violations": [v.to_dict() for v in violations],
               "files": [os.path.basename(f) for f in files]}
    write_json(os.path.join(out, "manifest.json"), _manifest(cfg, "verify", model, mesh, sol.dt,
                                                             {"summary": summary}))
    print(f"verify: min residual {rep.min_residual:.3e} (budget {budget:.3e}), "
          f"min discrete {rep.min_discrete:.3e}, nu {rep.nu:.3e}")
    if not all(checks.values()):
        where = ""
        if violations:
            v = violations[0]
            where = f"; first violation: {v.kind} at step {v.step}, cell {v.cell} (size {v.size:.3e})"
        raise VerificationFailure("entropy certificate failed: "
                                  + ", ".join(k for k, ok in checks.items() if not ok) + where)
    return EXIT_OK


def _ladder_levels(cfg, model, mesh, dt):
    count = cfg.diagnostics["levels"]
    if count < 2:
        raise ParameterError("a refinement study needs at least two levels")
    factor = 2.0 if cfg.diagnostics["dt_scaling"] == "h" else 4.0
    levels, m = [], mesh
    for j in range(count):
        levels.append((m, dt / factor ** j))
        m = m.refine()
    return levels


def cmd_converge(args):
    cfg, out, emit, mesh, model, report = _setup(args)
    dt, _ = resolve_dt(cfg, model, mesh)
    levels = _ladder_levels(cfg, model, mesh, dt)
    table = refinement_study(model, cfg.scheme["flux"], levels, cfg.diagnostics["norm"],
                             cfg.diagnostics["transfer"], solver_config(cfg), cfg.scheme["mode"],
                             jobs=args.jobs)
    rows = [(n, dt_j, e, r) for n, dt_j, e, r in table.rows()]
    files = [write_rows(os.path.join(out, "ladder.csv"), ["n_cells", "dt", "error", "ratio"], rows)]
    if emit:
        files.append(write_ladder_script(out, "ladder.csv", "n_cells", "error", "ladder"))
    summary = {**table.to_dict(), "files": [os.path.basename(f) for f in files]}
    write_json(os.path.join(out, "manifest.json"), _manifest(cfg, "converge", model, mesh, dt,
                                                             {"summary": summary}))
    print("converge: " + ", ".join(f"e{j}={e:.3e}" for j, e in enumerate(table.errors))
          + ("; ratios " + ", ".join(f"{r:.2f}" for r in table.ratios) if table.ratios else ""))
    if not table.strictly_decreasing:
        raise VerificationFailure("Cauchy differences do not decrease")
    return EXIT_OK


def _fig1_run(name):
    model = builtin_model(name).with_(u0=FIG1["u0"], T=FIG1["T"])
    a, b = FIG1["domain"]
    mesh = build_interval_mesh(a, b, FIG1["n"])
    cfg = SolverConfig(cfl_safety=FIG1["cfl_safety"])
    dt = cfl_limit(model, mesh, cfg, FIG1["flux"])
    return run_evolution(model, mesh, dt, FIG1["flux"], cfg, FIG1["mode"])


def _fig1_ladder(name):
    model = builtin_model(name).with_(u0=FIG1["u0"])
    cfg = SolverConfig(cfl_safety=FIG1["cfl_safety"])
    n0 = FIG1["ladder_n"][0]
    dt0 = cfl_limit(model, build_interval_mesh(*FIG1["domain"], n0), cfg, FIG1["flux"])
    levels = [(n, dt0 * n0 / n) for n in FIG1["ladder_n"]]
    return solve_ladder(model, levels, FIG1["flux"], cfg, FIG1["mode"], T=FIG1["ladder_T"])


def cmd_reproduce_fig1(args):
    out = ensure_dir(args.out or "fig1")
    names = ["fig1a", "fig1b", "fig1c"]
    jobs = max(1, args.jobs or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, 5)) as pool:
            runs = list(pool.map(_fig1_run, names))
            ladders = list(pool.map(_fig1_ladder, [FIG1["ladder_model"], FIG1["ladder_control"]]))
    else:
        runs = [_fig1_run(n) for n in names]
        ladders = [_fig1_ladder(FIG1["ladder_model"]), _fig1_ladder(FIG1["ladder_control"])]
    files = []
    for name, sol in zip(names, runs):
        x = sol.mesh.centers[:, 0]
        rows = [(float(x[K]), float(sol.steps[0, K]), float(sol.steps[-1, K])) for K in np.argsort(x)]
        files.append(write_rows(os.path.join(out, f"{name}.csv"), ["x", "u0", "u"], rows))
    probe = boundary_layer_probe(ladders[0], FIG1["interior"])
    control = boundary_layer_probe(ladders[1], FIG1["interior"])
    ladder_rows = []
    for label, rep in ((FIG1["ladder_model"], probe), (FIG1["ladder_control"], control)):
        for h, bmax, l1, gap in rep.rows():
            ladder_rows.append((label, int(round(1.0 / h)), h, bmax, l1, gap))
    files.append(write_rows(os.path.join(out, "fig1b_ladder.csv"),
                            ["model", "n_cells", "h", "boundary_max", "interior_l1", "interior_gap"],
                            ladder_rows))
    if args.emit_plots:
        files.append(write_profile_script(out, names, "fig1"))
    control_ok = max(control.boundary_max) <= 1.0 + 1e-9
    summary = {
        "runs": {name: {"n_steps": s.n_steps, "dt": s.dt, "min": float(s.steps.min()),
                        "max": float(s.steps.max()),
                        "max_relative_mass_drift": float(np.max(np.abs(relative_mass_drift(s))))}
                 for name, s in zip(names, runs)},
        "boundary_layer": probe.to_dict(),
        "control": control.to_dict(),
        "files": [os.path.basename(f) for f in files],
    }
    write_json(os.path.join(out, "manifest.json"),
               {"command": "reproduce-fig1", "version": __version__, "defaults": FIG1, "summary": summary})
    print("reproduce-fig1: boundary-cell max "
          + ", ".join(f"{v:.4g}" for v in probe.boundary_max)
          + f" (growing: {probe.boundary_growing}); control max {max(control.boundary_max):.12g} -> {out}")
    if not (probe.boundary_growing and probe.interior_cauchy and control_ok):
        raise VerificationFailure("boundary-layer reproduction did not show the expected behaviour")
    return EXIT_OK


COMMANDS = {
    "run": (cmd_run, "march the scheme to the horizon and write the trajectory"),
    "stationary": (cmd_stationary, "solve the stationary resolvent problem and probe contraction"),
    "verify": (cmd_verify, "compute the entropy certificate of a run or a stored trajectory"),
    "converge": (cmd_converge, "run a nested refinement ladder and tabulate Cauchy differences"),
    "reproduce-fig1": (cmd_reproduce_fig1, "reproduce the three profile experiments and the boundary layer"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--emit-plots", action="store_true", help="also write plot scripts")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent sub-jobs")
    common.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(prog="zeroflux", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--config", required=name != "reproduce-fig1", help="TOML run configuration")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ZeroFluxError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
