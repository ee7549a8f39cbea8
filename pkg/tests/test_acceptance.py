"""Acceptance criteria 1-10, one test each.

Every test appends a ``criterion NN [name]: PASS|FAIL ...`` line that is
printed immediately and again in the terminal summary.  Run directly with
``python tests/test_acceptance.py``.
"""

import numpy as np
import pytest

import conftest
from oracles import FLUXES, brute_godunov, heat_exact, l2_space_time_error, two_cell_oracle
from zeroflux import build_interval_mesh, builtin_model, run_evolution
from zeroflux.diagnostics import (
    boundary_layer_probe,
    entropy_sweep,
    relative_mass_drift,
    space_time_difference,
)
from zeroflux.numflux import KINDS, make_flux
from zeroflux.scheme import SolverConfig, cfl_limit, implicit_step
from zeroflux.stationary import StationaryProblem, resolvent_contraction_probe

MODELS = ("fig1a", "fig1b", "fig1c")


def record(number, name, ok, detail):
    line = f"criterion {number:02d} [{name}]: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def conservation_runs():
    runs = {}
    mesh = build_interval_mesh(0.0, 1.0, 100)
    for name in MODELS:
        model = builtin_model(name)
        runs[name, "implicit"] = run_evolution(model, mesh, 2e-3, T=0.5)
        runs[name, "explicit"] = run_evolution(model, mesh, cfl_limit(model, mesh), mode="explicit", T=0.5)
    return runs


def test_criterion_01_flux_axioms(rng):
    s = np.linspace(0.0, 1.0, 101)
    A, B = np.meshgrid(s, s, indexing="ij")
    worst_cons = worst_mono = worst_oracle = 0.0
    for name in MODELS:
        model = builtin_model(name)
        f = FLUXES[name][0]
        for kind in KINDS:
            F = make_flux(model, kind)
            worst_cons = max(worst_cons, float(np.max(np.abs(F(s, s) - f(s)))))
            V = F(A, B)
            # nondecreasing in a (axis 0), nonincreasing in b (axis 1)
            worst_mono = max(worst_mono, float(max(0.0, -np.diff(V, axis=0).min(), np.diff(V, axis=1).max())))
        G = make_flux(model, "godunov")
        pairs = rng.uniform(0.0, 1.0, (1000, 2))
        got = G(pairs[:, 0], pairs[:, 1])
        ref = np.array([brute_godunov(f, a, b) for a, b in pairs])
        worst_oracle = max(worst_oracle, float(np.max(np.abs(got - ref))))
    ok = worst_cons <= 1e-12 and worst_mono <= 1e-12 and worst_oracle <= 1e-9
    record(1, "flux axioms", ok,
           f"consistency {worst_cons:.1e} <= 1e-12, monotonicity {worst_mono:.1e} <= 1e-12, "
           f"godunov vs brute-force oracle (3x1000 pairs) {worst_oracle:.1e} <= 1e-9")


def test_criterion_02_conservation(conservation_runs):
    worst = max(float(np.max(np.abs(relative_mass_drift(s)))) for s in conservation_runs.values())
    record(2, "conservation", worst <= 1e-12,
           f"max relative mass drift over 6 runs (n=100, T=0.5) {worst:.1e} <= 1e-12")


def test_criterion_03_invariant_region(conservation_runs):
    excess = {}
    for mode in ("implicit", "explicit"):
        excess[mode] = max(float(max(-s.steps.min(), s.steps.max() - 1.0, 0.0)) + 0.0
                           for (name, m), s in conservation_runs.items() if m == mode and name != "fig1b")
    ok = excess["implicit"] <= 1e-9 and excess["explicit"] <= 1e-12
    record(3, "invariant region", ok,
           f"fig1a/fig1c overshoot implicit {excess['implicit']:.1e} <= 1e-9, "
           f"explicit {excess['explicit']:.1e} <= 1e-12")


def test_criterion_04_l1_contraction(rng):
    model = builtin_model("fig1c")
    mesh = build_interval_mesh(0.0, 1.0, 50)
    cfg = SolverConfig()
    budget = 2.0 * cfg.nonlinear_tol * mesh.measure
    m = mesh.volumes
    worst = -np.inf
    for _ in range(20):
        u0, w0 = rng.uniform(0.0, 1.0, (2, 50))
        a = run_evolution(model, mesh, 0.01, cfg=cfg, u0=u0, T=0.5)
        b = run_evolution(model, mesh, 0.01, cfg=cfg, u0=w0, T=0.5)
        assert a.n_steps == 50
        gaps = np.abs(a.steps - b.steps) @ m
        worst = max(worst, float(np.max(gaps - gaps[0])))
    record(4, "L1 contraction", worst <= budget,
           f"20 pairs, fig1c, n=50, 50 steps: max growth {worst:.1e} <= {budget:.1e}")


def test_criterion_05_resolvent(rng):
    model = builtin_model("fig1c")
    mesh = build_interval_mesh(0.0, 1.0, 50)
    cfg = SolverConfig()
    worst, monotone, budget = -np.inf, True, None
    for _ in range(20):
        g, gh = rng.uniform(0.0, 1.0, (2, 50))
        rep = resolvent_contraction_probe(StationaryProblem(model, mesh, g), StationaryProblem(model, mesh, gh), cfg)
        worst, budget = max(worst, rep.excess), rep.budget
        ordered = resolvent_contraction_probe(StationaryProblem(model, mesh, np.minimum(g, gh)),
                                              StationaryProblem(model, mesh, np.maximum(g, gh)), cfg)
        worst = max(worst, ordered.excess)
        monotone = monotone and ordered.ordered and ordered.monotone
    ok = worst <= budget and monotone
    record(5, "resolvent accretivity", ok,
           f"20 pairs, fig1c, n=50: max excess {worst:.1e} <= {budget:.1e}, order preserved: {monotone}")


def test_criterion_06_entropy_certificate(fig1a_ladder):
    reports = [entropy_sweep(s) for s in fig1a_ladder.solutions[:3]]
    nus = [r.nu for r in reports]
    shrink = [a / b for a, b in zip(nus, nus[1:])]
    above = all(r.min_residual >= -r.nu for r in reports)
    mid = reports[1]
    discrete_sat = max(mid.saturation.values())
    continuous_sat = max(abs(e.residual) for e in mid.entries if e.k in (0.0, 1.0))
    ok_trend = above and all(q >= 1.3 for q in shrink)
    ok_discrete = discrete_sat <= 1e-6
    ok_literal = continuous_sat <= 1e-6
    record(6, "entropy certificate", ok_trend and ok_discrete and ok_literal,
           f"min R >= -nu at all levels: {above}; nu {', '.join(f'{v:.2e}' for v in nus)} "
           f"(shrink {', '.join(f'{q:.2f}' for q in shrink)} >= 1.3); "
           f"saturation at n=100: R_h {discrete_sat:.1e}, continuous R {continuous_sat:.1e} (bound 1e-6)")


def test_criterion_07_convergence(fig1a_ladder, fig1c_ladder):
    model = builtin_model("fig1a")
    mesh = build_interval_mesh(0.0, 1.0, 400)
    godunov = fig1a_ladder.solutions[-1]
    cross = {}
    for kind in ("rusanov", "engquist_osher"):
        other = run_evolution(model, mesh, 5e-4, kind)
        cross[kind] = space_time_difference(godunov, other)
    e1 = fig1a_ladder.errors[0]
    ok = fig1a_ladder.strictly_decreasing and fig1c_ladder.strictly_decreasing and max(cross.values()) < e1
    record(7, "convergence", ok,
           f"fig1a e_j {', '.join(f'{e:.2e}' for e in fig1a_ladder.errors)}; "
           f"fig1c e_j {', '.join(f'{e:.2e}' for e in fig1c_ladder.errors)}; "
           f"n=400 godunov vs rusanov {cross['rusanov']:.2e}, vs EO {cross['engquist_osher']:.2e} < e_1 {e1:.2e}")


def test_criterion_08_parabolic_oracle():
    n, dt = 100, 1e-4
    model = builtin_model("heat-like")
    sol = run_evolution(model, build_interval_mesh(0.0, 1.0, n), dt, T=0.1)
    err = l2_space_time_error(sol.steps, dt, np.linspace(0.0, 1.0, n + 1), heat_exact)
    bound = 10.0 * ((1.0 / n) ** 2 + dt)
    record(8, "parabolic oracle", err <= bound, f"L2(Q) error {err:.2e} <= {bound:.1e} at (n, dt) = (100, 1e-4)")


def test_criterion_09_boundary_layer(fig1b_layer_ladder, fig1a_layer_ladder):
    probe = boundary_layer_probe(fig1b_layer_ladder, (0.1, 0.8))
    control = boundary_layer_probe(fig1a_layer_ladder, (0.1, 0.8))
    control_max = max(control.boundary_max)
    ok = probe.boundary_growing and probe.interior_cauchy and control_max <= 1.0 + 1e-9
    record(9, "boundary layer", ok,
           f"fig1b boundary max {', '.join(f'{v:.3g}' for v in probe.boundary_max)} (increasing: "
           f"{probe.boundary_growing}); interior gaps {', '.join(f'{v:.2e}' for v in probe.interior_gaps)} "
           f"(decreasing: {probe.interior_cauchy}); fig1a control max {control_max:.12g}")


def test_criterion_10_two_cell_oracle():
    mesh = build_interval_mesh(0.0, 1.0, 2)
    u = implicit_step(np.array([0.8, 0.2]), 0.1, builtin_model("fig1a"), mesh)
    ref = two_cell_oracle(FLUXES["fig1a"][0], (0.8, 0.2), 0.1)
    gap = float(np.max(np.abs(u - ref)))
    total = abs(float(u.sum()) - 1.0)
    record(10, "two-cell oracle", gap <= 1e-9 and total <= 1e-14,
           f"u = ({u[0]:.15f}, {u[1]:.15f}), oracle gap {gap:.1e} <= 1e-9, |u1 + u2 - 1| {total:.1e} <= 1e-14")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s"]))
