import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad

from zeroflux import build_interval_mesh, build_rectangle_mesh, builtin_model, run_evolution
from zeroflux.diagnostics import (
    TestFunction,
    boundary_layer_probe,
    bump_family,
    discrete_entropy_residual,
    discrete_l2h1_functional,
    entropy_residual,
    entropy_sweep,
    k_grid_values,
    l1_space_time,
    level_difference,
    locate_violations,
    mass_drift,
    oscillation_proxy,
    refinement_study,
    relative_mass_drift,
    space_time_difference,
    weak_bv_functional,
)
from zeroflux.diagnostics.testfunctions import bump, bump_integral
from zeroflux.errors import DomainError, ParameterError
from zeroflux.scheme import DiscreteSolution

FIG1A = builtin_model("fig1a")
FIG1C = builtin_model("fig1c")
HEAT = builtin_model("heat-like")
INTERIOR_XI = TestFunction(0.25, 0.2, (0.5,), (0.3,), "interior")


def tampered(solution, step, cell, delta):
    steps = solution.steps.copy()
    steps[step, cell] += delta
    return DiscreteSolution(mesh=solution.mesh, dt=solution.dt, steps=steps, model=solution.model,
                            flux=solution.flux, mode=solution.mode)


# -- test functions -----------------------------------------------------------
def test_bump_antiderivative_matches_quadrature():
    for s in (-1.0, -0.3, 0.0, 0.45, 1.0):
        assert bump_integral(s) == pytest.approx(quad(bump, -1, s)[0], abs=1e-14)
    assert bump_integral(1.0) == pytest.approx(32 / 35, abs=1e-15)


def test_family_shape_and_support():
    fam = bump_family(((0.0, 1.0),), 0.5)
    assert len(fam) == 48 and len({x.label for x in fam}) == 48
    boxes = {(x.x_center, x.x_radius) for x in fam[:12]}
    assert len(boxes) == 12
    assert any(x.x_center[0] - x.x_radius[0] < 0 for x in fam)   # boundary-overlapping
    for x in fam:
        assert x.theta(0.5) == 0.0
        assert x.t_center + x.t_radius <= 0.5 + 1e-15
    assert len(bump_family(((0.0, 1.0), (0.0, 2.0)), 1.0)) == 48
    assert len(bump_family(((0.0, 1.0),), 0.5, count=5)) == 5
    with pytest.raises(ParameterError):
        bump_family(((0.0, 1.0),), 0.0)
    with pytest.raises(ParameterError):
        bump_family(((0.0, 1.0),), 0.5, count=0)


def test_exact_integrals_match_quadrature():
    xi = TestFunction(0.3, 0.2, (0.4,), (0.25,))
    # the bump is only C2 at the edge of its support, so quad gets the edges as breakpoints
    edges_t = [0.1, 0.5]
    edges_x = [0.15, 0.65]
    ref = quad(xi.theta, 0.15, 0.42, points=[p for p in edges_t if 0.15 < p < 0.42], epsabs=1e-15)[0]
    assert xi.theta_integral(0.15, 0.42) == pytest.approx(ref, abs=1e-13)
    boxes = np.array([[[0.1, 0.3]], [[0.3, 0.8]]])
    I, G = xi.box_integrals(boxes)
    for (lo, hi), i in zip(boxes[:, 0], I):
        brk = [p for p in edges_x if lo < p < hi] or None
        ref = quad(lambda x: xi.psi(np.array([[x]]))[0], lo, hi, points=brk, epsabs=1e-15)[0]
        assert i == pytest.approx(ref, abs=1e-13)
    xi2 = TestFunction(0.3, 0.2, (0.4, 0.6), (0.3, 0.2))
    box = np.array([[[0.2, 0.5], [0.5, 0.9]]])
    ref = dblquad(lambda y, x: xi2.psi(np.array([[x, y]]))[0], 0.2, 0.5, 0.5, 0.9, epsabs=1e-14)[0]
    assert xi2.box_integrals(box)[0][0] == pytest.approx(ref, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(-1, 2), x=st.floats(-1, 2), y=st.floats(-1, 2))
def test_test_functions_are_nonnegative(t, x, y):
    for xi in bump_family(((0.0, 1.0), (0.0, 1.0)), 1.0):
        assert xi.theta(t) * xi.psi(np.array([[x, y]]))[0] >= 0.0


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-0.5, 1.5), b=st.floats(-0.5, 1.5), c=st.floats(-0.5, 1.5))
def test_box_integrals_are_additive(a, b, c):
    a, b, c = sorted((a, b, c))
    xi = TestFunction(0.3, 0.2, (0.4,), (0.35,))
    I, _ = xi.box_integrals(np.array([[[a, c]], [[a, b]], [[b, c]]]))
    assert I[0] == pytest.approx(I[1] + I[2], abs=1e-14)


# -- entropy residuals --------------------------------------------------------
def test_zero_solution_sweep():
    sol = run_evolution(FIG1A.with_(u0="0"), build_interval_mesh(0, 1, 50), 4e-3)
    rep = entropy_sweep(sol)
    assert rep.min_residual >= -1e-6
    assert rep.min_discrete >= -1e-12


def test_saturation_entries_present_and_small(fig1a_run):
    rep = entropy_sweep(fig1a_run)
    assert {e.k for e in rep.entries} >= {0.0, 1.0}
    assert rep.saturation[0.0] <= 1e-6 and rep.saturation[1.0] <= 1e-6
    assert rep.min_discrete >= -1e-9
    assert rep.min_residual >= -rep.nu - 1e-9


def test_k_outside_range_is_a_domain_error(fig1a_run):
    for k in (-0.1, 1.5):
        with pytest.raises(DomainError):
            entropy_residual(fig1a_run, k, INTERIOR_XI)
        with pytest.raises(DomainError):
            discrete_entropy_residual(fig1a_run, k, INTERIOR_XI)


def test_k_grid_includes_kinks():
    ks = k_grid_values(FIG1C)
    assert len(ks) == 22 and 0.6 in ks and ks[0] == 0.0 and ks[-1] == 1.0
    assert len(k_grid_values(FIG1A)) == 21
    with pytest.raises(ParameterError):
        k_grid_values(FIG1A, 1)


def test_interior_remainder_shrinks(fig1a_ladder):
    gaps = []
    for sol in fig1a_ladder.solutions[:3]:
        R = entropy_residual(sol, 0.5, INTERIOR_XI)
        Rh = discrete_entropy_residual(sol, 0.5, INTERIOR_XI)
        assert Rh >= -1e-9
        gaps.append(abs(R - Rh))
        assert R >= -gaps[-1] - 1e-9
    assert gaps[0] >= 1.5 * gaps[2]


def test_fig1c_sweep_does_not_degrade(fig1c_ladder):
    coarse, fine = (entropy_sweep(s) for s in fig1c_ladder.solutions[:2])
    assert fine.min_residual >= coarse.min_residual - 1e-8
    assert fine.nu < coarse.nu


# -- functionals ----------------------------------------------------------------
def test_mass_drift_and_fault_injection(fig1a_run):
    assert np.max(np.abs(relative_mass_drift(fig1a_run))) <= 1e-12
    bad = tampered(fig1a_run, 40, 17, 1e-3)
    drift = mass_drift(bad)
    assert abs(drift[40]) == pytest.approx(1e-3 * bad.mesh.volumes[17], rel=1e-6)
    assert np.all(np.abs(drift[:40]) <= 1e-13)


def test_locate_violations_points_at_the_fault(fig1a_run):
    assert locate_violations(fig1a_run) == []
    bad = tampered(fig1a_run, 40, 17, 1e-3)
    found = locate_violations(bad)
    assert found
    assert {v.step for v in found} <= {40, 41}
    assert found[0].cell in (16, 17, 18)


def test_weak_bv_functional(fig1a_ladder):
    ref = fig1a_ladder.solutions[0]
    const = DiscreteSolution(mesh=ref.mesh, dt=ref.dt, steps=np.full((4, 50), 0.3), model=FIG1A,
                             flux=ref.flux)
    assert weak_bv_functional(const) == 0.0
    heat = run_evolution(HEAT, build_interval_mesh(0, 1, 20), 1e-3)
    assert weak_bv_functional(heat) == 0.0
    scaled = [weak_bv_functional(s) * np.sqrt(s.mesh.h) for s in fig1a_ladder.solutions[:3]]
    for a, b in zip(scaled, scaled[1:]):
        assert b <= 1.2 * a


def test_l2h1_functional(fig1c_ladder):
    ref = fig1c_ladder.solutions[0]
    const = DiscreteSolution(mesh=ref.mesh, dt=1.0, steps=np.full((3, 50), 0.7), model=FIG1C, flux=ref.flux)
    assert discrete_l2h1_functional(const) == 0.0
    noisy = DiscreteSolution(mesh=ref.mesh, dt=1.0, steps=np.random.default_rng(1).uniform(0, 1, (3, 50)),
                             model=FIG1A, flux=ref.flux)
    assert discrete_l2h1_functional(noisy) == 0.0
    E = [discrete_l2h1_functional(s) for s in fig1c_ladder.solutions[:3]]
    assert max(E) / min(E) <= 1.2


def test_space_time_difference_checks_grids(fig1a_ladder):
    a, b = fig1a_ladder.solutions[:2]
    assert space_time_difference(a, a) == 0.0
    with pytest.raises(ParameterError):
        space_time_difference(a, b)


# -- refinement -------------------------------------------------------------------
def test_identical_levels_give_zero():
    table = refinement_study(FIG1A, levels=[(20, 1e-2), (20, 1e-2)], T=0.1)
    assert table.errors == [0.0]


def test_bad_ladders_are_rejected():
    with pytest.raises(ParameterError):
        refinement_study(FIG1A, levels=[(20, 1e-2)])
    with pytest.raises(ParameterError):
        refinement_study(FIG1A, levels=[(20, 1e-2), (30, 5e-3)], T=0.1)
    with pytest.raises(ParameterError):
        refinement_study(FIG1A, levels=[(20, 1e-2), (40, 4e-3)], T=0.1)
    with pytest.raises(ParameterError):
        refinement_study(FIG1A, levels=[(20, 1e-2), (40, 5e-3)], p=0.5, T=0.1)


def test_rectangle_levels_are_nested():
    model = FIG1A.with_(domain=((0.0, 1.0), (0.0, 1.0)), direction=(0.8, 0.6), u0="0.8*ind(x, 0.3, 0.6)")
    coarse = build_rectangle_mesh(1, 1, 6, 6)
    table = refinement_study(model, levels=[(coarse, 0.02), (coarse.refine(), 0.01)], T=0.1)
    assert table.errors[0] > 0.0
    with pytest.raises(ParameterError):
        refinement_study(model, levels=[(coarse, 0.02), (build_rectangle_mesh(1, 1, 9, 9), 0.01)], T=0.1)


def test_fig1a_ladder_is_cauchy(fig1a_ladder):
    assert fig1a_ladder.strictly_decreasing
    assert len(fig1a_ladder.rows()) == 4 and fig1a_ladder.rows()[0][2] == fig1a_ladder.errors[0]


def test_heat_like_ratio_four_with_restriction():
    levels = [(25, 4e-4), (50, 1e-4), (100, 2.5e-5)]
    table = refinement_study(HEAT, levels=levels, transfer="restriction")
    assert table.ratios[0] == pytest.approx(4.0, rel=0.1)
    injected = [level_difference(a, b) for a, b in zip(table.solutions, table.solutions[1:])]
    assert injected[0] / injected[1] == pytest.approx(2.0, rel=0.1)


def test_oscillation_proxy(fig1a_ladder):
    sols = fig1a_ladder.solutions
    assert oscillation_proxy(sols[0], sols[0]) == 0.0
    proxies = [oscillation_proxy(a, b) for a, b in zip(sols, sols[1:])]
    assert all(b < a for a, b in zip(proxies, proxies[1:]))


def test_boundary_probe_argument_checks(fig1a_ladder):
    with pytest.raises(ParameterError):
        boundary_layer_probe(fig1a_ladder.solutions[:1])
    rep = boundary_layer_probe(fig1a_ladder.solutions[:3])
    assert max(rep.boundary_max) <= 1 + 1e-9 and len(rep.rows()) == 3


# -- relabeling -------------------------------------------------------------------
def test_functionals_are_permutation_invariant(rng):
    mesh = build_interval_mesh(0, 1, 40)
    perm = rng.permutation(40)
    shuffled = mesh.permuted(perm)
    a = run_evolution(FIG1C, mesh, 1e-2, T=0.2)
    b = run_evolution(FIG1C, shuffled, 1e-2, T=0.2)
    np.testing.assert_allclose(b.steps, a.steps[:, perm], atol=1e-12)
    pairs = [
        (np.max(np.abs(mass_drift(a))), np.max(np.abs(mass_drift(b)))),
        (weak_bv_functional(a), weak_bv_functional(b)),
        (discrete_l2h1_functional(a), discrete_l2h1_functional(b)),
        (l1_space_time(a), l1_space_time(b)),
        (entropy_residual(a, 0.3, INTERIOR_XI), entropy_residual(b, 0.3, INTERIOR_XI)),
        (discrete_entropy_residual(a, 0.7, INTERIOR_XI), discrete_entropy_residual(b, 0.7, INTERIOR_XI)),
        (entropy_sweep(a, xi_family=8).min_residual, entropy_sweep(b, xi_family=8).min_residual),
    ]
    for x, y in pairs:
        assert y == pytest.approx(x, rel=1e-9, abs=1e-12)
