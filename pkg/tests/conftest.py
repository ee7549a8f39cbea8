import numpy as np
import pytest

from zeroflux import build_interval_mesh, builtin_model, run_evolution
from zeroflux.diagnostics import refinement_study, solve_ladder

LADDER = [(50, 4e-3), (100, 2e-3), (200, 1e-3), (400, 5e-4)]


@pytest.fixture(scope="session")
def fig1a_ladder():
    return refinement_study(builtin_model("fig1a"), "godunov", LADDER)


@pytest.fixture(scope="session")
def fig1c_ladder():
    return refinement_study(builtin_model("fig1c"), "godunov", LADDER)


@pytest.fixture(scope="session")
def fig1b_layer_ladder():
    model = builtin_model("fig1b")
    return solve_ladder(model, [(n, 0.1 / n) for n in (100, 200, 400)], "godunov",
                        mode="explicit", T=2.0)


@pytest.fixture(scope="session")
def fig1a_layer_ladder():
    model = builtin_model("fig1a")
    return solve_ladder(model, [(n, 0.1 / n) for n in (100, 200, 400)], "godunov",
                        mode="explicit", T=2.0)


@pytest.fixture(scope="session")
def fig1a_run():
    model = builtin_model("fig1a")
    return run_evolution(model, build_interval_mesh(0.0, 1.0, 100), 2e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
