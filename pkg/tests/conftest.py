import numpy as np
import pytest

from pffc.forms import WeakForms
from pffc.forward import uniform_times
from pffc.mesh import build_mesh, interpolate_slit_field
from pffc.model import CostParams, ModelParams
from pffc.optimize import ReducedProblem


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_problem(n=4, M=3, gamma=1e5, notch=(0.5, 1.0), target=(0.25, 0.5), alpha=4.75e-10, q_d=1e3,
                 time_weighting="sum"):
    mesh = build_mesh(n)
    params = ModelParams.from_engineering(1e6, 0.2, eps=4 * mesh.h, gamma=gamma)
    forms = WeakForms(mesh, params)
    phi0 = interpolate_slit_field(notch, 0.0, mesh)
    phi_d = interpolate_slit_field(target, mesh.h, mesh)
    cost = CostParams(alpha, phi_d, q_d, time_weighting)
    U0 = mesh.join(np.zeros(mesh.num_nodes), np.zeros(mesh.num_nodes), phi0)
    return ReducedProblem(forms, cost, U0, uniform_times(M))


@pytest.fixture(scope="module")
def small_problem():
    """4x4 mesh, 3 steps, example-1 geometry."""
    return make_problem()


@pytest.fixture(scope="module")
def desk_problem():
    """8x8 mesh, 5 steps, gamma = 1e3."""
    return make_problem(n=8, M=5, gamma=1e3)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
