import numpy as np
import pytest

from vonkarman.mesh import Mesh, bisect, lshape_mesh, unit_square_mesh


def two_triangle_mesh():
    return Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), np.array([[0, 1, 2], [0, 2, 3]]))


def skewed_mesh():
    """Six triangles of unequal shape: a perturbed, partly bisected square."""
    m = unit_square_mesh()
    v = m.vertices.copy()
    v[4] = [0.55, 0.45]
    m = Mesh(v, m.triangles)
    return bisect(m, [0, 2])


SMALL_MESHES = {
    "two": two_triangle_mesh,
    "square": unit_square_mesh,
    "lshape": lshape_mesh,
    "skewed": skewed_mesh,
}


@pytest.fixture(params=sorted(SMALL_MESHES))
def small_mesh(request):
    return SMALL_MESHES[request.param]()


@pytest.fixture(params=["dg", "ip"])
def mode(request):
    return request.param


# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
