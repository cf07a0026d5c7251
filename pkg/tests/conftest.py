import numpy as np
import pytest

from affarc.affine import AffineMap
from affarc.attractor import IfsSystem, Zipper, arc_approx


def parabola_map(alpha, beta):
    """Plane map acting on (t, t^2) as the parameter map t -> alpha t + beta."""
    return AffineMap([[alpha, 0.0], [2 * alpha * beta, alpha * alpha]], [beta, beta * beta])


PARABOLA_NODES = [(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]
TAKAGI_NODES = [(0.0, 0.0), (0.5, 0.3), (1.0, 0.0)]


def takagi_maps():
    return (AffineMap([[0.5, 0.0], [0.3, 0.6]], [0.0, 0.0]),
            AffineMap([[0.5, 0.0], [-0.3, 0.6]], [0.5, 0.3]))


@pytest.fixture
def parabola_system():
    return IfsSystem([parabola_map(0.5, 0.0), parabola_map(0.5, 0.5)])


@pytest.fixture
def parabola_zipper(parabola_system):
    return Zipper(parabola_system, PARABOLA_NODES)


@pytest.fixture
def takagi_system():
    return IfsSystem(takagi_maps())


@pytest.fixture
def takagi_zipper(takagi_system):
    return Zipper(takagi_system, TAKAGI_NODES)


@pytest.fixture
def overlap_system():
    return IfsSystem([parabola_map(0.6, 0.0), parabola_map(0.6, 0.4)])


@pytest.fixture
def parabola_arc(parabola_zipper):
    return arc_approx(parabola_zipper, 10)


@pytest.fixture
def takagi_arc(takagi_zipper):
    return arc_approx(takagi_zipper, 11)


def random_affine(rng, scale=2.0):
    while True:
        a = rng.uniform(-scale, scale, (2, 2))
        if abs(np.linalg.det(a)) > 0.1:
            return AffineMap(a, rng.uniform(-scale, scale, 2))


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
