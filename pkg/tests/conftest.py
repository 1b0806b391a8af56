import numpy as np
import pytest

from beamflow.netmodel import NetworkScenario, Node, grid_scenario
from beamflow.problem import Commodity, build_problem

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def line3(rate=2.0):
    sc = NetworkScenario(
        (Node(1, (0.0, 0.0)), Node(2, (1000.0, 0.0)), Node(3, (2000.0, 0.0))),
        (1000.0, 1000.0),
        ((1, 2), (2, 1), (2, 3), (3, 2)),
    )
    return build_problem(sc, [Commodity(1, 3, rate)])


def two_node(rate=2.0, both=False):
    arcs = ((1, 2), (2, 1)) if both else ((1, 2),)
    sc = NetworkScenario((Node(1, (0.0, 0.0)), Node(2, (1000.0, 0.0))), (500.0, 800.0), arcs)
    return build_problem(sc, [Commodity(1, 2, rate)])


def diamond(rate=2.0):
    """s=1 -> a=2 / b=3 -> t=4; every arc has the same weight (2.0)."""
    sc = NetworkScenario(
        (Node(1, (-1000.0, 0.0)), Node(2, (0.0, 1000.0)), Node(3, (0.0, -1000.0)),
         Node(4, (1000.0, 0.0))),
        (0.0, 0.0),
        ((1, 2), (2, 4), (1, 3), (3, 4)),
    )
    return build_problem(sc, [Commodity(1, 4, rate)])


def grid3(rate=3.0):
    sc = grid_scenario(3, 3, station=(1500.0, 1500.0))
    return build_problem(sc, [Commodity(1, 9, rate)])


def random_problem(rng, n_max=6, m_max=3, directed_extra=True):
    """Random connected instance: spanning tree plus extra edges, some one-way."""
    n = int(rng.integers(2, n_max + 1))
    pos = rng.uniform(0, 3000, size=(n, 2))
    station = tuple(rng.uniform(0, 3000, size=2) + 0.123)
    arcs = set()
    for k in range(1, n):
        j = int(rng.integers(0, k))
        arcs |= {(k + 1, j + 1), (j + 1, k + 1)}
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < 0.3:
                arcs.add((a + 1, b + 1))
                if not directed_extra or rng.random() < 0.5:
                    arcs.add((b + 1, a + 1))
    nodes = tuple(Node(k + 1, (float(pos[k, 0]), float(pos[k, 1]))) for k in range(n))
    sc = NetworkScenario(nodes, station, tuple(arcs))
    m = int(rng.integers(1, m_max + 1))
    comms = []
    for _ in range(m):
        s, t = rng.choice(n, size=2, replace=False)
        comms.append(Commodity(int(s) + 1, int(t) + 1, float(rng.uniform(0.5, 3.0))))
    return build_problem(sc, comms)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
