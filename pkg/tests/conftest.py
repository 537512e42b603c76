import math

import pytest

from graphctrl.graph import BoundaryCondition as BC
from graphctrl.graph import Edge, MetricGraph, Topology


def star(lengths, bcs=None, topology=Topology.STAR):
    n = len(lengths)
    if bcs is None:
        bcs = [BC.DIRICHLET] * n
    edges = [Edge(f"e{i+1}", lengths[i], f"v{i+1}", "c") for i in range(n)]
    bc = {f"v{i+1}": bcs[i] for i in range(n)}
    bc["c"] = BC.NEUMANN_KIRCHHOFF
    return MetricGraph(edges=edges, bc=bc, topology=topology)


def interval(length=1.0, left=BC.DIRICHLET, right=BC.DIRICHLET):
    return MetricGraph(edges=[Edge("e1", length, "a", "b")],
                       bc={"a": left, "b": right}, topology=Topology.INTERVAL)


@pytest.fixture
def star3_equilateral():
    return star([1.0, 1.0, 1.0])


@pytest.fixture
def star2_irrational():
    return star([1.0, math.sqrt(2.0)])


@pytest.fixture
def star5_neumann():
    return star([1.0, math.sqrt(2), math.sqrt(3), math.sqrt(5), math.sqrt(7)],
                bcs=[BC.NEUMANN] * 5)
