import math

import pytest

from polymer_mcmc.graph import HostGraph, complete_bipartite, complete_graph, cycle_graph, path_graph
from polymer_mcmc.polymers import HardcoreVertexModel
from polymer_mcmc.potts import PottsParams, potts_polymer_model

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def star_graph(leaves: int) -> HostGraph:
    return HostGraph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def small_polymer_instances():
    """The hard-core and Potts instances used by the exact-kernel checks."""
    out = []
    for name, g in (("P3", path_graph(3)), ("P5", path_graph(5)),
                    ("C4", cycle_graph(4)), ("C6", cycle_graph(6))):
        for lam in (math.exp(-10), 0.05):
            out.append((f"hardcore-{name}-lam{lam:.3g}", HardcoreVertexModel(g, lam)))
    for name, g in (("K2", complete_graph(2)), ("P3", path_graph(3)), ("C4", cycle_graph(4))):
        out.append((f"potts-{name}", potts_polymer_model(g, PottsParams(2, 5.0))))
    return out


@pytest.fixture
def k33():
    return complete_bipartite(3, 3)
