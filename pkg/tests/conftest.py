import numpy as np
import pytest

from coop_ftpl.actions import DecisionFamily
from coop_ftpl.graph import Graph, complete_graph
from coop_ftpl.network import ActivationModel, LossModel, SimConfig


def bernoulli_config(graph, k, m, means, q, horizon, **kw):
    return SimConfig(graph=graph, family=DecisionFamily.exactly(k, m),
                     loss=LossModel("iid_bernoulli", means=tuple(means)),
                     activation=ActivationModel(np.broadcast_to(q, graph.n_agents).astype(float)),
                     horizon=horizon, **kw)


@pytest.fixture
def single_agent_cfg():
    return bernoulli_config(Graph(1), 5, 1, (0.3, 0.5, 0.5, 0.5, 0.5), 1.0, 300)


@pytest.fixture
def clique_cfg():
    means = [0.5] * 8
    means[0] = 0.3
    return bernoulli_config(complete_graph(6), 8, 1, means, 0.5, 150)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion (shown in the terminal summary)."""
    def _report(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
