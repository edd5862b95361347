import numpy as np
import pytest

from interference_lab.network import Network, cycle, gen_k_regular, path


@pytest.fixture
def path5():
    return path(5)


@pytest.fixture
def cycle6():
    return cycle(6)


@pytest.fixture
def graph10():
    return gen_k_regular(10, 3, seed=11)


def star_plus_cycle():
    """A 9-cycle with one pendant unit hanging off unit 0 (n = 10)."""
    edges = [(i, (i + 1) % 9) for i in range(9)] + [(0, 9)]
    return Network.from_edges(10, edges)


def random_graph(n, p, rng, min_degree=1):
    """Erdos-Renyi draw, retried until every unit has at least min_degree neighbors."""
    while True:
        A = np.triu(rng.random((n, n)) < p, 1)
        edges = np.argwhere(A)
        net = Network.from_edges(n, edges)
        if net.n and net.degrees.min() >= min_degree:
            return net


# -- acceptance criterion reporting -----------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    number, title = mark.args
    ok = call.excinfo is None
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)
