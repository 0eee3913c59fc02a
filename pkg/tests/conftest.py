import pytest

from icebox.exact import enumerate_states
from icebox.lattice import build_lattice


@pytest.fixture(scope="session")
def space2():
    return enumerate_states(build_lattice(2))


@pytest.fixture(scope="session")
def space3():
    return enumerate_states(build_lattice(3))


@pytest.fixture(scope="session")
def space2_full():
    return enumerate_states(build_lattice(2), include_near_perfect=True)


@pytest.fixture(scope="session")
def torus2():
    return enumerate_states(build_lattice(2, "periodic"))


@pytest.fixture(scope="session")
def torus2_full():
    return enumerate_states(build_lattice(2, "periodic"), include_near_perfect=True)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
