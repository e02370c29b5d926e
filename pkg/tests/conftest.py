import pytest

from cftwin.fixtures import load_fixture
from cftwin.scm import make_scm, tabulate


@pytest.fixture(scope="session")
def fix_h():
    return load_fixture("FIX-H")


@pytest.fixture(scope="session")
def fix_hc():
    return load_fixture("FIX-HC")


@pytest.fixture(scope="session")
def fix_g():
    return load_fixture("FIX-G")


@pytest.fixture(scope="session")
def fix_g2():
    return load_fixture("FIX-G2")


@pytest.fixture(scope="session")
def fix_null():
    return load_fixture("FIX-NULL")


def flat_reward_scm():
    """A confounded model whose reward ignores everything."""
    doms = {"U": (0, 1), "A": (0, 1), "Y": (0, 1)}
    return make_scm(["A", "Y"], ["U"], doms,
                    {"A": tabulate(["U"], lambda u: u, doms),
                     "Y": tabulate(["A", "U"], lambda a, u: 1, doms)},
                    {(0,): "1/2", (1,): "1/2"}, "Y")


@pytest.fixture
def flat():
    return flat_reward_scm()


@pytest.fixture(scope="session")
def criterion_log(request):
    """Collects one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return ok

    return record


_LINES = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
