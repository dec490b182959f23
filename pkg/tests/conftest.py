import pytest

from zonal_clearing.kernels import get_kernels

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record a named pass/fail line, shown in the terminal summary."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        print(line)
        _CRITERIA.append(line)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the jitted kernels once so timings exclude compilation."""
    from corpus import two_zone
    from zonal_clearing import clear_hour

    topo, offers, limits = two_zone()
    clear_hour(offers, topo, limits, 1)
    return get_kernels()


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
