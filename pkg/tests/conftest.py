import pytest

from razorbus.characterization import build_tables
from razorbus.interconnect import BusGeometry, calibrate_repeaters, extract_rc


@pytest.fixture(scope="session")
def geometry():
    g = BusGeometry()
    return g.with_repeater_size(calibrate_repeaters(g))


@pytest.fixture(scope="session")
def rc(geometry):
    return extract_rc(geometry)


@pytest.fixture(scope="session")
def table(geometry, rc):
    return build_tables(geometry, rc)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line, then fail the test if the criterion failed."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number, ok, detail):
        lines.append((number, ok, detail))
        assert ok, f"criterion {number} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(lines, key=lambda x: x[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
