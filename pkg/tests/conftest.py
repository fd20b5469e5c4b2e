import pytest

from mesalab import _backend, make_grid

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


@pytest.fixture
def std_grid():
    """(-1, 6) with dx = 1/200: room for the mesa of box(2, 0, 1) and box(3, 0, 1)."""
    return make_grid(-1, 6, 1400)


@pytest.fixture
def shock_grid():
    return make_grid(-1, 3, 800)
