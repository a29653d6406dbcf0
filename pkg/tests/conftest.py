import numpy as np
import pytest

_CRITERIA: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, title: str, ok: bool, seconds: float, detail: str = "") -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {seconds:7.2f}s  {title}"
        if detail:
            line += f"  [{detail}]"
        print(line)
        _CRITERIA.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
