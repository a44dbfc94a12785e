import numpy as np
import pytest
from hypothesis import settings

from nschrelax.grid import GridSpec

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def grid1d(n=16):
    return GridSpec(n)


def grid2d(nx=8, ny=6):
    return GridSpec(nx, ny, xmax=1.3, ymax=0.9)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion(capsys):
    """``criterion(label, ok, detail)`` prints one PASS/FAIL line and keeps it for the summary."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        _CRITERIA.append(line)
        with capsys.disabled():
            print(f"\n    {line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
