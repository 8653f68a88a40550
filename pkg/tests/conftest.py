from __future__ import annotations

import time
from contextlib import contextmanager
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

_RESULTS: list[tuple[str, str, float, str]] = []


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def criterion():
    """Record an acceptance criterion's verdict; a time budget failure counts as FAIL."""

    @contextmanager
    def run(name: str, limit: float | None = None):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as e:
            _RESULTS.append((name, "FAIL", time.perf_counter() - t0, type(e).__name__))
            raise
        dt = time.perf_counter() - t0
        if limit is not None and dt > limit:
            _RESULTS.append((name, "FAIL", dt, f"over {limit:g}s budget"))
            pytest.fail(f"{name}: took {dt:.2f}s, budget {limit:g}s")
        _RESULTS.append((name, "PASS", dt, ""))

    return run


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, dt, why in _RESULTS:
        extra = f" ({why})" if why else ""
        terminalreporter.write_line(f"{verdict}  {name}  [{dt:.2f}s]{extra}")
