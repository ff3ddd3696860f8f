import time
from contextlib import contextmanager

import pytest

_RESULTS: dict[str, tuple[bool, float, str]] = {}


class Criterion:
    def __init__(self, name: str, title: str):
        self.name, self.title = name, title

    @contextmanager
    def check(self, budget: float = 10.0):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            prev = _RESULTS.get(self.name, (True, 0.0, self.title))
            within = elapsed < budget
            _RESULTS[self.name] = (prev[0] and ok and within, max(prev[1], elapsed), self.title)
        assert within, f"{self.name} took {elapsed:.1f}s, budget {budget:.0f}s"


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_RESULTS):
        ok, elapsed, title = _RESULTS[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'} (slowest item {elapsed:.2f}s) {title}")
