import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance reporting -----------------------------------------------------

_CRITERIA = {}


class _Criterion:
    def __init__(self, number: int):
        self.number = number
        self.checks = []

    def check(self, label: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((label, bool(ok), detail))
        return bool(ok)

    def __enter__(self):
        return self

    def __exit__(self, etype, exc, tb):
        if exc is not None and not isinstance(exc, AssertionError):
            self.checks.append(("completed", False, f"{etype.__name__}: {exc}"))
        ok = bool(self.checks) and all(c[1] for c in self.checks)
        parts = [f"{lbl}{': ' + d if d else ''} [{'ok' if good else 'FAIL'}]"
                 for lbl, good, d in self.checks]
        line = f"criterion {self.number}: {'PASS' if ok else 'FAIL'} | " + "; ".join(parts)
        _CRITERIA[self.number] = line
        print(line)
        if exc is None:
            assert ok, line
        return False


@pytest.fixture
def criterion():
    """``with criterion(n) as c: c.check(label, ok, detail)`` -> one PASS/FAIL line."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
