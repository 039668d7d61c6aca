import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    """record_criterion(n, passed, detail) stores one acceptance line."""

    def record(n: int, passed: bool, detail: str = ""):
        prev = _RESULTS.get(n)
        if prev is not None:
            passed = passed and prev[0]
            detail = f"{prev[1]}; {detail}" if detail else prev[1]
        _RESULTS[n] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        passed, detail = _RESULTS[n]
        tag = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {tag}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
