import contextlib

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "potsim", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True,
)
settings.load_profile("potsim")

_criteria = []


@pytest.fixture
def criterion():
    """``with criterion(n, title): ...`` records one PASS/FAIL line for the summary."""

    @contextlib.contextmanager
    def run(number, title):
        try:
            yield
        except BaseException as exc:
            detail = (str(exc).splitlines() or [""])[0]
            line = f"FAIL  criterion {number:2d}: {title} [{type(exc).__name__}: {detail}]"
            _criteria.append((number, line))
            print(line)
            raise
        line = f"PASS  criterion {number:2d}: {title}"
        _criteria.append((number, line))
        print(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_criteria):
            terminalreporter.write_line(line)
