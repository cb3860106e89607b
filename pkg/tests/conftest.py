import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "repo", deadline=None, max_examples=60, derandomize=True, database=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def default_experiment(tmp_path_factory):
    """One full default experiment (2 voltages x 3 runs), shared by the acceptance tests."""
    import time

    from quadevo import harness

    out = tmp_path_factory.mktemp("default_experiment")
    cfg = harness.load_config(out=out)
    t0 = time.perf_counter()
    harness.cmd_evolve(cfg)
    elapsed = time.perf_counter() - t0
    return cfg, harness.find_archives(out), elapsed


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion, then assert it."""
    def report(number: int, ok: bool, detail: str) -> None:
        _CRITERIA[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_CRITERIA[number])
        assert ok, detail
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
