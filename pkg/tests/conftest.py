import numpy as np
import pytest

from sepmix.env import TwoPoint, Uniform, sample_environment

_RESULTS: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""

    def _report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _RESULTS.append(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_RESULTS, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


BALLISTIC_LAWS = (Uniform(0.55, 0.95), TwoPoint(0.3, 0.9, 0.2), Uniform(0.6, 0.9))


def random_env(rng, n):
    law = BALLISTIC_LAWS[int(rng.integers(len(BALLISTIC_LAWS)))]
    return sample_environment(law, n, int(rng.integers(2**32)))
