import numpy as np
import pytest


def random_spd(rng, n, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n) * rng.uniform(0.5, 2.0)
    return (q * lam) @ q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, filled in by test_acceptance and echoed after the run
VERDICTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[k])
