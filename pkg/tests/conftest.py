import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_spd(rng, p, cond=None):
    """Random SPD matrix; with ``cond`` the eigenvalues span exactly [1, cond]."""
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    if cond is None:
        vals = rng.uniform(0.2, 3.0, size=p)
    else:
        vals = np.geomspace(1.0, cond, p)
    m = (q * vals) @ q.T
    return (m + m.T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed at the end of the run
CRITERIA = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[number])
