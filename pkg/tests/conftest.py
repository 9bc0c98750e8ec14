import pytest

from mrf_changepoint import SymmetricParams, make_ising_spec


@pytest.fixture(scope="session")
def ising():
    return make_ising_spec()


def random_params(rng, p, scale=1.0):
    """Dense random symmetric parameters with entries uniform on [-scale, scale]."""
    return SymmetricParams(p, rng.uniform(-scale, scale, size=p * (p + 1) // 2))


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    """Print one pass/fail line and keep it for the end-of-run summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append((number, line))
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
