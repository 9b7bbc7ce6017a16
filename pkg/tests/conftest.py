import pytest

from osc_conn.calibration import default_k_grid, sweep_coupling
from osc_conn.dynamics import SimConfig
from osc_conn.encoding import FreqCalib, make_filter_bank
from osc_conn.harness import build_standard_suite

VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


# the coupling sweeps are the expensive part of the suite; compute them once
@pytest.fixture(scope="session")
def bank():
    return make_filter_bank()


@pytest.fixture(scope="session")
def suite(bank):
    return build_standard_suite(bank, seed=0)


@pytest.fixture(scope="session")
def sweeps(suite):
    grid = default_k_grid()
    return {st: sweep_coupling(suite, grid, FreqCalib.preset(st), SimConfig(), 16)
            for st in (3, 5, 7)}


@pytest.fixture(scope="session")
def k3(sweeps):
    return sweeps[3].best_k
