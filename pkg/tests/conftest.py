import numpy as np
import pytest

from qerrdist import oscillator as osc
from qerrdist import scenarios as sc


@pytest.fixture(scope="session")
def rep40():
    return osc.OscillatorRep(40)


@pytest.fixture(scope="session")
def rep20():
    return osc.OscillatorRep(20)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CACHE = {}


@pytest.fixture(scope="session")
def scenario():
    """Run a registered scenario once per session with default settings."""
    from qerrdist.harness import RunConfig

    def get(sid):
        if sid not in _CACHE:
            _CACHE[sid] = sc.SCENARIOS[sid].runner(RunConfig(scenario=sid))
        return _CACHE[sid]

    return get


ACCEPTANCE = {}


@pytest.fixture(scope="session")
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def emit(number, checks):
        bad = [name for name, ok in checks.items() if not ok]
        line = f"criterion {number}: {'PASS' if not bad else 'FAIL'}"
        line += f" ({len(checks) - len(bad)}/{len(checks)} checks)"
        if bad:
            line += " failing: " + "; ".join(bad)
        ACCEPTANCE[number] = line
        print(line)
        return not bad

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
