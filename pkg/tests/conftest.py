import numpy as np
import pytest

from kicked_oscillator import FloquetOperators, OscillatorParams


@pytest.fixture(scope="session")
def ops64():
    return FloquetOperators(OscillatorParams(basis_size=64, pad=256))


@pytest.fixture(scope="session")
def ops256():
    return FloquetOperators(OscillatorParams(basis_size=256))


@pytest.fixture(scope="session")
def ops2048():
    return FloquetOperators(OscillatorParams(basis_size=2048))


@pytest.fixture
def rng():
    return np.random.default_rng(20260)


def random_state(rng, N, support=None):
    support = N if support is None else support
    psi = np.zeros(N, dtype=complex)
    psi[:support] = rng.normal(size=support) + 1j * rng.normal(size=support)
    return psi / np.linalg.norm(psi)


ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", help="run full-scale tests (tens of minutes)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="full-scale run; pass --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
