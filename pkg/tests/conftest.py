import os
import warnings

import pytest
from hypothesis import HealthCheck, settings

from pathlab.grid import PhysicalConstants, Potential
from pathlab.propagator import AliasingWarning

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(autouse=True)
def _quiet_aliasing():
    # small exhaustive lattices are aliased by construction
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        yield


@pytest.fixture
def unit():
    return PhysicalConstants()


FAMILIES = {
    "free": Potential.free(),
    "harmonic": Potential.harmonic(1.0),
    "quartic": Potential.polynomial(0, 0, 0, 0, 0.1),
}


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
