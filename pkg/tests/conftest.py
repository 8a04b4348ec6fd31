import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from impactosc.linear_flow import OscillatorConfig  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def reference_cfg():
    """Moderately damped oscillator driven above resonance; r = 0.9."""
    return OscillatorConfig(zeta=0.05, omega_n=1.0, force_amp=1.0, omega_f=1.5, restitution=0.9)


@pytest.fixture(scope="session")
def below_side_cfg():
    """Forcing fast enough that the small one-impact orbit lives below sigma*."""
    return OscillatorConfig(zeta=0.05, omega_n=1.0, force_amp=1.0, omega_f=3.0, restitution=0.9)


@pytest.fixture(scope="session")
def reference_graze(reference_cfg):
    from impactosc.grazing_zdm import find_grazing_orbit

    return find_grazing_orbit(reference_cfg)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line; the lines are echoed after the test session."""

    def report(number, name, ok, detail):
        line = f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
