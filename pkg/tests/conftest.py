from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from ricci_lab.flow import FlowConfig, run_flow
from ricci_lab.families import sin_cubed_profile, normalize_profile
from ricci_lab.warped import make_round_profile

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


def sin_cubed(eps: float, m: int = 256, n: int = 3):
    return normalize_profile(sin_cubed_profile(n, eps, m), eps)


@pytest.fixture(scope="session")
def round_trace_512():
    """Round S^3 run to the curvature ceiling at the default grid."""
    return run_flow(make_round_profile(3, 1.0, 512), FlowConfig())


@pytest.fixture(scope="session")
def round_trace_256():
    return run_flow(make_round_profile(3, 1.0, 256), FlowConfig())


@pytest.fixture(scope="session")
def round_short_256():
    """Round run to t = 0.1 with a fine cadence (barrier and backward checks)."""
    return run_flow(make_round_profile(3, 1.0, 256),
                    FlowConfig(max_time=0.1, sample_cadence=2.5e-4, record_width=False))


@pytest.fixture(scope="session")
def pert_trace_256():
    """sin_cubed eps = 0.05 run to the ceiling."""
    return run_flow(sin_cubed(0.05), FlowConfig(extra_times=(0.06, 0.1)))


@pytest.fixture(scope="session")
def pert_short_256():
    return run_flow(sin_cubed(0.05),
                    FlowConfig(max_time=0.1, sample_cadence=2.5e-4, record_width=False))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the lines are echoed in the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
