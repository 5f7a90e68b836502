"""Shared fixtures and the acceptance-line collector."""

import pathlib

import pytest
from hypothesis import HealthCheck, settings

from kfplimits import catalog, gaussian_bump

settings.register_profile(
    "artifact",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("artifact")

# Lines appended by the acceptance tests; echoed in the terminal summary and
# persisted next to the test run so reviewers get one verdict per criterion.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    out = pathlib.Path(config.rootpath) / "acceptance_results.txt"
    out.write_text("\n".join(ACCEPTANCE_LINES) + "\n")
    terminalreporter.write_line(f"written to {out}")


@pytest.fixture(scope="session")
def heat1():
    return catalog("heat", 1)


@pytest.fixture(scope="session")
def heat2():
    return catalog("heat", 2)


@pytest.fixture(scope="session")
def ou1():
    return catalog("ornstein_uhlenbeck", 1)


@pytest.fixture(scope="session")
def kolmo():
    return catalog("kolmogorov", 1)


@pytest.fixture(scope="session")
def friction():
    return catalog("kolmogorov_friction", 1)


@pytest.fixture(scope="session")
def gauss1():
    return gaussian_bump(1)


@pytest.fixture(scope="session")
def gauss2():
    return gaussian_bump(2)
