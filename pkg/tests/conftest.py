"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

import pytest

from hardyhenon.exponents import RegimeParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def henon20() -> RegimeParams:
    return RegimeParams(20, 1.5, 10.0)


@pytest.fixture(scope="session")
def henon40() -> RegimeParams:
    return RegimeParams(40, 1.5, 10.0)


@pytest.fixture(scope="session")
def hardy8() -> RegimeParams:
    return RegimeParams(8, -0.6, 20.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
