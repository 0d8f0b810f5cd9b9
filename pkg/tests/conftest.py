import numpy as np
import pytest

from majammer.model import SystemConfig, derive_topology


@pytest.fixture
def cfg():
    return SystemConfig()


@pytest.fixture
def topo(cfg):
    return derive_topology(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def bisection_waterfill(cost, P, iters=200):
    """Reference water level by bisection on sum(max(eta - c, 0)) = P."""
    lo, hi = 0.0, float(np.max(cost) + P)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(mid - cost, 0).sum() > P:
            hi = mid
        else:
            lo = mid
    return np.maximum(0.5 * (lo + hi) - cost, 0.0)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
