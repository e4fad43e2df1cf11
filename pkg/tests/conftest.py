import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from catline.dynamics import SystemParams
from catline.states import auto_dim, cat_basis

settings.register_profile(
    "catline", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("catline")

# Desk-scale collision parameters: eps2 = 4K (alpha = 2) with detuning and
# loss scaled down by the same factor as eps2.
SCALE = 4.48e-6 / 2.70e-4


def scaled_params() -> SystemParams:
    return SystemParams(
        K=1.12e-6,
        eps2=4.48e-6,
        delta_ar=5.80e-6 * SCALE,
        delta_ir=5.80e-6 * SCALE,
        kappa1=1.71e-6 * SCALE,
        kappa2=3.34e-4 * SCALE,
    )


@pytest.fixture(scope="session")
def scaled():
    return scaled_params()


@pytest.fixture(scope="session")
def scaled_basis(scaled):
    return cat_basis(scaled.alpha, auto_dim(scaled.alpha))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
