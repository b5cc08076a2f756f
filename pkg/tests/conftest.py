import os
import subprocess
import sys

import pytest

from mgmodes.model import ModeIndex, PayoffSpec, RiskNeutralParams

S0 = 100.0
K = 100.0
R = 0.05
V0 = 0.04
T = 1.0
BS_PRICE = 10.450583572185565


@pytest.fixture
def call():
    return PayoffSpec("call", K, T)


@pytest.fixture
def put():
    return PayoffSpec("put", K, T)


def bs_params(mode=ModeIndex(1, 1), xi=0.0, rho=0.0, mu_bar=0.0):
    return RiskNeutralParams(r=R, mu_bar=mu_bar, xi=xi, rho=rho, mode=mode, v0=V0)


def run_cli(args, env=None, cwd=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "mgmodes.cli", *args],
        capture_output=True, text=True, env=full_env, cwd=cwd,
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
