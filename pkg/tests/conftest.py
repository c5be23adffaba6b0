import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from aniso_hardy import QuasiNormEvaluator
from aniso_hardy.builtins import builtin_matrix

settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("numeric")

MATRICES = {
    "2I1": [[2.0]],
    "2I2": 2.0 * np.eye(2),
    "diag23": builtin_matrix("diag23"),
    "shear": builtin_matrix("shear"),
}

_CACHE = {}


def evaluator(name: str) -> QuasiNormEvaluator:
    """Shared evaluators; they are immutable so reuse across tests is safe."""
    if name not in _CACHE:
        m = MATRICES[name] if name in MATRICES else builtin_matrix(name)
        _CACHE[name] = QuasiNormEvaluator.from_matrix(m)
    return _CACHE[name]


@pytest.fixture(scope="session")
def qn1():
    return evaluator("2I1")


@pytest.fixture(scope="session")
def qn2():
    return evaluator("2I2")


@pytest.fixture(scope="session")
def qn_diag():
    return evaluator("diag23")


@pytest.fixture(scope="session")
def qn_shear():
    return evaluator("shear")


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_acceptance(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
