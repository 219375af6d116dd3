import numpy as np
import pytest

from bincut.convexify import PenaltyConfig, penalty_transform
from bincut.expr import Quadratic, parse_expression
from bincut.model import LinearPolyhedron, Problem

EXAMPLE1_F = "2*x1*x2*x3 + x1*x3 + 2*x2 + 3*x3 + 4*x4"

EXAMPLE1_TEXT = """\
# four-variable worked example
DIM 4
OBJECTIVE 2*x1*x2*x3 + x1*x3 + 2*x2 + 3*x3 + 4*x4
LINEAR 2 1 2 2 <= 5
LINEAR 2 2 1 2 <= 5
START 1110
"""


def example1_problem():
    K = LinearPolyhedron([[2, 1, 2, 2], [2, 2, 1, 2]], [5, 5])
    return Problem(4, parse_expression(EXAMPLE1_F, 4), (), K)


def example1_convexified(mu=2.5):
    p = example1_problem()
    return penalty_transform(p, PenaltyConfig(mu, (), mu_mask=(0, 1, 2)))


def _linear_rows(rng, n, rows=2):
    A = rng.integers(0, 10, size=(rows, n)).astype(float)
    return LinearPolyhedron(A, A.sum(axis=1) // 2)


def concave_linear_instance(rng, n):
    """Concave quadratic objective, two knapsack rows, no nonlinear constraints."""
    B = rng.normal(size=(n, n))
    f = Quadratic(-B.T @ B, rng.normal(size=n) * 3)
    return Problem(n, f, (), _linear_rows(rng, n))


def concave_convex_instance(rng, n):
    """Concave quadratic objective and one convex quadratic constraint;
    the zero vector is always feasible."""
    B = rng.normal(size=(n, n))
    f = Quadratic(-B.T @ B, rng.normal(size=n) * 3)
    Bg = rng.normal(size=(max(1, n // 2), n))
    Qg = Bg.T @ Bg
    g = Quadratic(Qg, rng.normal(size=n), -0.5 * np.trace(Qg) / 2 - 1.0)
    return Problem(n, f, (g,), _linear_rows(rng, n))


def convex_instance(rng, n):
    """Convex quadratic objective with linear constraints (quasiconvex)."""
    B = rng.normal(size=(n, n))
    return Problem(n, Quadratic(B.T @ B, rng.normal(size=n)), (), _linear_rows(rng, n))


@pytest.fixture
def example1():
    return example1_problem()


@pytest.fixture
def example1_mu():
    return example1_convexified()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
