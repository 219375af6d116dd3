import numpy as np
import pytest
from scipy.optimize import linprog

from bincut.simplex import linprog_max


def test_textbook():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
    res = linprog_max([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert res.status == "optimal"
    assert res.value == pytest.approx(36)
    np.testing.assert_allclose(res.x, [2, 6])


def test_infeasible():
    assert linprog_max([1, 1], [[1, 1], [-1, -1]], [1, -2]).status == "infeasible"


def test_unbounded():
    assert linprog_max([1, 0], [[0, 1]], [1]).status == "unbounded"


def test_equality_and_free():
    # max -t s.t. t >= x - 2, t >= 2 - x, x = 5, t free
    res = linprog_max([0, -1], [[1, -1], [-1, -1]], [2, -2], A_eq=[[1, 0]], b_eq=[5], free=[1])
    assert res.value == pytest.approx(-3)


def test_negative_rhs_needs_phase_one():
    res = linprog_max([-1, -1], [[-1, -2]], [-4])
    assert res.status == "optimal" and res.value == pytest.approx(-2)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook largest-coefficient rule
    c = [0.75, -150, 0.02, -6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    res = linprog_max(c, A, [0, 0, 1])
    assert res.status == "optimal" and res.value == pytest.approx(0.05)


@pytest.mark.parametrize("seed", range(60))
def test_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    nv, m = int(rng.integers(1, 6)), int(rng.integers(1, 7))
    c = rng.normal(size=nv)
    A = rng.normal(size=(m, nv))
    b = rng.normal(size=m) + 0.5
    A = np.vstack([A, np.eye(nv)])       # keep it bounded
    b = np.concatenate([b, rng.uniform(0.5, 3, size=nv)])
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * nv, method="highs")
    res = linprog_max(c, A, b)
    if ref.status == 2:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal"
        assert res.value == pytest.approx(-ref.fun, abs=1e-7)
        assert np.all(A @ res.x <= b + 1e-7) and np.all(res.x >= -1e-9)
