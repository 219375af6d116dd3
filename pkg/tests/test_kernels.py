import os
import subprocess
import sys

import numpy as np
import pytest

from bincut import _kernels_py, kernels

compiled = pytest.importorskip("bincut._kernels", reason="compiled kernel not built")


def random_scan(rng, n, rows=2, cuts=4):
    G = rng.integers(0, 6, size=(rows, n)).astype(float)
    h = G.sum(axis=1) // 2
    P = rng.integers(-5, 6, size=(cuts, n)).astype(float)
    p = rng.integers(-3, 4, size=cuts).astype(float)
    return G, h, P, p


def brute_scan(G, h, P, p, n):
    best, best_t, count = -np.inf, -1, 0
    for t in range(1 << n):
        x = kernels.index_to_bits(t, n).astype(float)
        if G.shape[0] and np.any(G @ x > h + 1e-9):
            continue
        count += 1
        v = np.min(P @ x + p) if P.shape[0] else np.inf
        if v > best + 1e-12 * max(1.0, abs(best)) or best_t < 0:
            best, best_t = v, t
    return best_t, best, count


@pytest.mark.parametrize("seed", range(25))
def test_backends_agree_with_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    # integer data make ties common, which exercises the lexicographic rule
    G, h, P, p = random_scan(rng, n)
    ref = brute_scan(G, h, P, p, n)
    for impl in (_kernels_py, compiled):
        t, v, c = kernels.scan_max(G, h, P, p, n, impl=impl)
        assert (t, c) == (ref[0], ref[2])
        assert v == pytest.approx(ref[1])


def test_feasible_mask_parity(rng):
    for _ in range(10):
        n = int(rng.integers(1, 12))
        G, h, _, _ = random_scan(rng, n, rows=3)
        a = kernels.feasible_mask(G, h, n, impl=_kernels_py)
        b = kernels.feasible_mask(G, h, n, impl=compiled)
        np.testing.assert_array_equal(a, b)


def test_infeasible_returns_minus_one():
    G = np.ones((1, 3))
    for impl in (_kernels_py, compiled):
        t, v, c = kernels.scan_max(G, [-1.0], np.ones((1, 3)), [0.0], 3, impl=impl)
        assert t == -1 and c == 0


def test_zero_dimensional_scan():
    for impl in (_kernels_py, compiled):
        t, v, c = kernels.scan_max(np.zeros((0, 0)), np.zeros(0), np.zeros((1, 0)), [2.0], 0, impl=impl)
        assert (t, v, c) == (0, 2.0, 1)


def test_large_chunked_scan_parity():
    rng = np.random.default_rng(5)
    G, h, P, p = random_scan(rng, 17, cuts=6)
    a = kernels.scan_max(G, h, P, p, 17, impl=_kernels_py)
    b = kernels.scan_max(G, h, P, p, 17, impl=compiled)
    assert a[0] == b[0] and a[2] == b[2]
    assert a[1] == pytest.approx(b[1])


def test_bit_encoding():
    assert kernels.index_to_bits(6, 4).tolist() == [0, 1, 1, 0]
    assert kernels.indices_to_bits([0, 5], 3).tolist() == [[0, 0, 0], [1, 0, 1]]


def test_pure_python_switch():
    env = dict(os.environ, BINCUT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from bincut import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_solver_under_pure_python():
    code = ("from bincut.cli import main; import sys; "
            "sys.exit(main(['solve', sys.argv[1], '--convexify', 'mu=2.5']))")
    import tempfile
    from conftest import EXAMPLE1_TEXT
    with tempfile.NamedTemporaryFile("w", suffix=".txt", delete=False) as fh:
        fh.write(EXAMPLE1_TEXT)
    env = dict(os.environ, BINCUT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code, fh.name], env=env, capture_output=True, text=True)
    os.unlink(fh.name)
    assert out.returncode == 0, out.stderr
    assert "x: 0111" in out.stdout and "value: 9" in out.stdout
