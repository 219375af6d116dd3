"""Backend selection for the binary-cube scans.

The compiled module ``bincut._kernels`` is used when importable; otherwise
the numpy fallback. Set ``BINCUT_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("BINCUT_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

REL_TIE = 1e-12


def _c(a, ncols=None):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if ncols is not None and a.ndim == 2 and a.shape[0] == 0:
        a = np.zeros((0, ncols), dtype=np.float64)
    return a


def scan_max(G, h, P, p, n, tol=1e-9, rel_tie=REL_TIE, impl=None):
    """Best binary point of ``max min_k (P x + p)_k`` s.t. ``G x <= h``.

    Returns ``(index, value, n_feasible)`` with the index in lexicographic
    encoding (see :func:`index_to_bits`), or -1 if infeasible.
    """
    impl = impl or _impl
    return impl.scan_max(_c(G, n), _c(h), _c(P, n), _c(p), int(n), float(tol), float(rel_tie))


def feasible_mask(G, h, n, tol=1e-9, impl=None):
    impl = impl or _impl
    return np.asarray(impl.feasible_mask(_c(G, n), _c(h), int(n), float(tol)), dtype=bool)


def index_to_bits(t, n):
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((np.int64(t) >> shifts) & 1).astype(np.int8)


def indices_to_bits(ts, n):
    ts = np.asarray(ts, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((ts[:, None] >> shifts[None, :]) & 1).astype(np.int8)
