"""Pure numpy implementation of the cube scans in ``_kernels.pyx``.

Same point encoding and the same tie rule; used when the compiled
extension is unavailable or ``BINCUT_PURE_PYTHON`` is set.
"""

import numpy as np

CHUNK = 1 << 15


def cube_chunk(start, stop, n):
    """Rows ``start..stop-1`` of the lexicographic enumeration of {0,1}^n."""
    t = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((t[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def _feasible(G, h, X, tol):
    if G.shape[0] == 0:
        return np.ones(X.shape[0], dtype=bool)
    return np.all(X @ G.T <= h + tol, axis=1)


def _values(P, p, X):
    if P.shape[0] == 0:
        return np.full(X.shape[0], np.inf)
    return np.min(X @ P.T + p, axis=1)


def scan_max(G, h, P, p, n, tol, rel_tie):
    total = 1 << n
    best, best_t, count = -np.inf, -1, 0
    for start in range(0, total, CHUNK):
        stop = min(total, start + CHUNK)
        X = cube_chunk(start, stop, n)
        ok = _feasible(G, h, X, tol)
        count += int(ok.sum())
        if not ok.any():
            continue
        vals = np.where(ok, _values(P, p, X), -np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_t = float(vals[i]), start + i
    if best_t >= 0:
        cut = best - rel_tie * max(1.0, abs(best))
        for start in range(0, best_t + 1, CHUNK):
            stop = min(best_t + 1, start + CHUNK)
            X = cube_chunk(start, stop, n)
            ok = _feasible(G, h, X, tol)
            hit = np.flatnonzero(ok & (_values(P, p, X) >= cut))
            if hit.size:
                best_t = start + int(hit[0])
                break
    return best_t, best, count


def feasible_mask(G, h, n, tol):
    total = 1 << n
    out = np.zeros(total, dtype=bool)
    for start in range(0, total, CHUNK):
        stop = min(total, start + CHUNK)
        out[start:stop] = _feasible(G, h, cube_chunk(start, stop, n), tol)
    return out
