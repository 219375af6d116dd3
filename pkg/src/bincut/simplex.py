"""Dense two-phase tableau simplex with Bland's anti-cycling rule."""

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray = None
    value: float = None
    iterations: int = 0


def _pivot(T, basis, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = j


def _run(T, basis, cost, allowed, max_iter):
    """Maximise ``cost`` over the current tableau; returns (status, iterations)."""
    m = T.shape[0]
    ncols = T.shape[1] - 1
    for it in range(max_iter):
        red = cost[:ncols] - cost[basis] @ T[:, :ncols]
        red[~allowed] = 0.0
        red[basis] = 0.0
        cand = np.flatnonzero(red > TOL)
        if cand.size == 0:
            return "optimal", it
        j = int(cand[0])  # Bland: lowest index improving column
        colj = T[:, j]
        rows = np.flatnonzero(colj > TOL)
        if rows.size == 0:
            return "unbounded", it
        ratios = T[rows, -1] / colj[rows]
        best = ratios.min()
        ties = rows[ratios <= best + TOL * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))  # Bland: lowest basic index leaves
        _pivot(T, basis, r, j)
    raise RuntimeError(f"simplex did not finish in {max_iter} iterations")


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=(), max_iter=20000):
    """Maximise ``c'z`` s.t. ``A_ub z <= b_ub``, ``A_eq z = b_eq``.

    Variables are nonnegative except the indices listed in ``free``.
    """
    c = np.asarray(c, dtype=np.float64)
    nv = c.size
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=np.float64).reshape(-1, nv)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64).reshape(-1)
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=np.float64).reshape(-1, nv)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64).reshape(-1)

    free = sorted(set(free))
    # split each free variable into a difference of two nonnegative ones
    cols = [np.eye(nv)] + [-np.eye(nv)[:, [j]] for j in free]
    S = np.hstack(cols)  # z = S @ w
    cw = c @ S
    Aub, Aeq = A_ub @ S, A_eq @ S
    nw = S.shape[1]
    mu, me = Aub.shape[0], Aeq.shape[0]
    m = mu + me

    # columns: w | slacks (mu) | artificials (m) | rhs
    nart = m
    T = np.zeros((m, nw + mu + nart + 1))
    T[:mu, :nw] = Aub
    T[:mu, nw:nw + mu] = np.eye(mu)
    T[:mu, -1] = b_ub
    T[mu:, :nw] = Aeq
    T[mu:, -1] = b_eq
    basis = np.zeros(m, dtype=np.int64)
    art_used = np.zeros(nart, dtype=bool)
    for i in range(m):
        if T[i, -1] < 0:
            T[i] *= -1.0
        if i < mu and T[i, nw + i] > 0:
            basis[i] = nw + i
        else:
            k = nw + mu + i
            T[i, k] = 1.0
            basis[i] = k
            art_used[i] = True

    ncols = nw + mu + nart
    allowed = np.ones(ncols, dtype=bool)
    allowed[nw + mu:] = art_used
    iters = 0
    if art_used.any():
        cost1 = np.zeros(ncols + 1)
        cost1[nw + mu:ncols] = -art_used.astype(float)
        status, it = _run(T, basis, cost1, allowed, max_iter)
        iters += it
        phase1 = float(cost1[basis] @ T[:, -1])
        if phase1 < -1e-7 * max(1.0, np.abs(T[:, -1]).max(initial=0.0)):
            return LPResult("infeasible", iterations=iters)
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= nw + mu:
                nz = np.flatnonzero(np.abs(T[r, :nw + mu]) > TOL)
                if nz.size:
                    _pivot(T, basis, r, int(nz[0]))
                else:
                    keep[r] = False  # redundant row
        T, basis = T[keep], basis[keep]
    allowed[nw + mu:] = False

    cost2 = np.zeros(ncols + 1)
    cost2[:nw] = cw
    status, it = _run(T, basis, cost2, allowed, max_iter)
    iters += it
    if status != "optimal":
        return LPResult(status, iterations=iters)
    w = np.zeros(ncols)
    w[basis] = T[:, -1]
    z = S @ w[:nw]
    return LPResult("optimal", z, float(c @ z), iters)
