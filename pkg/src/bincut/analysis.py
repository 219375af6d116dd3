"""Brute-force oracle, Condition-1 checks, convergence diagnostics and
dual certificates. Everything here enumerates the binary cube and is meant
for desk-scale instances.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .cuts import feasibility_cut, optimality_cut
from .linalg import nnls
from .master import Linear, build_master, solve as solve_master
from .model import (ENUM_LIMIT, TOL_FEAS, TOL_TIE, active_set, binary_vector, bits_str,
                    classify_point, enumerate_binary_points, split_points)
from .simplex import linprog_max


class EmptyFeasibleSetError(ValueError):
    pass


class ComplementarityError(ValueError):
    pass


def _rtol(v):
    return 1e-9 * max(1.0, abs(v))


def _gradients(fn, X):
    if hasattr(fn, "Q"):
        return np.asarray(X, dtype=np.float64) @ fn.Q + fn.q
    return np.array([fn.gradient(x) for x in X])


def _region(problem, limit):
    pts = enumerate_binary_points(problem.polyhedron, limit)
    C, Cbar, Gbad = split_points(problem, pts)
    return C, Cbar, Gbad


# -- brute force -----------------------------------------------------------------

@dataclass(frozen=True)
class BruteForce:
    x: np.ndarray
    value: float
    second_value: float
    n_feasible: int

    @property
    def single_level(self):
        """True when every feasible point attains the optimum."""
        return self.second_value == -math.inf

    @property
    def gap(self):
        return 0.0 if self.single_level else self.value - self.second_value

    def __iter__(self):
        return iter((self.x, self.value, self.second_value))


def brute_force_solve(problem, limit=ENUM_LIMIT):
    """``(x*, M1, M2)``: best feasible point (lexicographically first on ties),
    the optimum and the second-best level."""
    C, _, _ = _region(problem, limit)
    if C.shape[0] == 0:
        raise EmptyFeasibleSetError("no feasible binary point")
    F = problem.objective.values(C)
    M1 = float(F.max())
    top = F >= M1 - _rtol(M1)
    x = binary_vector(C[int(np.argmax(top))])
    rest = F[~top]
    M2 = float(rest.max()) if rest.size else -math.inf
    return BruteForce(x, M1, M2, int(C.shape[0]))


# -- Condition 1 and sufficient conditions ---------------------------------------

@dataclass
class ConditionReport:
    mode: str
    passed: bool
    lp_value: float = math.nan
    true_optimum: float = math.nan
    witnesses: list = field(default_factory=list)

    @property
    def condition1_holds(self):
        return self.passed

    def __str__(self):
        lines = [f"mode: {self.mode}", f"holds: {'yes' if self.passed else 'no'}"]
        if not math.isnan(self.lp_value):
            lines.append(f"lp_value: {self.lp_value!r}")
        if not math.isnan(self.true_optimum):
            lines.append(f"true_optimum: {self.true_optimum!r}")
        for w in self.witnesses:
            lines.append(f"witness: {w}")
        return "\n".join(lines)


def check_condition1(problem, limit=ENUM_LIMIT, master="enum"):
    """Solve the fully cut master over all of C and C-bar and compare with
    the brute-force optimum."""
    C, Cbar, Gbad = _region(problem, limit)
    if C.shape[0] == 0:
        raise EmptyFeasibleSetError("no feasible binary point")
    opt = [optimality_cut(problem.objective, y) for y in C]
    feas = [feasibility_cut(problem.constraints[j], j, y)
            for y, gv in zip(Cbar, Gbad) for j in active_set(gv)]
    sol = solve_master(build_master(problem.polyhedron, opt, feas), master, limit)
    true = float(problem.objective.values(C).max())
    lp = sol.theta
    rep = ConditionReport("condition1", abs(lp - true) <= _rtol(true), lp, true)
    if not rep.passed and sol.optimal:
        rep.witnesses.append(f"master point {bits_str(sol.x)} with theta={lp!r}")
    return rep


def check_tangent_domination(problem, limit=ENUM_LIMIT):
    """``f(x) <= h_f(x,y)`` on C x C and ``h_gj(x,y) <= 0`` for x in C,
    y in C-bar, j in J(y). Reports the first violating pair of each half."""
    C, Cbar, Gbad = _region(problem, limit)
    rep = ConditionReport("tangent-domination", True)
    if C.shape[0]:
        f = problem.objective
        F = f.values(C)
        D = _gradients(f, C)                    # row y
        Cf = C.astype(np.float64)
        # H[x, y] = f(y) + <grad f(y), x - y>
        H = F[None, :] + Cf @ D.T - np.einsum("ij,ij->i", D, Cf)[None, :]
        bad = H < F[:, None] - 1e-9 * np.maximum(1.0, np.abs(F[:, None]))
        if bad.any():
            ix, iy = np.unravel_index(int(np.argmax(bad)), bad.shape)
            rep.passed = False
            rep.witnesses.append(
                f"objective: x={bits_str(C[ix])} y={bits_str(C[iy])} f(x)={float(F[ix])!r} h_f(x,y)={float(H[ix, iy])!r}")
    if C.shape[0] and Cbar.shape[0]:
        Cf = C.astype(np.float64)
        done = False
        for y, gv in zip(Cbar, Gbad):
            for j in active_set(gv):
                cut = feasibility_cut(problem.constraints[j], j, y)
                vals = Cf @ cut.a + cut.rhs
                hit = np.flatnonzero(vals > 1e-9)
                if hit.size:
                    rep.passed = False
                    rep.witnesses.append(
                        f"constraint {j + 1}: x={bits_str(C[hit[0]])} y={bits_str(y)} h_g(x,y)={float(vals[hit[0]])!r}")
                    done = True
                    break
            if done:
                break
    return rep


def check_robust_quasiconvex_binary(fn, tau, points, tol=1e-9):
    """First-order robust quasiconvexity test on the given points.

    For every ordered pair with ``fn(x) <= fn(y)`` checks
    ``<grad fn(y), x - y> <= -min(tau ||y - x||, fn(y) - fn(x))``.
    Returns ``(passed, witness)`` with witness ``(x, y)`` or None.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    P = np.asarray(points, dtype=np.float64)
    if P.shape[0] == 0:
        return True, None
    F = fn.values(P)
    D = _gradients(fn, P)
    for iy in range(P.shape[0]):
        diff = P - P[iy]
        lhs = diff @ D[iy]
        rhs = -np.minimum(tau * np.linalg.norm(diff, axis=1), F[iy] - F)
        bad = (F <= F[iy]) & (lhs > rhs + tol)
        if bad.any():
            ix = int(np.argmax(bad))
            return False, (P[ix].astype(np.int8), P[iy].astype(np.int8))
    return True, None


def compute_epsilon_bar(problem, limit=ENUM_LIMIT):
    """``min <grad g_j(y), y - x>`` over x in C, y in C-bar, j in J(y).

    ``+inf`` when C-bar is empty. A nonpositive value means the shifted
    method's premise fails on this instance.
    """
    C, Cbar, Gbad = _region(problem, limit)
    if C.shape[0] == 0:
        raise EmptyFeasibleSetError("no feasible binary point")
    if Cbar.shape[0] == 0:
        return math.inf
    Cf = C.astype(np.float64)
    best = math.inf
    for y, gv in zip(Cbar, Gbad):
        yf = y.astype(np.float64)
        for j in active_set(gv):
            d = np.asarray(problem.constraints[j].gradient(yf), dtype=np.float64)
            best = min(best, float((d @ yf - Cf @ d).min()))
    return best


# -- convergence-rate quantities ----------------------------------------------------

def delta_k(optimal_value, f_xk, grad):
    norm = float(np.linalg.norm(np.asarray(grad, dtype=np.float64)))
    if norm == 0:
        return 0.0
    return (optimal_value - f_xk) / norm


def u_count(M, m):
    """Vertices of the m-cube within distance sqrt(M) of a fixed vertex."""
    M, m = int(M), int(m)
    if not 0 <= M <= m:
        raise ValueError(f"need 0 <= M <= m, got M={M}, m={m}")
    return sum(math.comb(m, q) for q in range(M + 1))


def removal_lower_bound(delta, n):
    """Points removed by an optimality cut with ratio ``delta``: ``u(N, n)`` for
    the largest ``N`` with ``delta > sqrt(N)``; 0 when no such ``N``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    for N in range(n, -1, -1):
        if delta > math.sqrt(N):
            return u_count(N, n)
    return 0


def iteration_bound(n, N):
    if not 1 <= N <= n:
        raise ValueError(f"need 1 <= N <= n, got N={N}, n={n}")
    return 2 ** (n - N)


def _feasible_iterates(trace, start):
    seen, out = set(), []
    pts = ([start] if start is not None else []) + [r.x for r in trace if r.feasible]
    for x in pts:
        key = bits_str(x)
        if key not in seen:
            seen.add(key)
            out.append(binary_vector(x))
    return out


def iteration_bound_audit(trace, problem, optimal_value, start=None):
    """For each N: count of distinct feasible iterates with ``delta_k > sqrt(N)``
    against ``2**(n-N)``. Returns ``{N: (count, bound)}``."""
    n = problem.n
    deltas = [delta_k(optimal_value, problem.objective(x), problem.objective.gradient(x))
              for x in _feasible_iterates(trace, start)]
    return {N: (sum(d > math.sqrt(N) for d in deltas), iteration_bound(n, N)) for N in range(1, n + 1)}


# -- cone distance and certificates ---------------------------------------------

class CertificateKind(str, enum.Enum):
    KKT_LP = "KKT_LP"
    NORMAL_CONE_MEMBERSHIP = "NORMAL_CONE_MEMBERSHIP"
    GRADIENT_NORM = "GRADIENT_NORM"
    TANGENT_DISTANCE = "TANGENT_DISTANCE"


@dataclass
class Certificate:
    kind: CertificateKind
    passed: bool
    detail: dict = field(default_factory=dict)


def tangent_cone_projection(v, x, feasible_points):
    """Projection of ``v`` onto the cone generated by ``{y - x}``.

    Returns ``(projection, degenerate)``; ``degenerate`` marks an isolated
    ``x`` (no generators, so the normal cone is the whole space).
    """
    v = np.asarray(v, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    P = np.asarray(feasible_points, dtype=np.float64).reshape(-1, x.size)
    G = P[np.any(P != x, axis=1)] - x
    if G.shape[0] == 0:
        return np.zeros_like(v), True
    alpha, _ = nnls(G.T, v)
    return G.T @ alpha, False


def tangent_cone_distance(v, x, feasible_points):
    """Distance from ``v`` to the normal cone of the point set at ``x``.

    By the Moreau decomposition this equals the norm of the projection of
    ``v`` onto the polar (tangent) cone.
    """
    proj, _ = tangent_cone_projection(v, x, feasible_points)
    return float(np.linalg.norm(proj))


def _check_kkt_premises(problem, x, lam):
    cl = classify_point(problem, x)
    if not cl.feasible:
        raise ValueError(f"x*={bits_str(x)} is infeasible")
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    if lam.size != problem.m:
        raise ValueError(f"expected {problem.m} multipliers, got {lam.size}")
    if (lam < 0).any():
        raise ValueError("multipliers must be nonnegative")
    gv = problem.constraint_values(x)
    comp = np.abs(lam * gv)
    if (comp > 1e-9).any():
        j = int(np.argmax(comp))
        raise ComplementarityError(f"lambda_{j + 1} * g_{j + 1}(x*) = {lam[j] * gv[j]:.6g} != 0")
    return lam


def _kkt_vector(problem, x, lam):
    c = np.asarray(problem.objective.gradient(x), dtype=np.float64).copy()
    for j, g in enumerate(problem.constraints):
        if lam[j]:
            c -= lam[j] * np.asarray(g.gradient(x), dtype=np.float64)
    return c


def kkt_certificate(problem, x_star, lam, master="enum", limit=ENUM_LIMIT):
    """Check that ``x*`` maximises ``c'x`` over the binary points of K where
    ``c = grad f(x*) - sum lambda_j grad g_j(x*)``."""
    x = binary_vector(x_star, problem.n)
    lam = _check_kkt_premises(problem, x, lam)
    c = _kkt_vector(problem, x, lam)
    sol = solve_master(build_master(problem.polyhedron, objective_mode=Linear(c)), master, limit)
    at_x = float(c @ x)
    ok = at_x >= sol.theta - _rtol(sol.theta)
    return Certificate(CertificateKind.KKT_LP, bool(ok), {
        "lambda": lam, "c": c, "max_value": sol.theta, "x_value": at_x,
        "argmax": sol.x})


def kkt_search(problem, x_star, master="enum", limit=ENUM_LIMIT, tol=1e-9):
    """Look for multipliers that make :func:`kkt_certificate` pass.

    Inactive constraints get ``lambda_j = 0``. The active multipliers come
    from a cutting loop: each master answer that beats ``x*`` becomes a
    constraint of a small LP in ``lambda``.
    """
    x = binary_vector(x_star, problem.n)
    xf = x.astype(np.float64)
    gv = problem.constraint_values(x)
    active = [j for j in range(problem.m) if abs(gv[j]) <= 1e-12]
    grad_f = np.asarray(problem.objective.gradient(x), dtype=np.float64)
    grad_g = np.array([problem.constraints[j].gradient(x) for j in active]).reshape(len(active), problem.n)
    lam = np.zeros(problem.m)
    rows = []
    for it in range(1 << min(problem.n, 30)):
        cert = kkt_certificate(problem, x, lam, master, limit)
        cert.detail["iterations"] = it + 1
        if cert.passed or not active:
            return cert
        y = cert.detail["argmax"].astype(np.float64)
        rows.append(y - xf)
        D = np.array(rows)
        df, dg = D @ grad_f, D @ grad_g.T
        k = len(active)
        # min s  s.t.  df - dg lam <= s,  lam >= 0, s >= 0
        A_ub = np.hstack([-dg, -np.ones((D.shape[0], 1))])
        c = np.zeros(k + 1)
        c[-1] = -1.0
        res = linprog_max(c, A_ub, -df)
        if res.status != "optimal" or -res.value > tol * max(1.0, np.abs(df).max()):
            cert.detail["iterations"] = it + 1
            return cert
        lam = np.zeros(problem.m)
        lam[active] = np.maximum(res.x[:k], 0.0)
    raise RuntimeError("multiplier search did not terminate")


def lipschitz_threshold(problem, j, xk, limit=ENUM_LIMIT):
    """``2 min g_j(x) / max ||x - xk||^2`` over violators of ``g_j`` in K;
    ``+inf`` when no violator other than ``xk`` exists."""
    xk = binary_vector(xk, problem.n)
    cl = classify_point(problem, xk)
    if cl.feasible or j not in cl.active_set:
        raise ValueError(f"x^k must be infeasible with constraint {j + 1} in J(x^k)")
    pts = enumerate_binary_points(problem.polyhedron, limit)
    g = problem.constraints[j].values(pts)
    viol = g > TOL_FEAS
    others = viol & np.any(pts != xk, axis=1)
    if not others.any():
        return math.inf
    dist2 = ((pts[others] - xk) ** 2).sum(axis=1)
    return float(2.0 * g[viol].min() / dist2.max())


# -- trace audit -------------------------------------------------------------------

@dataclass
class TraceReport:
    violations: list = field(default_factory=list)
    notices: list = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self):
        return not self.violations


def verify_trace_inequalities(trace, problem, optimal_value, lipschitz=None, start=None, rtol=1e-9):
    """Replay a run against the rate inequalities.

    Feasible ``x^k`` and later ``l``:
    ``0 <= opt - f(x^k) <= theta^l - f(x^k) <= <grad f(x^k), x^l - x^k>``.
    Infeasible ``x^k`` and later ``l``, ``j in J(x^k)``:
    ``g_j(x^l) <= L_j/2 ||x^k - x^l||^2``.
    ``lipschitz`` lists ``L_j`` per constraint (None entries skip that j).
    """
    rep = TraceReport()
    tol = rtol * max(1.0, abs(optimal_value))
    pts = []
    if start is not None:
        pts.append((0, binary_vector(start), math.nan, True, ()))
    pts += [(r.k, binary_vector(r.x), r.theta, r.feasible, tuple(r.active_set)) for r in trace]
    f = problem.objective
    if problem.m and lipschitz is None:
        rep.notices.append("no Lipschitz constants given; constraint inequalities skipped")
    for a, (k, xk, _, feas, J) in enumerate(pts):
        later = pts[a + 1:]
        if feas:
            fk = f(xk)
            gk = np.asarray(f.gradient(xk), dtype=np.float64)
            if optimal_value - fk < -tol:
                rep.violations.append(f"k={k}: f(x^k)={fk!r} exceeds the optimum {optimal_value!r}")
            for (l, xl, th, _, _) in later:
                rep.checked += 1
                lin = float(gk @ (xl.astype(np.float64) - xk))
                if optimal_value - fk > th - fk + tol:
                    rep.violations.append(f"k={k}, l={l}: theta^l={th!r} below the optimum {optimal_value!r}")
                if th - fk > lin + tol:
                    rep.violations.append(f"k={k}, l={l}: theta^l - f(x^k)={th - fk!r} exceeds <grad, x^l - x^k>={lin!r}")
        elif lipschitz is not None:
            for j in J:
                L = lipschitz[j]
                if L is None:
                    continue
                for (l, xl, _, _, _) in later:
                    rep.checked += 1
                    gl = problem.constraints[j](xl)
                    bound = 0.5 * L * float(((xl - xk) ** 2).sum())
                    if gl > bound + tol:
                        rep.violations.append(f"k={k}, l={l}, j={j + 1}: g_j(x^l)={gl!r} > {bound!r}")
    return rep
