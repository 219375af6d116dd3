"""Mixed-binary master problems: maximise theta (or c'x) over binary x in K
subject to accumulated cuts.

Two exact backends are provided: an exhaustive scan over the binary cube
(``solve_enumerative``) and best-first branch and bound on the continuous
relaxation (``solve_branch_and_bound``).
"""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import ENUM_LIMIT, TOL_FEAS, DimensionError, LinearPolyhedron, binary_vector
from .simplex import linprog_max

THETA = "THETA"


class MasterError(ValueError):
    pass


class UnboundedModelError(MasterError):
    """THETA mode without any optimality cut."""


class ContradictoryFixingsError(MasterError):
    pass


@dataclass(frozen=True)
class Linear:
    """``LINEAR(c)`` objective mode: maximise ``c'x``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=np.float64).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)


class MasterStatus(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class MasterSolution:
    x: np.ndarray
    theta: float
    node_count: int
    status: MasterStatus

    @property
    def optimal(self):
        return self.status is MasterStatus.OPTIMAL


def _normalise_fixings(fixings, n):
    out = {}
    if fixings is None:
        return out
    items = fixings.items() if isinstance(fixings, dict) else fixings
    for i, v in items:
        i, v = int(i), int(v)
        if not 0 <= i < n:
            raise MasterError(f"fixing index {i} outside 0..{n - 1}")
        if v not in (0, 1):
            raise MasterError(f"fixing value must be 0 or 1, got {v}")
        if out.get(i, v) != v:
            raise ContradictoryFixingsError(f"x{i + 1} fixed to both 0 and 1")
        out[i] = v
    return out


@dataclass(frozen=True, eq=False)
class MasterModel:
    polyhedron: LinearPolyhedron
    opt_cuts: tuple
    feas_cuts: tuple
    fixings: dict
    objective_mode: object = THETA

    @property
    def n(self):
        return self.polyhedron.n

    @property
    def theta_mode(self):
        return self.objective_mode == THETA

    def reduced(self, extra=None):
        """Substitute fixings; returns ``(free, x_fixed, G, h, P, p)``.

        The reduced problem is ``max min_k (P z + p)_k`` s.t. ``G z <= h``
        over the free coordinates ``z``.
        """
        n = self.n
        fix = dict(self.fixings)
        if extra:
            fix.update(extra)
        free = np.array([i for i in range(n) if i not in fix], dtype=np.int64)
        xf = np.zeros(n)
        for i, v in fix.items():
            xf[i] = v
        A, b = self.polyhedron.A, self.polyhedron.b
        rows_G, rows_h = [A[:, free]], [b - A @ xf]
        if self.feas_cuts:
            F = np.array([c.a for c in self.feas_cuts])
            r = np.array([c.rhs for c in self.feas_cuts])
            rows_G.append(F[:, free])
            rows_h.append(-(r + F @ xf))
        G = np.vstack(rows_G)
        h = np.concatenate(rows_h)
        if self.theta_mode:
            Pf = np.array([c.a for c in self.opt_cuts])
            pf = np.array([c.rhs for c in self.opt_cuts])
        else:
            Pf = self.objective_mode.c[None, :]
            pf = np.zeros(1)
        P = Pf[:, free]
        p = pf + Pf @ xf
        return free, xf, G, h, P, p

    def objective_at(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.theta_mode:
            return float(min(c.affine(x) for c in self.opt_cuts))
        return float(self.objective_mode.c @ x)

    def satisfied(self, x, tol=TOL_FEAS):
        x = np.asarray(x, dtype=np.float64)
        if not self.polyhedron.contains(x, tol):
            return False
        if any(c.affine(x) > tol for c in self.feas_cuts):
            return False
        return all(int(x[i]) == v for i, v in self.fixings.items())


def build_master(polyhedron, opt_cuts=(), feas_cuts=(), fixings=None, objective_mode=THETA):
    """Validated :class:`MasterModel`."""
    n = polyhedron.n
    opt_cuts, feas_cuts = tuple(opt_cuts), tuple(feas_cuts)
    if objective_mode == THETA:
        if not opt_cuts:
            raise UnboundedModelError("THETA mode needs at least one optimality cut (start from a feasible point)")
    elif isinstance(objective_mode, Linear):
        if objective_mode.c.size != n:
            raise MasterError(f"objective has {objective_mode.c.size} coefficients, expected {n}")
    else:
        raise MasterError(f"unknown objective mode {objective_mode!r}")
    for c in opt_cuts:
        if not c.family.is_optimality:
            raise MasterError(f"{c.family.value} cut given as an optimality cut")
    for c in feas_cuts:
        if c.family.is_optimality:
            raise MasterError(f"{c.family.value} cut given as a feasibility cut")
    for c in opt_cuts + feas_cuts:
        if c.a.size != n:
            raise MasterError(f"cut has {c.a.size} coefficients, expected {n}")
    return MasterModel(polyhedron, opt_cuts, feas_cuts, _normalise_fixings(fixings, n), objective_mode)


def _assemble(model, free, xf, z):
    x = xf.copy()
    x[free] = z
    return binary_vector(np.rint(x).astype(np.int8))


_INFEASIBLE = MasterSolution(None, -np.inf, 0, MasterStatus.INFEASIBLE)


def solve_enumerative(model, limit=ENUM_LIMIT):
    """Exact optimum by exhaustive scan; ties go to the lexicographically smallest x."""
    free, xf, G, h, P, p = model.reduced()
    nf = free.size
    if nf > limit:
        raise DimensionError(f"{nf} free variables exceed the enumeration limit {limit}")
    t, _, _ = kernels.scan_max(G, h, P, p, nf, TOL_FEAS)
    nodes = 1 << nf
    if t < 0:
        return MasterSolution(None, -np.inf, nodes, MasterStatus.INFEASIBLE)
    x = _assemble(model, free, xf, kernels.index_to_bits(t, nf))
    return MasterSolution(x, model.objective_at(x), nodes, MasterStatus.OPTIMAL)


def _relax(model, extra=None):
    """Continuous relaxation on the reduced space; ``(z, bound)`` or ``(None, -inf)``."""
    free, xf, G, h, P, p = model.reduced(extra)
    nf = free.size
    if nf == 0:
        if np.all(h >= -TOL_FEAS):
            return free, xf, np.zeros(0), float(np.min(p))
        return free, xf, None, -np.inf
    box = np.eye(nf)
    if model.theta_mode:
        k = P.shape[0]
        # variables (z, theta): theta - P z <= p, G z <= h, z <= 1
        A_ub = np.vstack([
            np.hstack([-P, np.ones((k, 1))]),
            np.hstack([G, np.zeros((G.shape[0], 1))]),
            np.hstack([box, np.zeros((nf, 1))]),
        ])
        b_ub = np.concatenate([p, h, np.ones(nf)])
        c = np.zeros(nf + 1)
        c[-1] = 1.0
        res = linprog_max(c, A_ub, b_ub, free=[nf])
    else:
        res = linprog_max(P[0], np.vstack([G, box]), np.concatenate([h, np.ones(nf)]))
        if res.status == "optimal":
            res.value += float(p[0])
    if res.status != "optimal":
        return free, xf, None, -np.inf
    return free, xf, np.clip(res.x[:nf], 0.0, 1.0), float(res.value)


def lp_relaxation(model):
    """Optimum of the continuous relaxation over ``[0,1]^n``.

    Returns ``(x, bound)``; an infeasible relaxation gives ``(None, -inf)``.
    """
    free, xf, z, bound = _relax(model)
    if z is None:
        return None, -np.inf
    x = xf.copy()
    x[free] = z
    return x, bound


def _tol(v):
    return 1e-9 * max(1.0, abs(v))


def solve_branch_and_bound(model, max_nodes=1_000_000):
    """Best-first branch and bound on the LP bound.

    Branches on the most fractional variable (lowest index on ties); among
    equal bounds the deepest node is expanded first.
    """
    counter = itertools.count()
    best_x, best_val = None, -np.inf
    nodes = 0
    heap = [(-np.inf, 0, next(counter), {})]  # root bound evaluated lazily
    while heap:
        negb, negdepth, _, extra = heapq.heappop(heap)
        if best_x is not None and -negb <= best_val + _tol(best_val):
            break  # every remaining node is bounded by this one
        nodes += 1
        if nodes > max_nodes:
            raise RuntimeError(f"branch and bound exceeded {max_nodes} nodes")
        free, xf, z, bound = _relax(model, extra)
        if z is None:
            continue
        if best_x is not None and bound <= best_val + _tol(best_val):
            continue
        frac = np.abs(z - np.rint(z))
        x = xf.copy()
        x[free] = np.rint(z)
        if frac.size == 0 or frac.max() <= 1e-9:
            if model.satisfied(x):
                val = model.objective_at(x)
                if val > best_val:
                    best_x, best_val = binary_vector(x.astype(np.int8)), val
                continue
            if frac.size == 0 or frac.max() == 0.0:
                continue
        j = int(free[int(np.argmax(frac))])
        for v in (1, 0):
            child = dict(extra)
            child[j] = v
            heapq.heappush(heap, (-bound, negdepth - 1, next(counter), child))
    if best_x is None:
        return MasterSolution(None, -np.inf, nodes, MasterStatus.INFEASIBLE)
    return MasterSolution(best_x, best_val, nodes, MasterStatus.OPTIMAL)


def solve(model, method="enum", limit=ENUM_LIMIT):
    if method == "enum":
        return solve_enumerative(model, limit)
    if method == "bnb":
        return solve_branch_and_bound(model)
    raise MasterError(f"unknown master method {method!r}")


def _fmt_terms(coefs, names):
    parts = []
    for a, name in zip(coefs, names):
        if a == 0:
            continue
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {abs(float(a))!r} {name}")
    if not parts:
        return "0 " + names[0] if names else "0"
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[1:]


def export_lp(model):
    """The model in the textual LP interchange format."""
    n = model.n
    xs = [f"x{i + 1}" for i in range(n)]
    out = ["\\ bincut master model", "Maximize"]
    if model.theta_mode:
        out.append(" obj: theta")
    else:
        out.append(" obj: " + _fmt_terms(model.objective_mode.c, xs))
    out.append("Subject To")
    k = 0
    for a, b in zip(model.polyhedron.A, model.polyhedron.b):
        k += 1
        out.append(f" r{k}: {_fmt_terms(a, xs)} <= {float(b)!r}")
    for c in model.opt_cuts:
        k += 1
        out.append(f" r{k}: {_fmt_terms(np.r_[1.0, -c.a], ['theta'] + xs)} <= {c.rhs!r}")
    for c in model.feas_cuts:
        k += 1
        out.append(f" r{k}: {_fmt_terms(c.a, xs)} <= {-c.rhs!r}")
    out.append("Bounds")
    if model.theta_mode:
        out.append(" theta free")
    for i, v in sorted(model.fixings.items()):
        out.append(f" {xs[i]} = {v}")
    out.append("Binaries")
    out.append(" " + " ".join(xs))
    out.append("End")
    return "\n".join(out) + "\n"


__all__ = [
    "THETA", "Linear", "MasterModel", "MasterSolution", "MasterStatus", "MasterError",
    "UnboundedModelError", "ContradictoryFixingsError", "build_master", "solve_enumerative",
    "solve_branch_and_bound", "lp_relaxation", "solve", "export_lp",
]
