"""The cutting-plane loops.

``solve_algorithm1``  tangent cuts, feasible start, UB/LB gap test.
``solve_algorithm2``  linear objective, feasibility cuts only, no start needed.
``solve_algorithm3``  shifted cuts, stops when a visited point repeats.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .cuts import optimality_cut, feasibility_cut, shifted_optimality_cut, shifted_feasibility_cut
from .master import Linear, build_master, solve as solve_master
from .model import ENUM_LIMIT, TOL_FEAS, TOL_TIE, binary_vector, bits_str, classify_point


class EngineError(ValueError):
    pass


class InfeasibleStartError(EngineError):
    pass


class NonlinearObjectiveError(EngineError):
    pass


class MasterInfeasibleError(EngineError):
    pass


class SolveStatus(str, enum.Enum):
    OPTIMAL_GAP_CLOSED = "OPTIMAL_GAP_CLOSED"
    REPEATED_POINT = "REPEATED_POINT"
    ITERATION_LIMIT = "ITERATION_LIMIT"
    STATIONARY_STOP = "STATIONARY_STOP"


class Decision(str, enum.Enum):
    STOP_OPTIMAL = "STOP_OPTIMAL"
    CONTINUE = "CONTINUE"


@dataclass
class SolveOptions:
    master: str = "enum"          # "enum" or "bnb"
    max_iter: int = None          # default 10 * 2**min(n, 20)
    eps_stop: float = 0.0
    fixing: bool = False
    stationary_stop: bool = False
    cut_factory: object = None    # default: tangent (or shifted) cuts
    tol_feas: float = TOL_FEAS
    tol_tie: float = TOL_TIE
    enum_limit: int = ENUM_LIMIT

    def iteration_limit(self, n):
        return self.max_iter if self.max_iter is not None else 10 * 2 ** min(n, 20)


@dataclass
class TraceRecord:
    k: int
    x: np.ndarray
    theta: float
    feasible: bool
    max_violation: float
    cut_family: str
    LB: float
    UB: float
    grad_norm: float
    f_value: float = float("nan")
    active_set: tuple = ()
    nodes: int = 0


@dataclass
class SolveState:
    k: int = 0
    C: list = field(default_factory=list)
    Cbar: list = field(default_factory=list)
    LB: float = -math.inf
    UB: float = math.inf
    incumbent: np.ndarray = None
    opt_cuts: list = field(default_factory=list)
    feas_cuts: list = field(default_factory=list)
    fixings: dict = field(default_factory=dict)
    fixing_log: list = field(default_factory=list)   # (k, index, value)
    trace: list = field(default_factory=list)
    start: np.ndarray = None
    diagnostics: list = field(default_factory=list)
    master_nodes: int = 0

    def visited(self, x):
        key = bits_str(x)
        if key in self._c_keys:
            return "C"
        if key in self._cbar_keys:
            return "CBAR"
        return None

    def add_point(self, x, feasible):
        (self.C if feasible else self.Cbar).append(x)
        (self._c_keys if feasible else self._cbar_keys).add(bits_str(x))

    def __post_init__(self):
        self._c_keys, self._cbar_keys = set(), set()


@dataclass
class SolveResult:
    status: SolveStatus
    best_x: np.ndarray
    best_value: float
    iterations: int
    state: SolveState
    certificate: object = None
    algorithm: str = ""

    @property
    def gap(self):
        return self.state.UB - self.state.LB


class TangentCuts:
    def __init__(self, problem):
        self.problem = problem

    def optimality(self, y):
        return optimality_cut(self.problem.objective, y)

    def feasibility(self, j, y):
        return feasibility_cut(self.problem.constraints[j], j, y)


class ShiftedCuts:
    def __init__(self, problem, eps):
        self.problem = problem
        self.eps = eps

    def optimality(self, y):
        return shifted_optimality_cut(self.problem.objective, y)

    def feasibility(self, j, y):
        return shifted_feasibility_cut(self.problem.constraints[j], j, y, self.eps)


def _gap_closed(UB, LB, eps):
    return UB - LB <= eps + 1e-9 * max(1.0, abs(UB))


def apply_variable_fixing(xk, grad, margin=1e-9):
    """Coordinates whose flip would make the optimality cut at ``xk`` negative.

    Returns ``{index: value}`` (0-based indices).
    """
    x = np.asarray(xk)
    g = np.asarray(grad, dtype=np.float64)
    s1p = (x == 1) & (g > 0)
    s0p = (x == 0) & (g > 0)
    s1m = (x == 1) & (g < 0)
    s0m = (x == 0) & (g < 0)
    thr = float(g[s0p].sum() - g[s1m].sum())
    out = {}
    for i in np.flatnonzero(s1p):
        if g[i] > thr + margin:
            out[int(i)] = 1
    for i in np.flatnonzero(s0m):
        if g[i] < -thr - margin:
            out[int(i)] = 0
    return out


def stationarity_early_stop(problem, xk, C_so_far=None, gap_hint=None, tol=1e-12):
    """``STOP_OPTIMAL`` when ``grad f(xk) == 0`` or, given ``(M1, M2)``,
    when ``||grad f(xk)|| < (M1 - M2) / sqrt(n)``."""
    grad = np.asarray(problem.objective.gradient(binary_vector(xk, problem.n)), dtype=np.float64)
    norm = float(np.linalg.norm(grad))
    if norm <= tol:
        return Decision.STOP_OPTIMAL
    if gap_hint is not None:
        M1, M2 = gap_hint
        if M1 > M2 and norm < (M1 - M2) / math.sqrt(problem.n):
            return Decision.STOP_OPTIMAL
    return Decision.CONTINUE


def _master(problem, state, options, objective_mode=None):
    kw = {} if objective_mode is None else {"objective_mode": objective_mode}
    model = build_master(problem.polyhedron, state.opt_cuts, state.feas_cuts, state.fixings, **kw)
    sol = solve_master(model, options.master, options.enum_limit)
    state.master_nodes += sol.node_count
    return sol


def _grad_norm(problem, x):
    return float(np.linalg.norm(problem.objective.gradient(x)))


def _merge_fixings(state, new, k):
    for i, v in sorted(new.items()):
        old = state.fixings.get(i)
        if old is None:
            state.fixings[i] = v
            state.fixing_log.append((k, i, v))
        elif old != v:
            state.diagnostics.append(f"k={k}: conflicting fixing for x{i + 1} ignored")


def _start(problem, x0, options):
    x0 = binary_vector(x0, problem.n)
    cl = classify_point(problem, x0, options.tol_feas, options.tol_tie)
    if not cl.feasible:
        why = "violates A x <= b" if cl.linear_violation else f"max g_j = {cl.max_violation:.6g}"
        raise InfeasibleStartError(f"start point {bits_str(x0)} is infeasible ({why})")
    return x0


def _record(state, k, x, theta, cl, family, problem, nodes):
    state.trace.append(TraceRecord(
        k, x, float(theta), cl.feasible, float(cl.max_violation), family,
        state.LB, state.UB, _grad_norm(problem, x), float(problem.objective(x)),
        cl.active_set, nodes))


def solve_algorithm1(problem, x0, options=None):
    """Cutting-plane loop with tangent (or factory-supplied) cuts.

    Condition 1 makes the returned value optimal; otherwise the result is a
    heuristic lower bound.
    """
    options = options or SolveOptions()
    factory = options.cut_factory or TangentCuts(problem)
    x0 = _start(problem, x0, options)
    state = SolveState(start=x0)
    state.add_point(x0, True)
    state.LB = float(problem.objective(x0))
    state.incumbent = x0
    state.opt_cuts.append(factory.optimality(x0))
    if options.fixing:
        _merge_fixings(state, apply_variable_fixing(x0, problem.objective.gradient(x0)), 0)

    status = SolveStatus.ITERATION_LIMIT
    for k in range(1, options.iteration_limit(problem.n) + 1):
        state.k = k
        sol = _master(problem, state, options)
        if not sol.optimal:
            state.diagnostics.append(
                f"k={k}: master infeasible; accumulated cuts removed every feasible point "
                "(Condition 1 fails on this instance)")
            break
        x, theta = sol.x, sol.theta
        cl = classify_point(problem, x, options.tol_feas, options.tol_tie)
        state.UB = theta
        seen = state.visited(x)
        if seen == "C":
            family = "NONE"
        elif seen == "CBAR":
            state.diagnostics.append(f"k={k}: infeasible point {bits_str(x)} returned twice")
            _record(state, k, x, theta, cl, "NONE", problem, sol.node_count)
            break
        elif not cl.feasible:
            for j in cl.active_set:
                state.feas_cuts.append(factory.feasibility(j, x))
            state.add_point(x, False)
            family = state.feas_cuts[-1].family.value if cl.active_set else "NONE"
        else:
            state.opt_cuts.append(factory.optimality(x))
            state.add_point(x, True)
            fx = float(problem.objective(x))
            if fx > state.LB:
                state.LB, state.incumbent = fx, x
            family = state.opt_cuts[-1].family.value
            if options.fixing:
                _merge_fixings(state, apply_variable_fixing(x, problem.objective.gradient(x)), k)
        _record(state, k, x, theta, cl, family, problem, sol.node_count)
        if _gap_closed(state.UB, state.LB, options.eps_stop):
            status = SolveStatus.OPTIMAL_GAP_CLOSED
            break
        if options.stationary_stop and cl.feasible and \
                stationarity_early_stop(problem, x) is Decision.STOP_OPTIMAL:
            status = SolveStatus.STATIONARY_STOP
            break
    return SolveResult(status, state.incumbent, state.LB, state.k, state, algorithm="cp")


def solve_algorithm2(problem, options=None):
    """Linear objective: maximise over K, cutting off infeasible points until
    the master solution satisfies every ``g_j``."""
    options = options or SolveOptions()
    f = problem.objective
    if not E.is_linear(f):
        raise NonlinearObjectiveError("Algorithm 2 needs a linear objective")
    c, c0 = E.linear_part(f)
    factory = options.cut_factory or TangentCuts(problem)
    state = SolveState()
    status = SolveStatus.ITERATION_LIMIT
    for k in range(1, options.iteration_limit(problem.n) + 1):
        state.k = k
        sol = _master(problem, state, options, Linear(c))
        if not sol.optimal:
            raise MasterInfeasibleError(
                f"k={k}: no binary point of K survives the feasibility cuts (problem infeasible)")
        x = sol.x
        value = float(c @ x + c0)
        cl = classify_point(problem, x, options.tol_feas, options.tol_tie)
        state.UB = value
        if cl.feasible:
            state.add_point(x, True)
            state.LB, state.incumbent = value, x
            _record(state, k, x, value, cl, "NONE", problem, sol.node_count)
            status = SolveStatus.OPTIMAL_GAP_CLOSED
            break
        if state.visited(x) == "CBAR":
            state.diagnostics.append(f"k={k}: infeasible point {bits_str(x)} returned twice")
            _record(state, k, x, value, cl, "NONE", problem, sol.node_count)
            break
        for j in cl.active_set:
            state.feas_cuts.append(factory.feasibility(j, x))
        state.add_point(x, False)
        _record(state, k, x, value, cl, state.feas_cuts[-1].family.value, problem, sol.node_count)
    best = state.LB if state.incumbent is not None else -math.inf
    return SolveResult(status, state.incumbent, best, state.k, state, algorithm="cp-linear")


def solve_algorithm3(problem, x0, eps, options=None, certify=True):
    """Shifted-cut loop; terminates when the master returns a visited point.

    With ``certify`` the KKT multiplier search is run at the returned point
    and attached as ``result.certificate``.
    """
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    options = options or SolveOptions()
    factory = options.cut_factory or ShiftedCuts(problem, eps)
    x0 = _start(problem, x0, options)
    state = SolveState(start=x0)
    state.add_point(x0, True)
    state.LB = float(problem.objective(x0))
    state.incumbent = x0
    state.opt_cuts.append(factory.optimality(x0))

    status = SolveStatus.ITERATION_LIMIT
    for k in range(1, options.iteration_limit(problem.n) + 1):
        state.k = k
        sol = _master(problem, state, options)
        if not sol.optimal:
            state.diagnostics.append(f"k={k}: master infeasible; epsilon exceeds the admissible shift")
            break
        x, theta = sol.x, sol.theta
        cl = classify_point(problem, x, options.tol_feas, options.tol_tie)
        seen = state.visited(x)
        if seen is not None:
            if seen == "CBAR":
                state.diagnostics.append(f"k={k}: infeasible point {bits_str(x)} repeated (CBAR_REPEAT)")
            _record(state, k, x, theta, cl, "NONE", problem, sol.node_count)
            status = SolveStatus.REPEATED_POINT
            break
        if cl.feasible:
            state.opt_cuts.append(factory.optimality(x))
            state.add_point(x, True)
            fx = float(problem.objective(x))
            if fx > state.LB:
                state.LB, state.incumbent = fx, x
            family = state.opt_cuts[-1].family.value
        else:
            for j in cl.active_set:
                state.feas_cuts.append(factory.feasibility(j, x))
            state.add_point(x, False)
            family = state.feas_cuts[-1].family.value
        _record(state, k, x, theta, cl, family, problem, sol.node_count)
    result = SolveResult(status, state.incumbent, state.LB, state.k, state, algorithm="shifted")
    if certify and problem.n <= options.enum_limit:
        from .analysis import kkt_search
        cert = kkt_search(problem, state.incumbent, master=options.master)
        result.certificate = cert
        if cert.passed:
            state.diagnostics.append(
                "certificate: KKT_LP passed with lambda=" + ",".join(f"{v:.6g}" for v in cert.detail["lambda"]))
    return result


TRACE_COLUMNS = ("k", "x_bits", "theta", "feasible", "max_violation", "cut_family", "LB", "UB", "grad_norm")


def _num(v):
    return repr(float(v))


def trace_rows(trace):
    for r in trace:
        yield [r.k, bits_str(r.x), _num(r.theta), int(r.feasible), _num(r.max_violation),
               r.cut_family, _num(r.LB), _num(r.UB), _num(r.grad_norm)]


def write_trace_csv(trace, target):
    """Write the trace to a path or text stream."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="") as fh:
            return write_trace_csv(trace, fh)
    w = csv.writer(target, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    w.writerows(trace_rows(trace))


def trace_csv(trace):
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    return buf.getvalue()
