"""Problem definition, point classification and desk-scale enumeration."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels

TOL_FEAS = 1e-9
TOL_TIE = 1e-9
ENUM_LIMIT = 24


class DimensionError(ValueError):
    """Raised when an exhaustive scan is requested above the size limit."""


def binary_vector(bits, n=None):
    """Validated read-only int8 array of zeros and ones."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits.strip()]
    x = np.asarray(bits)
    if x.ndim != 1:
        raise ValueError("a binary vector must be one-dimensional")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError(f"entries must be 0 or 1, got {x.tolist()}")
    if n is not None and x.size != n:
        raise ValueError(f"expected length {n}, got {x.size}")
    x = x.astype(np.int8)
    x.setflags(write=False)
    return x


def bits_str(x):
    return "".join(str(int(v)) for v in x)


@dataclass(frozen=True, eq=False)
class LinearPolyhedron:
    """``{x in [0,1]^n : A x <= b}``."""

    A: np.ndarray
    b: np.ndarray

    def __init__(self, A, b, n=None):
        A = np.array(A, dtype=np.float64)
        b = np.array(b, dtype=np.float64).reshape(-1)
        if A.size == 0:
            A = np.zeros((0, n if n is not None else (A.shape[1] if A.ndim == 2 else 0)))
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def box(cls, n):
        return cls(np.zeros((0, n)), np.zeros(0), n=n)

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def rows(self):
        return self.A.shape[0]

    def contains(self, x, tol=TOL_FEAS):
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(self.A @ x <= self.b + tol)) if self.rows else True

    def __eq__(self, other):
        return (isinstance(other, LinearPolyhedron) and np.array_equal(self.A, other.A)
                and np.array_equal(self.b, other.b))


@dataclass(frozen=True, eq=True)
class Problem:
    """``max f(x)`` s.t. ``x in K``, ``g_j(x) <= 0``, ``x`` binary."""

    n: int
    objective: object
    constraints: tuple = ()
    polyhedron: LinearPolyhedron = None

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.polyhedron is None:
            object.__setattr__(self, "polyhedron", LinearPolyhedron.box(self.n))

    @property
    def m(self):
        return len(self.constraints)

    def with_functions(self, objective, constraints):
        return Problem(self.n, objective, tuple(constraints), self.polyhedron)

    def constraint_values(self, x):
        return np.array([g(x) for g in self.constraints], dtype=np.float64)

    def constraint_matrix(self, X):
        """``g_j`` evaluated on each row of ``X`` (shape ``len(X) x m``)."""
        X = np.asarray(X, dtype=np.float64)
        if not self.constraints:
            return np.zeros((X.shape[0], 0))
        return np.column_stack([g.values(X) for g in self.constraints])


class Status(str, enum.Enum):
    FEASIBLE_C = "FEASIBLE_C"
    INFEASIBLE_CBAR = "INFEASIBLE_CBAR"


@dataclass(frozen=True)
class Classification:
    status: Status
    max_violation: float
    active_set: tuple = ()
    linear_violation: bool = False

    @property
    def feasible(self):
        return self.status is Status.FEASIBLE_C


def active_set(values, tol_tie=TOL_TIE):
    """Indices attaining the maximum of ``values`` (relative tie tolerance)."""
    if len(values) == 0:
        return ()
    top = float(np.max(values))
    slack = tol_tie * max(1.0, abs(top))
    return tuple(int(j) for j in np.flatnonzero(np.asarray(values) >= top - slack))


def classify_point(problem, x, tol_feas=TOL_FEAS, tol_tie=TOL_TIE):
    """Place ``x`` in C (feasible) or C-bar (infeasible).

    A point outside ``K`` is reported as infeasible with
    ``linear_violation=True``; the cutting-plane loops never generate one.
    """
    x = binary_vector(x, problem.n)
    gv = problem.constraint_values(x)
    top = float(gv.max()) if gv.size else -np.inf
    linear_bad = not problem.polyhedron.contains(x)
    ok = (not linear_bad) and top <= tol_feas
    return Classification(
        Status.FEASIBLE_C if ok else Status.INFEASIBLE_CBAR,
        top,
        active_set(gv, tol_tie),
        linear_bad,
    )


def enumerate_binary_points(polyhedron, limit=ENUM_LIMIT):
    """All binary points of the polyhedron, lexicographically ordered."""
    n = polyhedron.n
    if n > limit:
        raise DimensionError(f"n={n} exceeds the enumeration limit {limit}")
    mask = kernels.feasible_mask(polyhedron.A, polyhedron.b, n, TOL_FEAS)
    return kernels.indices_to_bits(np.flatnonzero(mask), n)


def split_points(problem, points, tol_feas=TOL_FEAS):
    """Split points of ``K`` into ``(C, C_bar, g_values)``."""
    G = problem.constraint_matrix(points)
    ok = G.max(axis=1) <= tol_feas if G.shape[1] else np.ones(len(points), dtype=bool)
    return points[ok], points[~ok], G[~ok]


@dataclass
class ValidationReport:
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.diagnostics

    def __str__(self):
        return "valid" if self.ok else "; ".join(self.diagnostics)


def validate_problem(problem, limit=ENUM_LIMIT):
    """Structured diagnostics; never raises."""
    rep = ValidationReport()
    n = problem.n
    P = problem.polyhedron
    if P.A.ndim != 2 or P.A.shape[1] != n:
        rep.diagnostics.append(f"dimension mismatch: A has {P.A.shape[-1]} columns, expected {n}")
    if P.b.size != P.A.shape[0]:
        rep.diagnostics.append(f"dimension mismatch: b has {P.b.size} entries for {P.A.shape[0]} rows")
    if not (np.all(np.isfinite(P.A)) and np.all(np.isfinite(P.b))):
        rep.diagnostics.append("non-finite coefficients in the linear constraints")
    for name, fn in [("objective", problem.objective)] + [
            (f"constraint {j + 1}", g) for j, g in enumerate(problem.constraints)]:
        if getattr(fn, "n", None) != n:
            rep.diagnostics.append(f"dimension mismatch: {name} takes {getattr(fn, 'n', '?')} variables")
        elif hasattr(fn, "Q") and not (np.all(np.isfinite(fn.Q)) and np.all(np.isfinite(fn.q))):
            rep.diagnostics.append(f"non-finite coefficients in {name}")
    if rep.ok and n <= limit:
        if enumerate_binary_points(P, limit).shape[0] == 0:
            rep.diagnostics.append("empty feasible region: no binary point satisfies A x <= b")
    return rep
