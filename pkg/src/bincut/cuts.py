"""Cut families.

Every cut is stored as ``(a, rhs)``. Optimality families read
``theta <= a'x + rhs``; feasibility families read ``a'x + rhs <= 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import TOL_TIE, active_set, binary_vector


class Family(str, enum.Enum):
    OPT_TANGENT = "OPT_TANGENT"
    FEAS_TANGENT = "FEAS_TANGENT"
    OPT_SHIFTED = "OPT_SHIFTED"
    FEAS_SHIFTED = "FEAS_SHIFTED"
    OPT_LIPSCHITZ = "OPT_LIPSCHITZ"
    FEAS_LIPSCHITZ = "FEAS_LIPSCHITZ"

    @property
    def is_optimality(self):
        return self.name.startswith("OPT")


class ActiveSetError(ValueError):
    """A feasibility cut was requested for a constraint outside J(y)."""


@dataclass(frozen=True, eq=False)
class Cut:
    family: Family
    a: np.ndarray
    rhs: float
    source_point: np.ndarray = None
    source_constraint: int = None

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64)
        if not (np.all(np.isfinite(a)) and np.isfinite(self.rhs)):
            raise ValueError("cut coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "rhs", float(self.rhs))

    def affine(self, x):
        return float(self.a @ np.asarray(x, dtype=np.float64) + self.rhs)

    def same_plane(self, other):
        return self.family == other.family and self.rhs == other.rhs and np.array_equal(self.a, other.a)


def _grad(fn, y):
    g = np.asarray(fn.gradient(y), dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient is not finite")
    return g


def optimality_cut(f, y):
    """Tangent plane of ``f`` at ``y``: ``theta <= f(y) + <grad f(y), x - y>``."""
    y = binary_vector(y, f.n)
    g = _grad(f, y)
    return Cut(Family.OPT_TANGENT, g, f(y) - g @ y, y)


def _check_active(j, y, constraints):
    if constraints is None:
        return
    values = [gt(y) for gt in constraints]
    if j not in active_set(values, TOL_TIE):
        raise ActiveSetError(f"constraint {j + 1} is not in the active set J(y) at y={y.tolist()}")


def feasibility_cut(g, j, y, constraints=None):
    """Tangent plane of ``g_j`` at ``y``; excludes ``y`` whenever ``g_j(y) > 0``.

    When ``constraints`` (all ``g_t``) is given, ``j`` must belong to J(y).
    """
    y = binary_vector(y, g.n)
    _check_active(j, y, constraints)
    d = _grad(g, y)
    return Cut(Family.FEAS_TANGENT, d, g(y) - d @ y, y, j)


def shifted_optimality_cut(f, y):
    y = binary_vector(y, f.n)
    g = _grad(f, y)
    return Cut(Family.OPT_SHIFTED, g, -(g @ y), y)


def shifted_feasibility_cut(g, j, y, eps, constraints=None):
    if not eps > 0:
        raise ValueError(f"shift must be positive, got {eps}")
    y = binary_vector(y, g.n)
    _check_active(j, y, constraints)
    d = _grad(g, y)
    return Cut(Family.FEAS_SHIFTED, d, eps - d @ y, y, j)


def lipschitz_cut(fn, y, L, side, j=None):
    """Tangent plus the binary linearisation of ``L/2 ||x - y||^2``.

    On binaries ``||x - y||^2 = <e - 2y, x> + ||y||^2``. ``side`` is
    ``"OBJECTIVE"`` (added to the tangent) or ``"CONSTRAINT"`` (subtracted).
    """
    if not L > 0:
        raise ValueError(f"Lipschitz constant must be positive, got {L}")
    y = binary_vector(y, fn.n)
    yf = y.astype(np.float64)
    d = _grad(fn, y)
    quad_a = 0.5 * L * (1.0 - 2.0 * yf)
    quad_rhs = 0.5 * L * float(yf @ yf)
    base = fn(y) - d @ yf
    side = side.upper()
    if side == "OBJECTIVE":
        return Cut(Family.OPT_LIPSCHITZ, d + quad_a, base + quad_rhs, y)
    if side == "CONSTRAINT":
        return Cut(Family.FEAS_LIPSCHITZ, d - quad_a, base - quad_rhs, y, j)
    raise ValueError(f"side must be OBJECTIVE or CONSTRAINT, got {side!r}")


def evaluate_cut(cut, x, theta=None):
    """Slack of ``cut`` at ``(x, theta)``.

    Optimality cuts: ``a'x + rhs - theta`` (satisfied when >= 0).
    Feasibility cuts: ``a'x + rhs`` (satisfied when <= 0).
    """
    value = cut.affine(x)
    if cut.family.is_optimality:
        if theta is None:
            raise ValueError("theta is required for an optimality cut")
        return value - float(theta)
    return value
