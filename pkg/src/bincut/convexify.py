"""Penalty convexification and the Lipschitz-envelope cut factory.

On binary points ``x_i**2 == x_i``, so subtracting ``mu * sum(x_i**2 - x_i)``
from ``f`` (or adding ``lambda_j * sum(...)`` to ``g_j``) leaves every value
unchanged while shifting the Hessian by ``-2 mu I`` (``+2 lambda_j I``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import expr as E
from .cuts import lipschitz_cut


class Provenance(str, enum.Enum):
    USER = "USER"
    AUTO_ROW_SUM = "AUTO_ROW_SUM"


class UnsupportedFunctionError(ValueError):
    """No automatic curvature bound exists for this function."""


def _mask(n, support):
    if support is None:
        return np.ones(n, dtype=bool)
    m = np.zeros(n, dtype=bool)
    m[list(support)] = True
    return m


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty parameters with per-function variable masks.

    ``mu_mask`` / ``lambda_masks`` select the variables that receive the
    penalty term; ``None`` means all of them.
    """

    mu: float = 0.0
    lambdas: tuple = ()
    mu_provenance: Provenance = Provenance.USER
    lambda_provenance: tuple = ()
    mu_mask: tuple = None
    lambda_masks: tuple = ()

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        if self.mu < 0 or any(v < 0 for v in lam):
            raise ValueError("penalty parameters must be nonnegative")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "lambdas", lam)
        if not self.lambda_provenance:
            object.__setattr__(self, "lambda_provenance", (Provenance.USER,) * len(lam))
        if not self.lambda_masks:
            object.__setattr__(self, "lambda_masks", (None,) * len(lam))

    @property
    def m(self):
        return len(self.lambdas)


def penalise(fn, weight, support=None):
    """``fn + weight * sum_{i in support} (x_i**2 - x_i)``."""
    if weight == 0:
        return fn
    mask = _mask(fn.n, support).astype(np.float64)
    if isinstance(fn, E.Quadratic):
        return E.Quadratic(fn.Q + 2.0 * weight * np.diag(mask), fn.q - weight * mask, fn.c)
    term = E.ZERO
    for i in np.flatnonzero(mask):
        term = E.add(term, E.sub(E.Pow(E.Var(int(i)), 2), E.Var(int(i))))
    return E.Expression(E.add(fn.tree, E.mul(E.Const(float(weight)), term)), fn.n)


def penalty_transform(problem, config):
    """The problem with ``f_mu`` and ``g_{j,lambda_j}``; equal on binaries."""
    if config.m != problem.m:
        raise ValueError(f"config has {config.m} constraint penalties, problem has {problem.m} constraints")
    f = penalise(problem.objective, -config.mu, config.mu_mask)
    gs = [penalise(g, lam, mask) for g, lam, mask in zip(problem.constraints, config.lambdas, config.lambda_masks)]
    return problem.with_functions(f, gs)


def _auto(fn, user_bound=None):
    support = E.hessian_support(fn)
    if user_bound is not None:
        return 0.5 * max(float(user_bound), 0.0), Provenance.USER, support
    if support is None:
        raise UnsupportedFunctionError(
            f"no automatic Hessian bound for {fn!r}; supply one explicitly")
    return 0.5 * max(E.hessian_row_sum_bound(fn), 0.0), Provenance.AUTO_ROW_SUM, support


def auto_penalties(problem, bounds=None):
    """Half the absolute row-sum Hessian bound for ``f`` and each ``g_j``.

    ``bounds`` optionally supplies Hessian bounds, ``[bound_f, bound_g1, ...]``
    with ``None`` entries computed automatically. Only variables in the
    Hessian support are penalised.
    """
    bounds = list(bounds) if bounds is not None else [None] * (problem.m + 1)
    if len(bounds) != problem.m + 1:
        raise ValueError(f"expected {problem.m + 1} bounds, got {len(bounds)}")
    mu, mu_prov, mu_sup = _auto(problem.objective, bounds[0])
    lams, provs, masks = [], [], []
    for g, b in zip(problem.constraints, bounds[1:]):
        lam, prov, sup = _auto(g, b)
        lams.append(lam)
        provs.append(prov)
        masks.append(sup)
    return PenaltyConfig(mu, tuple(lams), mu_prov, tuple(provs), mu_sup, tuple(masks))


def row_sum_constants(problem):
    """Row-sum curvature bounds ``(L_f, [L_g1, ...])``; None where unsupported."""

    def bound(fn):
        try:
            return E.hessian_row_sum_bound(fn)
        except E.UnsupportedNodeError:
            return None

    return bound(problem.objective), [bound(g) for g in problem.constraints]


class LipschitzCuts:
    """Cut factory for the Lipschitz-envelope master (linearised ``LP_L``).

    Plugged into Algorithm 1 in place of the tangent factory.
    """

    def __init__(self, problem, L_f, L_g):
        L_g = [float(v) for v in L_g]
        if len(L_g) != problem.m:
            raise ValueError(f"expected {problem.m} constraint constants, got {len(L_g)}")
        if not L_f > 0 or any(not v > 0 for v in L_g):
            raise ValueError("Lipschitz constants must be positive")
        self.problem = problem
        self.L_f = float(L_f)
        self.L_g = L_g

    def optimality(self, y):
        return lipschitz_cut(self.problem.objective, y, self.L_f, "OBJECTIVE")

    def feasibility(self, j, y):
        return lipschitz_cut(self.problem.constraints[j], y, self.L_g[j], "CONSTRAINT", j)


def lipschitz_linearization(problem, L_f, L_g=()):
    return LipschitzCuts(problem, L_f, L_g)
