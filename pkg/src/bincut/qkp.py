"""Quadratic knapsack instances with unit weights.

``max 0.5 x'Qx + q'x``  s.t.  ``sum(x) <= m`` (inequality form) or
``sum(x) == m`` (equality form), ``x`` binary, where ``Q`` is a squared
Euclidean distance matrix and therefore conditionally negative definite.

Instances are drawn with numpy's PCG64 generator (``default_rng(seed)``):
``s`` in 1..10, point coordinates and ``q`` entries integers in 1..10000,
capacity ``m`` in 2..n, in that order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .expr import Quadratic
from .linalg import jacobi_eigenvalues
from .model import LinearPolyhedron, Problem, binary_vector


class Form(str, enum.Enum):
    INEQUALITY = "INEQUALITY"
    EQUALITY = "EQUALITY"


class QkpFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QkpInstance:
    Q: np.ndarray
    q: np.ndarray
    m: int
    s: int = None
    points: np.ndarray = None
    seed: int = None

    def __post_init__(self):
        Q = np.array(self.Q, dtype=np.float64)
        q = np.array(self.q, dtype=np.float64).reshape(-1)
        if Q.shape != (q.size, q.size):
            raise ValueError(f"Q has shape {Q.shape}, expected {(q.size, q.size)}")
        if not np.array_equal(Q, Q.T):
            raise ValueError("Q must be symmetric")
        if not 2 <= int(self.m) <= q.size:
            raise ValueError(f"capacity must lie in 2..{q.size}, got {self.m}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "m", int(self.m))
        if self.points is not None:
            object.__setattr__(self, "points", np.array(self.points, dtype=np.float64).reshape(q.size, -1))

    @property
    def n(self):
        return self.q.size

    def __eq__(self, other):
        if not isinstance(other, QkpInstance):
            return NotImplemented
        same_pts = (self.points is None and other.points is None) or (
            self.points is not None and other.points is not None
            and np.array_equal(self.points, other.points))
        return (np.array_equal(self.Q, other.Q) and np.array_equal(self.q, other.q)
                and self.m == other.m and self.s == other.s and self.seed == other.seed and same_pts)


def distance_matrix(points):
    V = np.asarray(points, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    sq = (V * V).sum(axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * V @ V.T
    D = np.rint(D) if np.all(V == np.rint(V)) else np.maximum(D, 0.0)
    np.fill_diagonal(D, 0.0)
    return 0.5 * (D + D.T)


def instance_from_points(points, q, m, seed=None):
    V = np.asarray(points, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    return QkpInstance(distance_matrix(V), q, m, V.shape[1], V, seed)


def generate_instance(n, seed):
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    s = int(rng.integers(1, 11))
    V = rng.integers(1, 10001, size=(n, s))
    q = rng.integers(1, 10001, size=n)
    m = int(rng.integers(2, n + 1))
    return instance_from_points(V, q, m, seed)


def cnd_check(Q, trials=100, seed=0):
    """Exactly one clearly positive eigenvalue and ``x'Qx <= 0`` on random
    sum-zero vectors."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.array_equal(Q, Q.T):
        raise ValueError("Q must be a symmetric square matrix")
    norm = float(np.linalg.norm(Q))
    if norm == 0:
        return False
    ev = jacobi_eigenvalues(Q, tol=1e-10)
    if int((ev > 1e-8 * norm).sum()) != 1:
        return False
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        x = rng.standard_normal(Q.shape[0])
        x -= x.mean()
        if x @ Q @ x > 1e-6 * norm * (x @ x):
            return False
    return True


def qkp_to_problem(instance, form=Form.INEQUALITY):
    form = Form(form)
    n = instance.n
    f = Quadratic(instance.Q, instance.q)
    ones = np.ones((1, n))
    if form is Form.INEQUALITY:
        K = LinearPolyhedron(ones, [instance.m])
    else:
        K = LinearPolyhedron(np.vstack([ones, -ones]), [instance.m, -instance.m])
    return Problem(n, f, (), K)


def greedy_start(instance):
    """The ``m`` items with the largest ``q`` (lower index first on ties)."""
    order = sorted(range(instance.n), key=lambda i: (-instance.q[i], i))
    x = np.zeros(instance.n, dtype=np.int8)
    x[order[:instance.m]] = 1
    return binary_vector(x)


def optimality_gap(UB, LB):
    """``(UB - LB) / UB`` in percent."""
    if not UB > 0:
        raise ValueError(f"gap undefined for nonpositive UB={UB}")
    return (UB - LB) / UB * 100.0


# -- serialisation ------------------------------------------------------------

def _num(v):
    v = float(v)
    if v == int(v) and abs(v) < 2 ** 53:
        return str(int(v))
    return repr(v)


def dumps(instance):
    out = [f"N {instance.n}", f"M {instance.m}"]
    if instance.seed is not None:
        out.append(f"SEED {instance.seed}")
    if instance.points is not None:
        out.append(f"S {instance.points.shape[1]}")
        out.append("POINTS")
        out += [" ".join(_num(v) for v in row) for row in instance.points]
    out.append("Q")
    out += [" ".join(_num(v) for v in row) for row in instance.Q]
    out.append("q")
    out.append(" ".join(_num(v) for v in instance.q))
    return "\n".join(out) + "\n"


def loads(text):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    head, i = {}, 0
    n = None
    pts = Q = q = None

    def rows(start, count, what):
        if start + count > len(lines):
            raise QkpFormatError(f"section {what} is truncated")
        try:
            return np.array([[float(t) for t in lines[start + r].split()] for r in range(count)])
        except ValueError as exc:
            raise QkpFormatError(f"section {what}: {exc}") from None

    while i < len(lines):
        key, _, rest = lines[i].partition(" ")
        if key in ("N", "M", "SEED", "S"):
            try:
                head[key] = int(rest)
            except ValueError:
                raise QkpFormatError(f"line '{lines[i]}': expected an integer") from None
            n = head.get("N", n)
            i += 1
        elif key in ("POINTS", "Q", "q"):
            if n is None:
                raise QkpFormatError(f"section {key} before N")
            count = 1 if key == "q" else n
            block = rows(i + 1, count, key)
            if key == "POINTS":
                pts = block
            elif key == "Q":
                Q = block
            else:
                q = block.reshape(-1)
            i += 1 + count
        else:
            raise QkpFormatError(f"unknown section '{key}'")
    for need in ("N", "M"):
        if need not in head:
            raise QkpFormatError(f"missing section {need}")
    if Q is None or q is None:
        raise QkpFormatError("missing section Q or q")
    if Q.shape != (n, n) or q.size != n:
        raise QkpFormatError(f"Q/q dimensions do not match N={n}")
    s = head.get("S", pts.shape[1] if pts is not None else None)
    return QkpInstance(Q, q, head["M"], s, pts, head.get("SEED"))


def is_qkp_text(text):
    for ln in text.splitlines():
        ln = ln.strip()
        if ln and not ln.startswith("#"):
            return ln.split()[0] == "N"
    return False
