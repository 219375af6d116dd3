"""Objective and constraint functions.

Two kinds are supported: :class:`Quadratic` (``0.5 x'Qx + q'x + c``, exact
and vectorised) and :class:`Expression`, a parsed syntax tree over
``x1..xn`` differentiated in forward mode with dual numbers.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ['^' ['-'] INT ['^' ...]]      (right-associative)
    atom   := NUMBER | 'x'INT | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := exp | log | sin | cos
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExpressionError", "DomainError", "UnsupportedNodeError",
    "Quadratic", "Expression", "parse_expression", "evaluate", "gradient",
    "hessian_row_sum_bound", "hessian_support", "is_linear", "linear_part",
]

FUNCS = ("exp", "log", "sin", "cos")


class ExpressionError(ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the fault."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(ArithmeticError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class UnsupportedNodeError(ValueError):
    pass


# -- syntax tree -------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Div:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


# Constructors that fold trivial constants so symbolic derivatives stay small
# and exact zeros are recognisable.
def add(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a, k):
    if k == 0:
        return ONE
    if k == 1:
        return a
    if _is_const(a) and (a.value != 0.0 or k > 0):
        return Const(a.value ** k)
    return Pow(a, k)


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            off = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionError(f"unexpected character {text[off]!r}", off)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, n):
        self.toks = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value:
            raise ExpressionError(f"expected {value!r}, found {val or 'end of input'!r}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected token {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            arg = self.unary()
            return Const(-arg.value) if isinstance(arg, Const) else Neg(arg)
        return self.power()

    def exponent(self):
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        kind, val, off = self.take()
        if kind != "num" or not val.isdigit():
            raise ExpressionError("exponent must be an integer literal", off)
        k = sign * int(val)
        if self.peek()[:2] == ("op", "^"):
            self.take()
            k = k ** self.exponent()
            if not isinstance(k, int):
                raise ExpressionError("exponent must be an integer", off)
        return k

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Pow(base, self.exponent())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if val in FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            m = re.fullmatch(r"x(\d+)", val)
            if not m:
                raise ExpressionError(f"unknown identifier {val!r}", off)
            idx = int(m.group(1))
            if idx < 1 or idx > self.n:
                raise ExpressionError(f"variable {val} out of range 1..{self.n}", off)
            return Var(idx - 1)
        raise ExpressionError(f"unexpected token {val or 'end of input'!r}", off)


# -- printing ----------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(float(v))
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_text(node):
    """Render a tree so that parsing the text gives back the same tree."""
    if isinstance(node, Const):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if type(node.arg) in (Add, Sub, Mul, Div, Neg) or isinstance(node.arg, Const):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if not isinstance(node.base, (Var, Call)) or (isinstance(node.base, Const) and node.base.value < 0):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    p = _PREC[type(node)]
    left, right = to_text(node.left), to_text(node.right)
    if type(node.left) in _PREC and _PREC[type(node.left)] < p:
        left = f"({left})"
    # left-associative: a right operand of equal precedence needs parentheses
    if type(node.right) in _PREC and _PREC[type(node.right)] <= p and not isinstance(node.right, (Neg, Pow)):
        right = f"({right})"
    if isinstance(node.right, Neg):
        right = f"({right})"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    return f"{left} {op} {right}"


# -- numeric evaluation --------------------------------------------------------

class Dual:
    """Value plus one directional derivative."""

    __slots__ = ("v", "d")

    def __init__(self, v, d=0.0):
        self.v = v
        self.d = d


def _eval(node, x):
    t = type(node)
    if t is Const:
        return node.value
    if t is Var:
        return x[node.index]
    if t is Add:
        return _eval(node.left, x) + _eval(node.right, x)
    if t is Sub:
        return _eval(node.left, x) - _eval(node.right, x)
    if t is Mul:
        return _eval(node.left, x) * _eval(node.right, x)
    if t is Neg:
        return -_eval(node.arg, x)
    if t is Div:
        den = _eval(node.right, x)
        if den == 0.0:
            raise DomainError("division by zero", node)
        return _eval(node.left, x) / den
    if t is Pow:
        b = _eval(node.base, x)
        if b == 0.0 and node.exponent < 0:
            raise DomainError("zero to a negative power", node)
        return b ** node.exponent
    if t is Call:
        a = _eval(node.arg, x)
        if node.name == "log":
            if a <= 0.0:
                raise DomainError("log of a nonpositive value", node)
            return math.log(a)
        return getattr(math, node.name)(a)
    raise TypeError(f"unknown node {node!r}")


def _eval_dual(node, x, i):
    t = type(node)
    if t is Const:
        return node.value, 0.0
    if t is Var:
        return x[node.index], (1.0 if node.index == i else 0.0)
    if t is Neg:
        v, d = _eval_dual(node.arg, x, i)
        return -v, -d
    if t is Pow:
        v, d = _eval_dual(node.base, x, i)
        k = node.exponent
        if v == 0.0 and k < 0:
            raise DomainError("zero to a negative power", node)
        return v ** k, (k * v ** (k - 1) * d if k != 0 else 0.0)
    if t is Call:
        v, d = _eval_dual(node.arg, x, i)
        if node.name == "exp":
            e = math.exp(v)
            return e, e * d
        if node.name == "log":
            if v <= 0.0:
                raise DomainError("log of a nonpositive value", node)
            return math.log(v), d / v
        if node.name == "sin":
            return math.sin(v), math.cos(v) * d
        return math.cos(v), -math.sin(v) * d
    a, da = _eval_dual(node.left, x, i)
    b, db = _eval_dual(node.right, x, i)
    if t is Add:
        return a + b, da + db
    if t is Sub:
        return a - b, da - db
    if t is Mul:
        return a * b, da * b + a * db
    if t is Div:
        if b == 0.0:
            raise DomainError("division by zero", node)
        return a / b, (da * b - a * db) / (b * b)
    raise TypeError(f"unknown node {node!r}")


# -- symbolic derivatives and interval bounds (polynomial nodes only) ---------

def derivative(node, i):
    """Symbolic partial derivative in ``x_{i+1}``; polynomial nodes only."""
    t = type(node)
    if t is Const:
        return ZERO
    if t is Var:
        return ONE if node.index == i else ZERO
    if t is Neg:
        return neg(derivative(node.arg, i))
    if t is Add:
        return add(derivative(node.left, i), derivative(node.right, i))
    if t is Sub:
        return sub(derivative(node.left, i), derivative(node.right, i))
    if t is Mul:
        return add(mul(derivative(node.left, i), node.right), mul(node.left, derivative(node.right, i)))
    if t is Div:
        if not _is_const(node.right):
            raise UnsupportedNodeError("division by a non-constant is not polynomial")
        if node.right.value == 0.0:
            raise DomainError("division by zero", node)
        return mul(derivative(node.left, i), Const(1.0 / node.right.value))
    if t is Pow:
        if node.exponent < 0:
            raise UnsupportedNodeError("negative powers are not polynomial")
        return mul(mul(Const(float(node.exponent)), power(node.base, node.exponent - 1)),
                   derivative(node.base, i))
    raise UnsupportedNodeError(f"no interval bound for {getattr(node, 'name', t.__name__)}")


def interval(node):
    """Interval enclosure of a polynomial tree over the unit box."""
    t = type(node)
    if t is Const:
        return node.value, node.value
    if t is Var:
        return 0.0, 1.0
    if t is Neg:
        lo, hi = interval(node.arg)
        return -hi, -lo
    if t is Pow:
        lo, hi = interval(node.base)
        k = node.exponent
        if k < 0:
            raise UnsupportedNodeError("negative powers are not polynomial")
        cands = (lo ** k, hi ** k)
        if k % 2 == 0 and lo <= 0.0 <= hi:
            return 0.0, max(cands)
        return min(cands), max(cands)
    if t is Div:
        if not _is_const(node.right):
            raise UnsupportedNodeError("division by a non-constant is not polynomial")
        lo, hi = interval(node.left)
        c = node.right.value
        return (lo / c, hi / c) if c > 0 else (hi / c, lo / c)
    if t in (Add, Sub, Mul):
        a, b = interval(node.left), interval(node.right)
        if t is Add:
            return a[0] + b[0], a[1] + b[1]
        if t is Sub:
            return a[0] - b[1], a[1] - b[0]
        prods = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
        return min(prods), max(prods)
    raise UnsupportedNodeError(f"no interval bound for {getattr(node, 'name', t.__name__)}")


# -- function kinds ------------------------------------------------------------

class Quadratic:
    """``0.5 * x'Qx + q'x + c``; ``Q`` is symmetrised on construction."""

    kind = "QUADRATIC"

    def __init__(self, Q, q, c=0.0):
        Q = np.array(Q, dtype=np.float64)
        q = np.array(q, dtype=np.float64).reshape(-1)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != q.size:
            raise ValueError(f"inconsistent quadratic shapes {Q.shape} and {q.shape}")
        self.Q = 0.5 * (Q + Q.T)
        self.q = q
        self.c = float(c)
        self.Q.setflags(write=False)
        self.q.setflags(write=False)

    @property
    def n(self):
        return self.q.size

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * x @ self.Q @ x + self.q @ x + self.c)

    def values(self, X):
        X = np.asarray(X, dtype=np.float64)
        return 0.5 * np.einsum("ij,jk,ik->i", X, self.Q, X) + X @ self.q + self.c

    def gradient(self, x):
        return self.Q @ np.asarray(x, dtype=np.float64) + self.q

    def __eq__(self, other):
        return (isinstance(other, Quadratic) and np.array_equal(self.Q, other.Q)
                and np.array_equal(self.q, other.q) and self.c == other.c)

    def __repr__(self):
        return f"Quadratic(n={self.n})"


class Expression:
    kind = "EXPRESSION"

    def __init__(self, tree, n):
        self.tree = tree
        self.n = int(n)
        _check_vars(tree, self.n)

    def __call__(self, x):
        return float(_eval(self.tree, np.asarray(x, dtype=np.float64).tolist()))

    def values(self, X):
        return np.array([self(x) for x in np.asarray(X, dtype=np.float64)])

    def gradient(self, x):
        xs = np.asarray(x, dtype=np.float64).tolist()
        g = np.array([_eval_dual(self.tree, xs, i)[1] for i in range(self.n)])
        if not np.all(np.isfinite(g)):
            raise DomainError("non-finite gradient")
        return g

    @property
    def text(self):
        return to_text(self.tree)

    def __eq__(self, other):
        return isinstance(other, Expression) and self.n == other.n and self.tree == other.tree

    def __repr__(self):
        return f"Expression({self.text!r}, n={self.n})"


def _check_vars(node, n):
    if isinstance(node, Var):
        if not 0 <= node.index < n:
            raise ExpressionError(f"variable x{node.index + 1} out of range 1..{n}")
        return
    for child in vars(node).values():
        if not isinstance(child, (int, float, str)):
            _check_vars(child, n)


def parse_expression(text, n):
    return Expression(_Parser(text, n).parse(), n)


def evaluate(fn, x):
    if len(x) != fn.n:
        raise ValueError(f"expected {fn.n} coordinates, got {len(x)}")
    return fn(x)


def gradient(fn, x):
    if len(x) != fn.n:
        raise ValueError(f"expected {fn.n} coordinates, got {len(x)}")
    return fn.gradient(x)


def _hessian_trees(fn):
    first = [derivative(fn.tree, i) for i in range(fn.n)]
    return [[derivative(first[i], j) for j in range(fn.n)] for i in range(fn.n)]


def hessian_abs_bounds(fn):
    """Matrix of ``sup |H_ij|`` over the unit box."""
    if isinstance(fn, Quadratic):
        return np.abs(fn.Q)
    H = np.zeros((fn.n, fn.n))
    for i, row in enumerate(_hessian_trees(fn)):
        for j, tree in enumerate(row):
            lo, hi = interval(tree)
            H[i, j] = max(abs(lo), abs(hi))
    return H


def hessian_row_sum_bound(fn):
    """Upper bound on the largest Hessian eigenvalue over the unit box.

    Absolute row sums (Gershgorin), so the same number also bounds the
    spectral radius. Raises :class:`UnsupportedNodeError` for trees with
    exp/log/sin/cos or non-constant denominators.
    """
    H = hessian_abs_bounds(fn)
    return float(H.sum(axis=1).max()) if H.size else 0.0


def hessian_support(fn):
    """Indices whose Hessian row is not identically zero, or None if unknown."""
    try:
        H = hessian_abs_bounds(fn)
    except UnsupportedNodeError:
        return None
    return tuple(int(i) for i in np.flatnonzero(H.any(axis=1)))


def is_linear(fn):
    if isinstance(fn, Quadratic):
        return not fn.Q.any()
    try:
        return not hessian_abs_bounds(fn).any()
    except UnsupportedNodeError:
        return False


def linear_part(fn):
    """``(c, c0)`` with ``fn(x) = c'x + c0`` for a linear function."""
    if not is_linear(fn):
        raise ValueError("function is not linear")
    z = np.zeros(fn.n)
    return np.asarray(fn.gradient(z), dtype=np.float64), fn(z)


def quadratic_as_expression(fn):
    """Expanded polynomial tree for a :class:`Quadratic` (same values)."""
    terms = []
    n = fn.n
    for i in range(n):
        if fn.Q[i, i]:
            terms.append(mul(Const(0.5 * fn.Q[i, i]), Pow(Var(i), 2)))
        for j in range(i + 1, n):
            if fn.Q[i, j]:
                terms.append(mul(Const(fn.Q[i, j]), Mul(Var(i), Var(j))))
        if fn.q[i]:
            terms.append(mul(Const(fn.q[i]), Var(i)))
    tree = Const(fn.c)
    for term in terms:
        tree = add(tree, term)
    return Expression(tree, n)


def negate(fn):
    """``-fn`` of the same kind."""
    if isinstance(fn, Quadratic):
        return Quadratic(-fn.Q, -fn.q, -fn.c)
    return Expression(neg(fn.tree), fn.n)


def constant_hessian(fn):
    """The Hessian when it is constant on the unit box (polynomials of degree
    at most two), else None."""
    if isinstance(fn, Quadratic):
        return np.array(fn.Q)
    H = np.zeros((fn.n, fn.n))
    try:
        for i, row in enumerate(_hessian_trees(fn)):
            for j, tree in enumerate(row):
                lo, hi = interval(tree)
                if lo != hi:
                    return None
                H[i, j] = lo
    except UnsupportedNodeError:
        return None
    return 0.5 * (H + H.T)
