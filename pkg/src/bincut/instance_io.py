"""Textual instance files.

One keyword per line; ``#`` starts a comment::

    DIM 4
    OBJECTIVE 2*x1*x2*x3 + x1*x3 + 2*x2 + 3*x3 + 4*x4
    CONSTRAINT x1^2 + x2 - 1.5          # means <= 0
    LINEAR 2 1 2 2 <= 5
    LIPSCHITZ 5 3                       # L_f, then one per constraint
    START 1110

``OBJECTIVE QUADRATIC`` (or ``CONSTRAINT QUADRATIC``) is followed by ``n``
rows of ``Q`` and the lines ``q v1 .. vn`` and ``c v``, meaning
``0.5 x'Qx + q'x + c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as E
from .model import LinearPolyhedron, Problem, binary_vector, bits_str

SECTIONS = ("DIM", "OBJECTIVE", "CONSTRAINT", "LINEAR", "LIPSCHITZ", "START")


class InstanceError(ValueError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(eq=False)
class Instance:
    problem: Problem
    lipschitz: tuple = None   # (L_f, [L_g1, ...])
    start: np.ndarray = None

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        a, b = self.problem, other.problem
        same_start = (self.start is None and other.start is None) or (
            self.start is not None and other.start is not None and np.array_equal(self.start, other.start))
        return (a.n == b.n and a.objective == b.objective and a.constraints == b.constraints
                and a.polyhedron == b.polyhedron and self.lipschitz == other.lipschitz and same_start)


def _floats(tokens, lineno, what):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise InstanceError(f"{what}: {exc}", lineno) from None


def loads(text):
    raw = text.splitlines()
    lines = []
    for no, ln in enumerate(raw, 1):
        body = ln.split("#", 1)[0]
        if body.strip():
            lines.append((no, body))
    n = None
    objective = None
    constraints, rows, rhs = [], [], []
    lipschitz = start = None
    i = 0

    def quadratic_block(i, no):
        if i + n + 2 > len(lines):
            raise InstanceError("QUADRATIC block is truncated", no)
        Q = [_floats(lines[i + r][1].split(), lines[i + r][0], "Q row") for r in range(n)]
        for r, row in enumerate(Q):
            if len(row) != n:
                raise InstanceError(f"Q row has {len(row)} entries, expected {n}", lines[i + r][0])
        qno, qline = lines[i + n]
        toks = qline.split()
        if not toks or toks[0] != "q" or len(toks) != n + 1:
            raise InstanceError(f"expected 'q' followed by {n} numbers", qno)
        q = _floats(toks[1:], qno, "q")
        cno, cline = lines[i + n + 1]
        toks = cline.split()
        if len(toks) != 2 or toks[0] != "c":
            raise InstanceError("expected 'c <number>'", cno)
        c = _floats(toks[1:], cno, "c")[0]
        Qm = np.array(Q)
        if not np.array_equal(Qm, Qm.T):
            raise InstanceError("Q must be symmetric", lines[i][0])
        return E.Quadratic(Qm, q, c), i + n + 2

    def function(rest, no, line, i):
        if rest.strip() == "QUADRATIC":
            return quadratic_block(i + 1, no)
        col0 = line.index(rest) + 1
        try:
            return E.parse_expression(rest, n), i + 1
        except E.ExpressionError as exc:
            col = None if exc.offset is None else col0 + exc.offset
            raise InstanceError(str(exc).split(" (at offset")[0], no, col) from None

    while i < len(lines):
        no, line = lines[i]
        key, _, rest = line.strip().partition(" ")
        if key not in SECTIONS:
            raise InstanceError(f"unknown section {key!r}", no)
        if key != "DIM" and n is None:
            raise InstanceError("DIM must come first", no)
        if key == "DIM":
            if n is not None:
                raise InstanceError("DIM given twice", no)
            try:
                n = int(rest)
            except ValueError:
                raise InstanceError(f"DIM expects an integer, got {rest.strip()!r}", no) from None
            if n < 1:
                raise InstanceError("DIM must be positive", no)
            i += 1
        elif key == "OBJECTIVE":
            if objective is not None:
                raise InstanceError("OBJECTIVE given twice", no)
            objective, i = function(rest, no, line, i)
        elif key == "CONSTRAINT":
            g, i = function(rest, no, line, i)
            constraints.append(g)
        elif key == "LINEAR":
            lhs, sep, b = rest.partition("<=")
            if not sep:
                raise InstanceError("LINEAR row needs '<='", no)
            a = _floats(lhs.split(), no, "LINEAR")
            if len(a) != n:
                raise InstanceError(f"LINEAR row has {len(a)} coefficients, expected {n}", no)
            rows.append(a)
            rhs.append(_floats([b.strip()], no, "LINEAR")[0])
            i += 1
        elif key == "LIPSCHITZ":
            vals = _floats(rest.split(), no, "LIPSCHITZ")
            if not vals:
                raise InstanceError("LIPSCHITZ needs at least L_f", no)
            lipschitz = vals
            i += 1
        elif key == "START":
            try:
                start = binary_vector(rest.strip(), n)
            except ValueError as exc:
                raise InstanceError(f"START: {exc}", no) from None
            i += 1
    if n is None:
        raise InstanceError("missing DIM")
    if objective is None:
        raise InstanceError("missing OBJECTIVE")
    lip = None
    if lipschitz is not None:
        if len(lipschitz) != len(constraints) + 1:
            raise InstanceError(f"LIPSCHITZ needs {len(constraints) + 1} values")
        lip = (lipschitz[0], list(lipschitz[1:]))
    K = LinearPolyhedron(np.array(rows).reshape(len(rows), n), rhs, n=n)
    return Instance(Problem(n, objective, tuple(constraints), K), lip, start)


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def _num(v):
    v = float(v)
    return str(int(v)) if v == int(v) and abs(v) < 2 ** 53 else repr(v)


def _function_lines(key, fn):
    if isinstance(fn, E.Quadratic):
        out = [f"{key} QUADRATIC"]
        out += [" ".join(_num(v) for v in row) for row in fn.Q]
        out.append("q " + " ".join(_num(v) for v in fn.q))
        out.append(f"c {_num(fn.c)}")
        return out
    return [f"{key} {fn.text}"]


def dumps(instance):
    p = instance.problem
    out = [f"DIM {p.n}"]
    out += _function_lines("OBJECTIVE", p.objective)
    for g in p.constraints:
        out += _function_lines("CONSTRAINT", g)
    for a, b in zip(p.polyhedron.A, p.polyhedron.b):
        out.append("LINEAR " + " ".join(_num(v) for v in a) + f" <= {_num(b)}")
    if instance.lipschitz is not None:
        L_f, L_g = instance.lipschitz
        out.append("LIPSCHITZ " + " ".join(_num(v) for v in [L_f, *L_g]))
    if instance.start is not None:
        out.append(f"START {bits_str(instance.start)}")
    return "\n".join(out) + "\n"


def dump(instance, path):
    with open(path, "w") as fh:
        fh.write(dumps(instance))
