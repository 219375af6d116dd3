import numpy as np
import pytest

from bincut import instance_io as io
from bincut.expr import Quadratic

from conftest import EXAMPLE1_TEXT, example1_problem


def test_example_parses():
    inst = io.loads(EXAMPLE1_TEXT)
    assert inst.problem == example1_problem()
    assert inst.start.tolist() == [1, 1, 1, 0]
    assert inst.lipschitz is None


def test_round_trip_expression():
    inst = io.loads(EXAMPLE1_TEXT)
    assert io.loads(io.dumps(inst)) == inst


def test_round_trip_quadratic(rng):
    Q = rng.normal(size=(3, 3))
    text = "\n".join([
        "DIM 3",
        "OBJECTIVE QUADRATIC",
        *(" ".join(repr(float(v)) for v in row) for row in (Q + Q.T)),
        "q 1 2 3",
        "c -0.5",
        "CONSTRAINT x1^2 + x2 - 1.5",
        "LINEAR 1 1 1 <= 2",
        "LIPSCHITZ 4 2.5",
    ]) + "\n"
    inst = io.loads(text)
    assert isinstance(inst.problem.objective, Quadratic)
    np.testing.assert_array_equal(inst.problem.objective.Q, Q + Q.T)
    assert inst.lipschitz == (4.0, [2.5])
    again = io.loads(io.dumps(inst))
    assert again == inst and again.problem == inst.problem


def test_file_round_trip(tmp_path):
    inst = io.loads(EXAMPLE1_TEXT)
    io.dump(inst, tmp_path / "a.txt")
    assert io.load(tmp_path / "a.txt") == inst


@pytest.mark.parametrize("text, line, column, msg", [
    ("DIM 2\nOBJECTIVE x1 + * x2\n", 2, 16, "unexpected token"),
    ("DIM 2\nOBJECTIVE x1 + x3\n", 2, 16, "out of range"),
    ("DIM 2\nOBJECTIVE x1\nLINEAR 1 <= 2\n", 3, None, "expected 2"),
    ("OBJECTIVE x1\n", 1, None, "DIM must come first"),
    ("DIM 2\nOBJECTIVE x1\nFOO 1\n", 3, None, "unknown section"),
    ("DIM 2\nOBJECTIVE x1\nSTART 012\n", 3, None, "START"),
    ("DIM 2\nOBJECTIVE x1\nLINEAR 1 1 2\n", 3, None, "<="),
    ("DIM 2\nOBJECTIVE QUADRATIC\n0 1\n1 0\nq 1\nc 0\n", 5, None, "expected 'q'"),
    ("DIM 2\nOBJECTIVE QUADRATIC\n0 1\n2 0\nq 1 1\nc 0\n", 3, None, "symmetric"),
    ("DIM two\n", 1, None, "integer"),
])
def test_errors_have_location(text, line, column, msg):
    with pytest.raises(io.InstanceError, match=msg) as info:
        io.loads(text)
    assert info.value.line == line
    assert info.value.column == column


def test_missing_objective():
    with pytest.raises(io.InstanceError, match="missing OBJECTIVE"):
        io.loads("DIM 2\n")


def test_lipschitz_count():
    with pytest.raises(io.InstanceError, match="LIPSCHITZ needs 2"):
        io.loads("DIM 1\nOBJECTIVE x1\nCONSTRAINT x1 - 1\nLIPSCHITZ 1\n")
