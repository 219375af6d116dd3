import numpy as np
import pytest

from bincut.cuts import Cut, Family, feasibility_cut, optimality_cut
from bincut.master import (THETA, ContradictoryFixingsError, Linear, MasterError, MasterStatus,
                           UnboundedModelError, build_master, export_lp, lp_relaxation,
                           solve_branch_and_bound, solve_enumerative)
from bincut.model import LinearPolyhedron


def p0(problem):
    return build_master(problem.polyhedron, [optimality_cut(problem.objective, [1, 1, 1, 0])])


def random_model(rng):
    n = int(rng.integers(1, 15))
    A = rng.integers(0, 10, size=(int(rng.integers(0, 3)), n)).astype(float)
    K = LinearPolyhedron(A, A.sum(axis=1) // 2, n=n)
    opt = [Cut(Family.OPT_TANGENT, rng.normal(size=n), rng.normal()) for _ in range(int(rng.integers(1, 7)))]
    feas = [Cut(Family.FEAS_TANGENT, rng.normal(size=n), rng.normal() - 1) for _ in range(int(rng.integers(0, 3)))]
    return build_master(K, opt, feas)


class TestBuild:
    def test_example_model(self, example1_mu):
        model = p0(example1_mu)
        assert model.n == 4 and model.theta_mode

    def test_theta_needs_cut(self, example1):
        with pytest.raises(UnboundedModelError):
            build_master(example1.polyhedron)

    def test_contradictory_fixings(self, example1_mu):
        with pytest.raises(ContradictoryFixingsError):
            build_master(example1_mu.polyhedron, p0(example1_mu).opt_cuts, fixings=[(0, 0), (0, 1)])

    def test_family_checked(self, example1_mu):
        cut = optimality_cut(example1_mu.objective, [1, 1, 1, 0])
        with pytest.raises(MasterError):
            build_master(example1_mu.polyhedron, [cut], feas_cuts=[cut])

    def test_linear_size_checked(self):
        with pytest.raises(MasterError):
            build_master(LinearPolyhedron.box(3), objective_mode=Linear([1, 2]))


class TestEnumerative:
    def test_example_p0(self, example1_mu):
        sol = solve_enumerative(p0(example1_mu))
        assert sol.x.tolist() == [0, 1, 1, 1]
        assert sol.theta == pytest.approx(11.5, abs=1e-12)

    def test_example_p1(self, example1_mu):
        cuts = [optimality_cut(example1_mu.objective, y) for y in ([1, 1, 1, 0], [0, 1, 1, 1])]
        sol = solve_enumerative(build_master(example1_mu.polyhedron, cuts))
        # (0,0,1,1) is in K with min(10, 9.5) = 9.5, above the value 9 at (0,1,1,1)
        assert sol.x.tolist() == [0, 0, 1, 1]
        assert sol.theta == pytest.approx(9.5, abs=1e-12)
        assert min(c.affine([0, 1, 1, 1]) for c in cuts) == pytest.approx(9.0)

    def test_infeasible_cut(self):
        model = build_master(LinearPolyhedron.box(2), [Cut(Family.OPT_TANGENT, [1, 1], 0)],
                             [Cut(Family.FEAS_TANGENT, [1, 0], 1.0)])
        assert solve_enumerative(model).status is MasterStatus.INFEASIBLE
        assert solve_branch_and_bound(model).status is MasterStatus.INFEASIBLE

    def test_fixings_respected(self, example1_mu):
        model = build_master(example1_mu.polyhedron, p0(example1_mu).opt_cuts, fixings={3: 0})
        sol = solve_enumerative(model)
        assert sol.x[3] == 0 and sol.node_count == 8

    def test_lexicographic_tie(self):
        model = build_master(LinearPolyhedron([[1, 1, 1]], [1]), objective_mode=Linear([1, 1, 1]))
        assert solve_enumerative(model).x.tolist() == [0, 0, 1]


class TestBranchAndBound:
    def test_example_p0(self, example1_mu):
        assert solve_branch_and_bound(p0(example1_mu)).theta == pytest.approx(11.5)

    def test_relaxation_bound(self, example1_mu):
        x, bound = lp_relaxation(p0(example1_mu))
        assert bound >= 11.5 - 1e-9
        assert np.all((x >= 0) & (x <= 1))

    def test_box_linear_relaxation(self):
        x, bound = lp_relaxation(build_master(LinearPolyhedron.box(3), objective_mode=Linear([1, 2, 0.5])))
        np.testing.assert_allclose(x, [1, 1, 1])
        assert bound == pytest.approx(3.5)

    def test_contradictory_rows(self):
        K = LinearPolyhedron([[1, 1], [-1, -1]], [0.5, -1.5])
        assert lp_relaxation(build_master(K, objective_mode=Linear([1, 1])))[0] is None

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng)
        a, b = solve_enumerative(model), solve_branch_and_bound(model)
        assert a.status == b.status
        if a.optimal:
            assert b.theta == pytest.approx(a.theta, abs=1e-9)
            assert model.satisfied(b.x)
            assert lp_relaxation(model)[1] >= a.theta - 1e-9


def test_export_lp(example1_mu):
    g = feasibility_cut(example1_mu.objective, 0, [1, 1, 1, 0])
    text = export_lp(build_master(example1_mu.polyhedron, p0(example1_mu).opt_cuts, [g], {1: 1}))
    assert text.startswith("\\ bincut master model\nMaximize\n obj: theta")
    for token in ("Subject To", " r3: 1.0 theta - 0.5 x1 - 1.5 x2 - 3.5 x3 - 4.0 x4 <= 2.5", " theta free", " x2 = 1", "Binaries", "End"):
        assert token in text
    lin = export_lp(build_master(example1_mu.polyhedron, objective_mode=Linear([1, 0, -2, 0])))
    assert " obj: 1.0 x1 - 2.0 x3" in lin and THETA.lower() not in lin.split("Bounds")[1]
