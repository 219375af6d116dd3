"""Acceptance suite: one test per criterion, each at its stated tolerance and
time budget.

Every criterion prints a single ``PASS``/``FAIL`` line (collected in the
pytest terminal summary, or printed directly with
``python3 tests/test_acceptance.py``).
"""

import functools
import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from bincut import qkp  # noqa: E402
from bincut.analysis import (brute_force_solve, check_condition1, compute_epsilon_bar,  # noqa: E402
                             iteration_bound_audit, kkt_search, tangent_cone_distance,
                             u_count, verify_trace_inequalities)
from bincut.cli import run_bench  # noqa: E402
from bincut.convexify import row_sum_constants  # noqa: E402
from bincut.engine import SolveOptions, SolveStatus, solve_algorithm1, solve_algorithm3  # noqa: E402
from bincut.master import lp_relaxation, solve_branch_and_bound, solve_enumerative  # noqa: E402
from bincut.model import enumerate_binary_points, split_points  # noqa: E402

from conftest import (concave_convex_instance, concave_linear_instance, convex_instance,  # noqa: E402
                      example1_convexified)
from test_master import random_model  # noqa: E402

RESULTS = {}


def criterion(number, title, budget=None):
    """Time the test, enforce the budget, and record one result line."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            detail, ok = "", False
            try:
                detail = fn(*args, **kwargs) or ""
                elapsed = time.perf_counter() - t0
                if budget is not None:
                    assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
                ok = True
            except AssertionError as exc:
                detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
                raise
            finally:
                elapsed = time.perf_counter() - t0
                line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title} ({elapsed:.2f} s)"
                if detail:
                    line += f" -- {detail}"
                RESULTS[number] = line
                print(line)
        return run
    return wrap


def summary_lines():
    return [RESULTS[k] for k in sorted(RESULTS)]


# -- shared runs -------------------------------------------------------------------

def _class_instance(kind, seed):
    rng = np.random.default_rng(10_000 * (kind + 1) + seed)
    n = int(rng.integers(4, 13))
    make = concave_linear_instance if kind == 0 else concave_convex_instance
    return make(rng, n)


@functools.lru_cache(maxsize=None)
def condition1_runs():
    """Algorithm 1 on 100 instances of each class, from the zero vector."""
    runs = []
    for kind in (0, 1):
        for seed in range(100):
            p = _class_instance(kind, seed)
            x0 = np.zeros(p.n, dtype=np.int8)
            runs.append((p, x0, solve_algorithm1(p, x0), brute_force_solve(p)))
    return runs


@functools.lru_cache(maxsize=None)
def qkp_runs():
    runs = []
    for seed in range(20):
        inst = qkp.generate_instance(8 + seed % 5, seed)
        p = qkp.qkp_to_problem(inst)
        x0 = qkp.greedy_start(inst)
        runs.append((inst, p, x0, solve_algorithm1(p, x0), brute_force_solve(p)))
    return runs


# -- criteria ----------------------------------------------------------------------

@criterion(1, "worked example reproduction", budget=1.0)
def test_criterion_01_worked_example():
    p = example1_convexified(2.5)
    np.testing.assert_allclose(p.objective.gradient([1, 1, 1, 0]), [0.5, 1.5, 3.5, 4], rtol=0, atol=1e-12)
    np.testing.assert_allclose(p.objective.gradient([0, 1, 1, 1]), [5.5, -0.5, 0.5, 4], rtol=0, atol=1e-12)
    res = solve_algorithm1(p, [1, 1, 1, 0])
    xs = ["".join(map(str, r.x)) for r in res.state.trace]
    assert xs[0] == "0111", xs
    assert xs[-1] == "0111" and xs.count("0111") == 2, f"no repeat of 0111 in {xs}"
    assert res.status is SolveStatus.OPTIMAL_GAP_CLOSED
    assert abs(res.best_value - 9.0) <= 1e-12 and "".join(map(str, res.best_x)) == "0111"
    return "path " + " -> ".join(["1110"] + xs)


@criterion(2, "oracle equivalence under Condition 1", budget=60.0)
def test_criterion_02_oracle_equivalence():
    bad = []
    for p, _, res, bf in condition1_runs():
        if not (res.status is SolveStatus.OPTIMAL_GAP_CLOSED and abs(res.best_value - bf.value) <= 1e-9
                and abs(res.gap) <= 1e-9 * max(1.0, abs(bf.value))):
            bad.append((p.n, res.status.value, res.best_value, bf.value))
    assert not bad, f"{len(bad)} mismatches, first {bad[0]}"
    return f"{len(condition1_runs())}/200 instances match brute force"


@criterion(3, "QKP Condition-1 dichotomy and slice confinement", budget=120.0)
def test_criterion_03_qkp():
    for inst, p, x0, res, bf in qkp_runs():
        assert qkp.cnd_check(inst.Q), f"seed {inst.seed}: Q not c.n.d."
        assert p.polyhedron.contains(np.zeros(inst.n))
        assert not check_condition1(p).passed, f"seed {inst.seed}: Condition 1 holds on the inequality form"
        assert check_condition1(qkp.qkp_to_problem(inst, "EQUALITY")).passed, f"seed {inst.seed}: equality form"
        assert res.best_value == bf.value, f"seed {inst.seed}: {res.best_value} != {bf.value}"
        sums = {int(r.x.sum()) for r in res.state.trace} | {int(x0.sum())}
        assert sums == {inst.m}, f"seed {inst.seed}: iterate sums {sums}, m={inst.m}"
    return "20/20 instances"


@criterion(4, "vertex-count combinatorics", budget=10.0)
def test_criterion_04_combinatorics():
    for m in range(0, 13):
        weights = np.array([sum(v) for v in itertools.product((0, 1), repeat=m)])
        for M in range(0, m + 1):
            assert u_count(M, m) == int((weights <= M).sum()), (M, m)
    for m in range(2, 21):
        for M in range(1, m):
            assert u_count(M, m) == u_count(M, m - 1) + u_count(M - 1, m - 1), (M, m)
        assert u_count(m, m) == 2 ** m
    return "brute force m <= 12, recurrence m <= 20"


@criterion(5, "trace inequalities and iteration bound")
def test_criterion_05_trace_inequalities():
    checked = 0
    runs = [(p, x0, res, bf.value) for p, x0, res, bf in condition1_runs()]
    # the QKP runs stay on the equality slice, where Condition 1 holds
    runs += [(qkp.qkp_to_problem(inst, "EQUALITY"), x0, res, bf.value) for inst, _, x0, res, bf in qkp_runs()]
    for p, x0, res, opt in runs:
        lip = row_sum_constants(p)[1] if p.m else None
        rep = verify_trace_inequalities(res.state.trace, p, opt, lipschitz=lip, start=x0)
        assert rep.ok, rep.violations[0]
        checked += rep.checked
        for N, (count, bound) in iteration_bound_audit(res.state.trace, p, opt, start=x0).items():
            assert count <= bound, f"N={N}: {count} > {bound}"
    return f"{len(runs)} runs, {checked} pairwise inequalities"


@criterion(6, "variable-fixing soundness")
def test_criterion_06_fixing():
    fixed_total = 0
    for seed in range(50):
        p = _class_instance(seed % 2, 500 + seed)
        x0 = np.zeros(p.n, dtype=np.int8)
        plain = solve_algorithm1(p, x0)
        fixed = solve_algorithm1(p, x0, SolveOptions(fixing=True))
        assert abs(fixed.best_value - plain.best_value) <= 1e-9, (seed, fixed.best_value, plain.best_value)
        for k, i, v in fixed.state.fixing_log:
            later = [r.x for r in plain.state.trace if r.k > k]
            assert all(int(x[i]) == v for x in later), f"seed {seed}: x{i + 1}={v} fixed at k={k}"
            fixed_total += 1
    return f"50 instances, {fixed_total} fixings checked"


@criterion(7, "shifted cuts under pseudoconvexity", budget=60.0)
def test_criterion_07_shifted_cuts():
    value_ok = kkt_ok = 0
    for seed in range(50):
        rng = np.random.default_rng(700 + seed)
        p = concave_convex_instance(rng, int(rng.integers(4, 11)))
        eb = compute_epsilon_bar(p)
        eps = 1.0 if math.isinf(eb) else eb / 2
        res = solve_algorithm3(p, np.zeros(p.n, dtype=np.int8), eps, certify=False)
        value_ok += abs(res.best_value - brute_force_solve(p).value) <= 1e-9
        kkt_ok += kkt_search(p, res.best_x).passed
    detail = f"value equals brute force {value_ok}/50, KKT certificate passes {kkt_ok}/50"
    assert value_ok == 50 and kkt_ok == 50, detail
    return detail


@criterion(8, "normal-cone dual certificates")
def test_criterion_08_cone_certificates():
    optima = controls = 0
    for seed in range(30):
        rng = np.random.default_rng(800 + seed)
        p = convex_instance(rng, int(rng.integers(3, 11)))
        C, _, _ = split_points(p, enumerate_binary_points(p.polyhedron))
        F = p.objective.values(C)
        top = F >= F.max() - 1e-9 * max(1.0, abs(F.max()))
        for x in C[top]:
            d = tangent_cone_distance(p.objective.gradient(x), x, C)
            assert d <= 1e-7, f"seed {seed}: distance {d} at optimum"
            optima += 1
        # negative control: the non-optimal vertex with the best improving direction
        best = None
        for x in C[~top]:
            g = p.objective.gradient(x)
            D = C - x
            norms = np.linalg.norm(D, axis=1)
            ratio = np.max(np.where(norms > 0, D @ g / np.where(norms > 0, norms, 1), -np.inf))
            if best is None or ratio > best[0]:
                best = (ratio, x)
        if best is not None and best[0] > 1e-3:
            d = tangent_cone_distance(p.objective.gradient(best[1]), best[1], C)
            assert d > 1e-3, f"seed {seed}: control distance {d}"
            controls += 1
    assert controls > 0
    return f"{optima} optima at distance <= 1e-7, {controls} controls above 1e-3"


@criterion(9, "master-solver equivalence")
def test_criterion_09_master_equivalence():
    feasible = 0
    for seed in range(500):
        model = random_model(np.random.default_rng(90_000 + seed))
        a, b = solve_enumerative(model), solve_branch_and_bound(model)
        assert a.status == b.status, f"seed {seed}: {a.status} vs {b.status}"
        if a.optimal:
            feasible += 1
            assert abs(a.theta - b.theta) <= 1e-9 * max(1.0, abs(a.theta)), f"seed {seed}: {a.theta} vs {b.theta}"
            assert lp_relaxation(model)[1] >= a.theta - 1e-9, f"seed {seed}: relaxation below optimum"
    return f"500 models ({feasible} feasible)"


@criterion(10, "desk-scale QKP benchmark confirmed by brute force")
def test_criterion_10_bench():
    rows = run_bench([10, 12, 14, 16, 18, 20], [0, 1, 2], "cp", "INEQUALITY", "enum", None, 20)
    assert all(r["confirmed"] for r in rows), [r for r in rows if not r["confirmed"]][0]
    assert all(r["gap_pct"] == 0 for r in rows)
    iters = {n: np.mean([r["iterations"] for r in rows if r["n"] == n]) for n in sorted({r["n"] for r in rows})}
    return "mean iterations " + ", ".join(f"n={n}: {v:.1f}" for n, v in iters.items())


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(["", "acceptance summary:"] + summary_lines()))
