"""Command-line front end: ``bincut {solve,generate-qkp,check,bench}``.

Exit codes: 0 certified success, 2 finished without a certificate (or the
checked property fails), 1 error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from . import expr as E
from . import instance_io, qkp
from .analysis import (brute_force_solve, check_condition1, check_robust_quasiconvex_binary,
                       check_tangent_domination, compute_epsilon_bar, kkt_search)
from .convexify import PenaltyConfig, Provenance, UnsupportedFunctionError, auto_penalties, penalty_transform
from .engine import (SolveOptions, SolveStatus, solve_algorithm1, solve_algorithm2,
                     solve_algorithm3, write_trace_csv)
from .linalg import jacobi_eigenvalues
from .master import build_master, export_lp
from .model import ENUM_LIMIT, bits_str, classify_point, enumerate_binary_points, split_points

BENCH_COLUMNS = ("n", "seed", "algorithm", "status", "iterations", "gap_pct", "value", "nodes", "ms")


class CliError(Exception):
    pass


def _fmt(v):
    return f"{float(v):.12g}"


# -- loading -------------------------------------------------------------------

class Loaded:
    """A parsed input file: either a general instance or a QKP instance."""

    def __init__(self, problem, start=None, lipschitz=None, qkp_instance=None):
        self.problem = problem
        self.start = start
        self.lipschitz = lipschitz
        self.qkp = qkp_instance


def load_input(path, qkp_form="inequality"):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    if qkp.is_qkp_text(text):
        inst = qkp.loads(text)
        return Loaded(qkp.qkp_to_problem(inst, qkp_form.upper()), qkp.greedy_start(inst), None, inst)
    inst = instance_io.loads(text)
    return Loaded(inst.problem, inst.start, inst.lipschitz)


def parse_convexify(spec, m):
    """``none``, ``auto`` or ``mu=V[,lambda=V1,V2,...]``; returns a config or
    the string ``"auto"``."""
    spec = (spec or "none").strip()
    if spec == "none":
        return None
    if spec == "auto":
        return "auto"
    values, key = {}, None
    for tok in spec.split(","):
        tok = tok.strip()
        if "=" in tok:
            key, _, tok = tok.partition("=")
            key = key.strip()
            if key not in ("mu", "lambda"):
                raise CliError(f"unknown convexify key {key!r}")
            values[key] = []
        if key is None:
            raise CliError(f"cannot parse convexify spec {spec!r}")
        try:
            values[key].append(float(tok))
        except ValueError:
            raise CliError(f"convexify value {tok!r} is not a number") from None
    mu = values.get("mu", [0.0])
    if len(mu) != 1:
        raise CliError("mu takes a single value")
    lam = values.get("lambda", [0.0] * m)
    if len(lam) == 1 and m > 1:
        lam = lam * m
    if len(lam) != m:
        raise CliError(f"expected {m} lambda values, got {len(lam)}")
    return mu[0], lam


def build_config(problem, spec):
    parsed = parse_convexify(spec, problem.m)
    if parsed is None:
        return None
    if parsed == "auto":
        try:
            return auto_penalties(problem)
        except UnsupportedFunctionError as exc:
            raise CliError(f"--convexify auto: {exc}") from None
    mu, lam = parsed
    return PenaltyConfig(mu, tuple(lam), Provenance.USER, (Provenance.USER,) * problem.m,
                         E.hessian_support(problem.objective),
                         tuple(E.hessian_support(g) for g in problem.constraints))


# -- certification -----------------------------------------------------------------

def _curvature_ok(fn, sign, weight):
    """Whether ``sign * fn`` plus the penalty is concave (sign=+1) or
    ``fn`` plus the penalty convex (sign=-1) on the box."""
    if E.is_linear(fn):
        return True
    H = E.constant_hessian(fn)
    if H is not None:
        ev = jacobi_eigenvalues(H)
        tol = 1e-9 * max(1.0, float(np.linalg.norm(H)))
        return ev[-1] <= tol if sign > 0 else ev[0] >= -tol
    try:
        bound = E.hessian_row_sum_bound(fn)
    except E.UnsupportedNodeError:
        return False
    return weight >= 0.5 * bound - 1e-12


def condition_certificate(original, transformed, config):
    """Reason string when tangent cuts are globally valid, else None."""
    mu = config.mu if config else 0.0
    lams = config.lambdas if config else (0.0,) * original.m
    f_ok = _curvature_ok(transformed.objective, +1, 0.0) or (
        mu > 0 and _curvature_ok(original.objective, +1, mu))
    if not f_ok:
        return None
    for g, gt, lam in zip(original.constraints, transformed.constraints, lams):
        if not (_curvature_ok(gt, -1, 0.0) or (lam > 0 and _curvature_ok(g, -1, lam))):
            return None
    return "tangent cuts dominate (objective concave, constraints convex on the box)"


def constraints_certificate(original, transformed, config):
    lams = config.lambdas if config else (0.0,) * original.m
    for g, gt, lam in zip(original.constraints, transformed.constraints, lams):
        if not (_curvature_ok(gt, -1, 0.0) or (lam > 0 and _curvature_ok(g, -1, lam))):
            return None
    return "feasibility cuts valid (constraints convex on the box)"


def _premises(problem):
    """Concave objective and convex constraints, checked exactly for
    quadratics."""
    return condition_certificate(problem, problem, None) is not None


def _qkp_certificate(loaded, x0):
    inst = loaded.qkp
    if inst is not None and qkp.cnd_check(inst.Q) and int(np.sum(x0)) == inst.m:
        return "Q is conditionally negative definite and the start lies on sum(x) = m"
    return None


# -- solve -------------------------------------------------------------------------

def _first_feasible(problem):
    if problem.n > ENUM_LIMIT:
        raise CliError(f"no START given and n={problem.n} is too large to search for one")
    pts = enumerate_binary_points(problem.polyhedron)
    C, _, _ = split_points(problem, pts)
    if C.shape[0] == 0:
        raise CliError("no feasible binary point exists")
    return C[0]


def cmd_solve(args, out):
    loaded = load_input(args.path, args.qkp_form)
    original = loaded.problem
    algorithm = args.algorithm
    convexify = args.convexify
    if algorithm == "auto":
        algorithm = "cp-linear" if E.is_linear(original.objective) else "cp"
        if convexify is None and algorithm == "cp" and loaded.qkp is None:
            convexify = "auto"
    config = build_config(original, convexify)
    problem = penalty_transform(original, config) if config else original
    options = SolveOptions(master=args.master, max_iter=args.max_iter, fixing=args.fixing == "on")

    certified = None
    if algorithm == "cp-linear":
        result = solve_algorithm2(problem, options)
        if result.status is SolveStatus.OPTIMAL_GAP_CLOSED:
            certified = constraints_certificate(original, problem, config)
    elif algorithm in ("cp", "shifted"):
        x0 = loaded.start if loaded.start is not None else _first_feasible(problem)
        if algorithm == "cp":
            result = solve_algorithm1(problem, x0, options)
            if result.status is SolveStatus.OPTIMAL_GAP_CLOSED:
                certified = condition_certificate(original, problem, config) or _qkp_certificate(loaded, x0)
        else:
            eps = args.epsilon
            if eps is None:
                eb = compute_epsilon_bar(problem)
                if not (eb > 0):
                    raise CliError("--epsilon is required: the computed epsilon-bar is not positive")
                eps = 1.0 if math.isinf(eb) else eb / 2
            result = solve_algorithm3(problem, x0, eps, options, certify=True)
            if result.status is SolveStatus.REPEATED_POINT and _premises(problem):
                if result.certificate is not None and result.certificate.passed:
                    certified = "KKT certificate passed"
                elif problem.n <= ENUM_LIMIT and eps <= compute_epsilon_bar(problem):
                    certified = "pseudoconvex premises hold and epsilon <= epsilon-bar"
    else:
        raise CliError(f"unknown algorithm {algorithm!r}")

    st = result.state
    print(f"status: {result.status.value}", file=out)
    print(f"algorithm: {algorithm}", file=out)
    if config is not None:
        print(f"penalties: mu={_fmt(config.mu)}" + "".join(
            f" lambda{j + 1}={_fmt(v)}" for j, v in enumerate(config.lambdas)), file=out)
    print(f"x: {bits_str(result.best_x) if result.best_x is not None else '-'}", file=out)
    print(f"value: {_fmt(result.best_value)}", file=out)
    print(f"iterations: {result.iterations}", file=out)
    print(f"LB: {_fmt(st.LB)}", file=out)
    print(f"UB: {_fmt(st.UB)}", file=out)
    if st.fixing_log:
        print("fixings: " + " ".join(f"x{i + 1}={v}@k{k}" for k, i, v in st.fixing_log), file=out)
    for d in st.diagnostics:
        print(f"note: {d}", file=out)

    if args.certify and algorithm != "shifted" and result.best_x is not None and problem.n <= ENUM_LIMIT:
        cert = kkt_search(problem, result.best_x, master=args.master)
        lam = ",".join(_fmt(v) for v in cert.detail["lambda"]) or "-"
        print(f"certificate: KKT_LP {'passed' if cert.passed else 'failed'} lambda={lam}", file=out)
        if cert.passed and certified is None and _premises(problem) and result.status in (
                SolveStatus.OPTIMAL_GAP_CLOSED, SolveStatus.REPEATED_POINT):
            certified = "KKT certificate passed"
    elif algorithm == "shifted" and result.certificate is not None:
        cert = result.certificate
        lam = ",".join(_fmt(v) for v in cert.detail["lambda"]) or "-"
        print(f"certificate: KKT_LP {'passed' if cert.passed else 'failed'} lambda={lam}", file=out)

    print(f"certified: {'yes (' + certified + ')' if certified else 'no'}", file=out)
    if args.trace:
        write_trace_csv(st.trace, args.trace)
    if args.export_lp:
        kw = {}
        if algorithm == "cp-linear":
            from .master import Linear
            kw["objective_mode"] = Linear(E.linear_part(problem.objective)[0])
        model = build_master(problem.polyhedron, st.opt_cuts, st.feas_cuts, st.fixings, **kw)
        with open(args.export_lp, "w") as fh:
            fh.write(export_lp(model))
    return 0 if certified else 2


# -- generate-qkp ------------------------------------------------------------------

def cmd_generate_qkp(args, out):
    if args.n < 2:
        raise CliError(f"n must be at least 2, got {args.n}")
    inst = qkp.generate_instance(args.n, args.seed)
    try:
        with open(args.out, "w") as fh:
            fh.write(qkp.dumps(inst))
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc.strerror}") from None
    ok = qkp.cnd_check(inst.Q)
    print(f"wrote {args.out}: n={inst.n} m={inst.m} s={inst.s} seed={args.seed}", file=out)
    print(f"c.n.d.: {'yes' if ok else 'NO'}", file=out)
    return 0 if ok else 2


# -- check -------------------------------------------------------------------------

def cmd_check(args, out):
    loaded = load_input(args.path, args.qkp_form)
    problem = loaded.problem
    if problem.n > ENUM_LIMIT:
        raise CliError(f"n={problem.n} exceeds the enumeration limit {ENUM_LIMIT}")
    config = build_config(problem, args.convexify)
    if config:
        problem = penalty_transform(problem, config)
    if args.mode == "condition1":
        rep = check_condition1(problem)
        print(rep, file=out)
        return 0 if rep.passed else 2
    if args.mode == "tangent-domination":
        rep = check_tangent_domination(problem)
        print(rep, file=out)
        return 0 if rep.passed else 2
    if args.mode == "epsilon-bar":
        eb = compute_epsilon_bar(problem)
        print("mode: epsilon-bar", file=out)
        print(f"epsilon_bar: {_fmt(eb)}", file=out)
        if eb <= 0:
            print("note: epsilon-bar is not positive; the shifted-cut premise fails", file=out)
        return 0 if eb > 0 else 2
    if args.mode == "robust-qc":
        pts = enumerate_binary_points(problem.polyhedron)
        print("mode: robust-qc", file=out)
        print(f"tau: {_fmt(args.tau)}", file=out)
        ok_all = True
        for name, fn in [("-f", E.negate(problem.objective))] + [
                (f"g{j + 1}", g) for j, g in enumerate(problem.constraints)]:
            ok, wit = check_robust_quasiconvex_binary(fn, args.tau, pts)
            ok_all &= ok
            line = f"{name}: {'passes' if ok else 'fails'}"
            if wit is not None:
                line += f" witness x={bits_str(wit[0])} y={bits_str(wit[1])}"
            print(line, file=out)
        return 0 if ok_all else 2
    raise CliError(f"unknown mode {args.mode!r}")


# -- bench -------------------------------------------------------------------------

def _bench_spec(path):
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"bench spec: {exc}") from None
    sizes = spec.get("sizes")
    if not isinstance(sizes, list) or not sizes:
        raise CliError("bench spec: 'sizes' must be a non-empty list")
    if any(not isinstance(n, int) or n < 2 for n in sizes):
        raise CliError("bench spec: sizes must be integers >= 2")
    seeds = spec.get("seeds", 5)
    seeds = list(range(seeds)) if isinstance(seeds, int) else sorted(set(seeds))
    algorithm = spec.get("algorithm", "cp")
    if algorithm != "cp":
        raise CliError("bench spec: only algorithm 'cp' is supported for QKP sweeps")
    form = spec.get("form", "inequality").upper()
    if form not in ("INEQUALITY", "EQUALITY"):
        raise CliError(f"bench spec: unknown form {form!r}")
    master = spec.get("master", "enum")
    if master not in ("enum", "bnb"):
        raise CliError(f"bench spec: unknown master {master!r}")
    confirm = int(spec.get("confirm_up_to", 20))
    return sorted(set(sizes)), seeds, algorithm, form, master, spec.get("max_iter"), confirm


def run_bench(sizes, seeds, algorithm, form, master, max_iter, confirm_up_to):
    rows = []
    for n in sizes:
        for seed in seeds:
            inst = qkp.generate_instance(n, seed)
            problem = qkp.qkp_to_problem(inst, form)
            x0 = qkp.greedy_start(inst)
            t0 = time.perf_counter()
            res = solve_algorithm1(problem, x0, SolveOptions(master=master, max_iter=max_iter))
            ms = (time.perf_counter() - t0) * 1000.0
            gap = qkp.optimality_gap(res.state.UB, res.state.LB)
            confirmed = None
            if n <= confirm_up_to:
                bf = brute_force_solve(problem)
                confirmed = abs(bf.value - res.best_value) <= 1e-9 * max(1.0, abs(bf.value))
            rows.append({"n": n, "seed": seed, "algorithm": algorithm, "status": res.status.value,
                         "iterations": res.iterations, "gap_pct": gap, "value": res.best_value,
                         "nodes": res.state.master_nodes, "ms": ms, "confirmed": confirmed})
    return rows


def cmd_bench(args, out):
    sizes, seeds, algorithm, form, master, max_iter, confirm = _bench_spec(args.spec)
    rows = run_bench(sizes, seeds, algorithm, form, master, max_iter, confirm)
    fh = open(args.out, "w", newline="") if args.out else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_COLUMNS)
        for r in rows:
            w.writerow([r["n"], r["seed"], r["algorithm"], r["status"], r["iterations"],
                        repr(float(r["gap_pct"])), repr(float(r["value"])), r["nodes"], f"{r['ms']:.3f}"])
    finally:
        if args.out:
            fh.close()
    summary = out if args.out else sys.stderr
    bad = False
    for n in sizes:
        rs = [r for r in rows if r["n"] == n]
        conf = [r["confirmed"] for r in rs if r["confirmed"] is not None]
        bad |= not all(conf)
        print(f"n={n} instances={len(rs)} avg_ms={np.mean([r['ms'] for r in rs]):.3f} "
              f"avg_gap_pct={np.mean([r['gap_pct'] for r in rs]):.3g} "
              f"zero_gap={sum(r['gap_pct'] == 0 for r in rs)}/{len(rs)} "
              f"avg_iterations={np.mean([r['iterations'] for r in rs]):.2f} "
              f"bruteforce_confirmed={sum(conf)}/{len(conf)}", file=summary)
    return 2 if bad else 0


# -- entry point ---------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="bincut", description="Cutting-plane solver for binary nonlinear programs.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("path")
    s.add_argument("--algorithm", choices=["auto", "cp", "cp-linear", "shifted"], default="auto")
    s.add_argument("--convexify", default=None, help="none, auto, or mu=V[,lambda=V1,...]")
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--master", choices=["enum", "bnb"], default="enum")
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--fixing", choices=["on", "off"], default="off")
    s.add_argument("--trace", default=None)
    s.add_argument("--certify", action="store_true")
    s.add_argument("--export-lp", default=None, help="write the final master model in LP format")
    s.add_argument("--qkp-form", choices=["inequality", "equality"], default="inequality")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate-qkp", help="write a random quadratic knapsack instance")
    g.add_argument("n", type=int)
    g.add_argument("seed", type=int)
    g.add_argument("out")
    g.set_defaults(func=cmd_generate_qkp)

    c = sub.add_parser("check", help="enumerate and test Condition 1 or a sufficient condition")
    c.add_argument("path")
    c.add_argument("--mode", choices=["condition1", "tangent-domination", "epsilon-bar", "robust-qc"],
                   default="condition1")
    c.add_argument("--convexify", default=None)
    c.add_argument("--tau", type=float, default=0.0)
    c.add_argument("--qkp-form", choices=["inequality", "equality"], default="inequality")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="QKP sweep from a JSON spec")
    b.add_argument("spec")
    b.add_argument("--out", default=None, help="CSV path (default: stdout)")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (CliError, instance_io.InstanceError, qkp.QkpFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError) as exc:
        print(f"error ({type(exc).__module__.rsplit('.', 1)[-1]}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
