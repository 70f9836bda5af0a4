"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 hypotheses fail,
3 no convergence (or no root for the oracle).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from .errors import ConfigError, ExprError, NoBoundFound, NonlocalIVPError, NoRoot, NotContractive, NotConvergent
from .hypotheses import (
    apriori_bound,
    ball_invariance_check,
    build_M_theta,
    falsify_constants,
    find_theta,
    row_sum_sufficient_check,
    schauder_radii,
)
from .matrix import NonnegMatrix, Verdict, check_convergent_to_zero, neumann_inverse
from .operator import residual
from .oracle import solve_nonlocal
from .solver import perov_solve, picard_solve
from .space import vector_distance, write_solution_csv

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESES, EXIT_NOT_CONVERGED = 0, 1, 2, 3

FALSIFY_SAMPLES = 10_000
BALL_SAMPLES = 200


def _g(v) -> str:
    return f"{v:.10g}"


def _vec(v) -> str:
    return "(" + ", ".join(_g(float(x)) for x in v) + ")"


def _matrix_lines(M, indent="  "):
    return [indent + "[" + ", ".join(_g(float(x)) for x in row) + "]" for row in np.asarray(M)]


def _yes(b) -> str:
    return "yes" if b else "no"


class Report:
    def __init__(self):
        self.lines = []

    def __call__(self, *parts):
        self.lines.append(" ".join(str(p) for p in parts))

    def text(self):
        return "\n".join(self.lines) + "\n"


# -----------------------------------------------------------------------------
# check
# -----------------------------------------------------------------------------

def _describe_problem(rep, p, label):
    rep("problem:", label)
    for name in ("f1", "f2", "alpha", "beta"):
        rep(f"  {name} = {getattr(p, name).source}")
    if p.params:
        rep("  params:", ", ".join(f"{k}={_g(v)}" for k, v in sorted(p.params.items())))
    rep(f"  grid N={p.n_intervals}  theta={_g(p.theta.theta)}  tolerance={_g(p.tolerance)}"
        f"  solver={p.solver}  seed={p.seed}")
    for c in sorted(set(p.alpha.abscissae) | set(p.beta.abscissae)):
        if (c * p.n_intervals) % 1:
            rep(f"  warning: abscissa {_g(c)} is not a grid node; point values are interpolated")


def _matrix_section(rep, M, title):
    report = check_convergent_to_zero(M)
    rep(title)
    for line in _matrix_lines(M.entries):
        rep(line)
    rep("  spectral radius:", _g(report.spectral_radius))
    rep("  criteria:", "  ".join(f"{k}={_yes(v)}" for k, v in report.criteria.items()))
    rep("  verdict:", report.verdict.value)
    if M.n == 2:
        rep("  row-sum sufficient check:", _yes(row_sum_sufficient_check(M)))
    return report


def run_check(p, label, rep) -> bool:
    """Append the hypothesis report for ``p``; return whether the selected mode's hypotheses hold."""
    _describe_problem(rep, p, label)
    th = p.theta.theta
    perov_ok = False
    schauder_ok = False
    leray_ok = False

    rep("")
    if p.declared_lipschitz is None:
        rep("lipschitz constants: not declared")
    else:
        L = p.declared_lipschitz
        rep("lipschitz constants:", ", ".join(f"{k}={_g(v)}" for k, v in vars(L).items()))
        report = _matrix_section(rep, build_M_theta(L, th), f"M_theta (lipschitz, theta={_g(th)}):")
        best = find_theta(L)
        if best.convergent:
            rep(f"  theta search: best theta={_g(best.theta)} with rho={_g(best.rho)}")
        else:
            rep(f"  theta search: no theta achieves rho<1 (best theta={_g(best.theta)}, rho={_g(best.rho)})")
        cex = falsify_constants(p, "lipschitz", samples=FALSIFY_SAMPLES)
        rep(f"  falsification ({FALSIFY_SAMPLES} samples, seed {p.seed}):",
            "no counterexample found" if cex is None else f"COUNTEREXAMPLE: {cex}")
        perov_ok = report.verdict is Verdict.CONVERGENT and cex is None

    rep("")
    if p.declared_growth is None:
        rep("growth constants: not declared")
    else:
        G = p.declared_growth
        rep("growth constants:", ", ".join(f"{k}={_g(v)}" for k, v in vars(G).items()))
        _matrix_section(rep, build_M_theta(G, th), f"M_theta (growth, theta={_g(th)}):")
        try:
            R = schauder_radii(G, th)
        except NotConvergent:
            rep("  schauder radii: none (M_theta not convergent to zero)")
        else:
            rep("  schauder radii R:", _vec(R))
            inv = ball_invariance_check(p, R, samples=BALL_SAMPLES)
            rep(f"  ball invariance ({BALL_SAMPLES} samples):",
                "holds" if inv.holds else "FAILS",
                f"(worst excess {_g(inv.worst_excess)})")
            cex = falsify_constants(p, "growth", samples=FALSIFY_SAMPLES)
            rep(f"  falsification ({FALSIFY_SAMPLES} samples, seed {p.seed}):",
                "no counterexample found" if cex is None else f"COUNTEREXAMPLE: {cex}")
            schauder_ok = inv.holds and cex is None

    if p.caratheodory is not None:
        rep("")
        try:
            ab = apriori_bound(p.caratheodory)
        except NoBoundFound as exc:
            rep("a-priori bound: none found:", exc)
        else:
            if ab.R0 is None:
                rep("a-priori bound: withdrawn, sweep found rho <= Phi(rho) at", _vec(ab.sweep_violation))
            else:
                rep("a-priori bound R0:", _vec(ab.R0), "on [0, cap] with cap", _vec(ab.cap))
                rep("  scalar bounds (omega3(R0), omega4(R0)):", _vec(ab.scalar_bounds))
            if ab.monotone_violation is not None:
                rep("  monotonicity FAILS between", _vec(ab.monotone_violation[0]), "and",
                    _vec(ab.monotone_violation[1]))
            leray_ok = ab.R0 is not None and ab.monotone_violation is None

    ok = perov_ok if p.solver == "perov" else (schauder_ok or leray_ok)
    rep("")
    rep(f"hypotheses for {p.solver}:", "hold" if ok else "FAIL")
    return ok


# -----------------------------------------------------------------------------
# solve / oracle
# -----------------------------------------------------------------------------

def run_solve(p, rep):
    """Solve with the configured solver; returns the result (or ``None`` if refused)."""
    if p.solver == "perov":
        try:
            r = perov_solve(p)
        except NotContractive as exc:
            rep("solver: perov")
            rep("refused:", exc)
            return None
    else:
        r = picard_solve(p)
    rep("solver:", p.solver)
    rep("status:", r.status)
    rep("converged:", _yes(r.converged))
    rep("iterations:", r.iterations)
    rep("x(0) =", _g(r.state.a), " y(0) =", _g(r.state.b))
    if r.certificate is not None:
        c = r.certificate
        rep("certificate:")
        rep("  theta:", _g(c.theta))
        rep("  matrix:")
        for line in _matrix_lines(c.matrix.entries, "    "):
            rep(line)
        rep("  k:", c.iterations)
        rep("  a-priori bound:", _vec(c.apriori_bound))
        rep("  a-posteriori bound:", _vec(c.aposteriori_bound))
    else:
        rep("certificate: none (no uniqueness certificate in picard mode)")
        if r.radii is None:
            rep("warning: no invariant ball available; convergence is unsupported by the hypotheses")
        else:
            rep("schauder radii:", _vec(r.radii))
            rep("iterates inside ball:", _yes(r.inside_ball))
    rep("residuals:", "  ".join(f"{k}={_g(v)}" for k, v in r.residuals.as_dict().items()))
    return r


def _oracle_radii(p):
    if p.declared_growth is None:
        return None
    try:
        return schauder_radii(p.declared_growth, p.theta.theta)
    except NotConvergent:
        return None


def run_oracle(p, rep):
    try:
        o = solve_nonlocal(p, radii=_oracle_radii(p))
    except NoRoot as exc:
        rep("oracle: no root found:", exc)
        return None
    rep("oracle: RK4 shooting with damped Newton")
    rep("start:", _vec(o.start))
    rep("newton steps:", o.newton_steps)
    rep("x(0) =", _g(o.a), " y(0) =", _g(o.b))
    rep("mismatch:", _vec(o.mismatch))
    res = residual(o.to_state(), p)
    rep("residuals:", "  ".join(f"{k}={_g(v)}" for k, v in res.as_dict().items()))
    return o


def _write(out, name, text):
    if out is not None:
        (out / name).write_text(text, encoding="utf-8")


# -----------------------------------------------------------------------------
# commands
# -----------------------------------------------------------------------------

def _overrides(args):
    params = {}
    for item in args.param or []:
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--param expects k=v, got {item!r}")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"--param {key}: {val!r} is not a number") from None
    return {"params": params, "grid": args.grid, "tolerance": args.tol, "seed": args.seed,
            "theta": args.theta, "max_iter": args.max_iter}


def _load_problem(args):
    return cfg.problem_from_config(cfg.load_config(args.config), _overrides(args))


def _out_dir(args):
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_check(args) -> int:
    p = _load_problem(args)
    rep = Report()
    ok = run_check(p, args.config, rep)
    sys.stdout.write(rep.text())
    _write(_out_dir(args), "check_report.txt", rep.text())
    return EXIT_OK if ok else EXIT_HYPOTHESES


def cmd_solve(args) -> int:
    p = _load_problem(args)
    out = _out_dir(args) or Path(".")
    rep = Report()
    r = run_solve(p, rep)
    sys.stdout.write(rep.text())
    (out / "report.txt").write_text(rep.text(), encoding="utf-8")
    if r is None:
        return EXIT_HYPOTHESES
    write_solution_csv(out / "solution.csv", r.state)
    return EXIT_OK if r.converged else EXIT_NOT_CONVERGED


def cmd_oracle(args) -> int:
    p = _load_problem(args)
    out = _out_dir(args) or Path(".")
    rep = Report()
    o = run_oracle(p, rep)
    sys.stdout.write(rep.text())
    (out / "oracle_report.txt").write_text(rep.text(), encoding="utf-8")
    if o is None:
        return EXIT_NOT_CONVERGED
    write_solution_csv(out / "oracle.csv", o.to_state())
    return EXIT_OK


def cmd_matrix(args) -> int:
    try:
        with open(args.matrix, encoding="utf-8") as fh:
            M = NonnegMatrix(json.load(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {args.matrix}: {exc.strerror}") from None
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"malformed matrix file {args.matrix}: {exc}") from None
    rep = Report()
    report = _matrix_section(rep, M, f"matrix ({M.n}x{M.n}):")
    if report.verdict is Verdict.CONVERGENT:
        rep("  (I - M)^-1 by Neumann series:")
        for line in _matrix_lines(neumann_inverse(M), "    "):
            rep(line)
    sys.stdout.write(rep.text())
    return EXIT_OK


def cmd_example(args) -> int:
    ov = _overrides(args)
    a = ov["params"].pop("a", 0.1)
    doc = cfg.builtin_config(args.name, a=a, g=args.g, h=args.h)
    p = cfg.problem_from_config(doc, ov)
    out = _out_dir(args)
    _write(out, "config.toml", cfg.format_config(doc))

    rep = Report()
    rep("== check ==")
    ok = run_check(p, f"built-in {args.name}", rep)
    if not ok:
        sys.stdout.write(rep.text())
        _write(out, "check_report.txt", rep.text())
        return EXIT_HYPOTHESES

    rep("")
    rep("== solve ==")
    r = run_solve(p, rep)
    if r is None:
        sys.stdout.write(rep.text())
        return EXIT_HYPOTHESES
    rep("")
    rep("== oracle ==")
    o = run_oracle(p, rep)

    rep("")
    rep("== comparison ==")
    rep(f"{'':24}{'solver':>20}{'oracle':>20}")
    rep(f"{'x(0)':24}{_g(r.state.a):>20}{_g(o.a) if o else '-':>20}")
    rep(f"{'y(0)':24}{_g(r.state.b):>20}{_g(o.b) if o else '-':>20}")
    rep(f"{'x(1)':24}{_g(r.state.x.values[-1]):>20}{_g(o.x.values[-1]) if o else '-':>20}")
    rep(f"{'y(1)':24}{_g(r.state.y.values[-1]):>20}{_g(o.y.values[-1]) if o else '-':>20}")
    if o is not None:
        d = vector_distance(r.state, o.to_state(), p.theta)
        rep("weighted distance solver-oracle:", _vec(d))
        if r.certificate is not None:
            rep("certified bound + 1e-5 allowance:",
                _vec(np.asarray(r.certificate.aposteriori_bound) + 1e-5))
    sys.stdout.write(rep.text())
    _write(out, "example_report.txt", rep.text())
    if out is not None:
        write_solution_csv(out / "solution.csv", r.state)
        if o is not None:
            write_solution_csv(out / "oracle.csv", o.to_state())
    return EXIT_OK if r.converged and o is not None else EXIT_NOT_CONVERGED


# -----------------------------------------------------------------------------
# argument parsing
# -----------------------------------------------------------------------------

def _common(sp, config=True):
    if config:
        sp.add_argument("config", help="problem file (TOML)")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--param", action="append", metavar="K=V", help="set a parameter (repeatable)")
    sp.add_argument("--grid", type=int, metavar="N", help="number of grid intervals")
    sp.add_argument("--tol", type=float, help="stopping tolerance")
    sp.add_argument("--seed", type=int, help="seed for sampling checks")
    sp.add_argument("--theta", type=float, help="weight in the norm |x|_C + theta*|a|")
    sp.add_argument("--max-iter", type=int, dest="max_iter", help="iteration cap")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, keeping exit code 2 for failed hypotheses
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nonlocal-ivp", description="Nonlocal initial value problems for 2D systems.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("check", help="report on the hypotheses for a problem")
    _common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("solve", help="solve by fixed-point iteration")
    _common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="solve by RK4 shooting")
    _common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("matrix", help="analyse a nonnegative matrix given as a JSON array of arrays")
    sp.add_argument("matrix")
    sp.set_defaults(func=cmd_matrix)

    sp = sub.add_parser("example", help="run a built-in problem end to end")
    sp.add_argument("name", help="ex1, ex2 or ex2_strict")
    _common(sp, config=False)
    sp.add_argument("--g", default="t", help="forcing term g(t) (default: t)")
    sp.add_argument("--h", default="1", help="forcing term h(t) (default: 1)")
    sp.set_defaults(func=cmd_example)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonlocalIVPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
