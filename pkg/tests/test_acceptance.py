"""Exit criteria of the package, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line (visible without
``-s``) before asserting.
"""

import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from nonlocal_ivp.cli import main
from nonlocal_ivp.hypotheses import (
    ball_invariance_check,
    build_M_theta,
    falsify_constants,
    schauder_radii,
)
from nonlocal_ivp.matrix import Verdict, check_convergent_to_zero, neumann_inverse
from nonlocal_ivp.operator import apply_T
from nonlocal_ivp.oracle import rk4_error_ratio, solve_nonlocal
from nonlocal_ivp.problem import LipschitzSpec
from nonlocal_ivp.solver import perov_solve, picard_solve
from nonlocal_ivp.space import SystemState, vector_distance

from conftest import example

pytestmark = pytest.mark.acceptance

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def verdict(capsys):
    def record(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
        assert ok, f"criterion {n} failed: {detail}"
    return record


def ex1_lipschitz(a):
    return LipschitzSpec(0.25, abs(a), abs(a), 0.25, 0.125, 0.125, 0.125, 0.125)


def test_threshold_of_example_one(verdict):
    start = time.perf_counter()
    problems = []
    for a, expected in [(0.0, Verdict.CONVERGENT), (0.1, Verdict.CONVERGENT), (0.24, Verdict.CONVERGENT),
                        (0.25 + 1e-6, Verdict.NOT_CONVERGENT), (0.3, Verdict.NOT_CONVERGENT),
                        (1.0, Verdict.NOT_CONVERGENT)]:
        for sign in (1, -1):
            M = build_M_theta(ex1_lipschitz(sign * a), 2.0)
            if check_convergent_to_zero(M).verdict is not expected:
                problems.append(f"a={sign * a}: verdict")
            eig = np.sort(np.linalg.eigvals(M.entries).real)
            if np.max(np.abs(eig - [0.25 - a, 0.75 + a])) > 1e-12:
                problems.append(f"a={sign * a}: eigenvalues {eig}")
    elapsed = time.perf_counter() - start
    verdict(1, "threshold |a| < 1/4 at theta=2", not problems and elapsed < 1.0,
            f"{elapsed:.3f}s {problems}")


def test_perov_certificate_against_oracle(verdict):
    p = example("ex1", a=0.1, grid=1024, tolerance=1e-8)
    oracle = solve_nonlocal(p)
    start = time.perf_counter()
    r = perov_solve(p)
    elapsed = time.perf_counter() - start
    d = vector_distance(r.state, oracle.to_state(), p.theta)
    bound = np.asarray(r.certificate.aposteriori_bound) + 1e-5
    ok = (r.converged and r.iterations < 200 and np.all(d <= bound)
          and r.residuals.worst <= 1e-4 and elapsed < 5.0)
    verdict(2, "perov certificate covers the oracle solution", ok,
            f"k={r.iterations} d={d.tolist()} bound={bound.tolist()} "
            f"residual={r.residuals.worst:.2e} {elapsed:.2f}s")


def test_convergence_criteria_agree(verdict):
    rng = np.random.default_rng(20240101)
    start = time.perf_counter()
    disagreements = checked = 0
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        M = rng.uniform(0, 2, (n, n))
        rho = np.max(np.abs(np.linalg.eigvals(M)))
        if abs(rho - 1) <= 1e-6:
            continue
        checked += 1
        rep = check_convergent_to_zero(M)
        votes = {rep.by_power_iteration, rep.by_neumann, rep.by_eigenvalues, rep.by_inverse_positivity}
        if votes != {rho < 1}:
            disagreements += 1
    elapsed = time.perf_counter() - start
    verdict(3, "four convergence criteria agree", disagreements == 0 and elapsed < 10.0,
            f"{checked} matrices, {disagreements} disagreements, {elapsed:.2f}s")


def test_neumann_series(verdict):
    rng = np.random.default_rng(7)
    worst_err, worst_neg = 0.0, 0.0
    for _ in range(200):
        n = int(rng.integers(1, 6))
        M = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.8)
        rho = np.max(np.abs(np.linalg.eigvals(M)))
        if rho > 0:
            M *= rng.uniform(0, 0.9) / rho
        inv = neumann_inverse(M)
        worst_err = max(worst_err, float(np.max(np.abs(inv - np.linalg.inv(np.eye(n) - M)))))
        worst_neg = min(worst_neg, float(inv.min()))
    verdict(4, "Neumann series equals (I - M)^-1", worst_err <= 1e-8 and worst_neg >= -1e-12,
            f"max error {worst_err:.2e}, min entry {worst_neg:.2e}")


def test_schauder_pipeline_on_example_two(verdict):
    p = example("ex2", a=0.1)
    G = p.declared_growth
    R = np.array(schauder_radii(G, p.theta))
    M = build_M_theta(G, p.theta).entries
    th = p.theta.theta
    system_err = float(np.max(np.abs((np.eye(2) - M) @ R - [G.c1 + th * G.C1, G.c2 + th * G.C2])))
    ball = ball_invariance_check(p, tuple(R), samples=200)

    r = picard_solve(p)
    o = solve_nonlocal(p, radii=tuple(R))
    size = vector_distance(o.to_state(), SystemState.zero(p.n_intervals), p.theta)
    agreement = max(abs(r.state.a - o.a), abs(r.state.b - o.b),
                    float(np.max(np.abs(r.state.x.values - o.x.values))),
                    float(np.max(np.abs(r.state.y.values - o.y.values))))

    claim = LipschitzSpec(1e6, 1e6, 1e6, 1e6, 0.125, 0.125, 0.125, 0.125)
    cex = falsify_constants(replace(p, declared_lipschitz=claim), "lipschitz", samples=100_000)
    ok = (system_err <= 1e-10 and ball.holds and r.converged and r.residuals.worst <= 1e-4
          and np.all(size <= R) and agreement <= 1e-6 and cex is not None and cex.target == "f1")
    verdict(5, "Schauder ball, Picard and oracle on ex2", ok,
            f"R={R.tolist()} system={system_err:.1e} ball={ball.holds} picard k={r.iterations} "
            f"residual={r.residuals.worst:.1e} agreement={agreement:.1e} counterexample={cex}")


def test_discrete_contraction_on_example_one(verdict):
    p = example("ex1", a=0.1, theta=2.0)
    M = build_M_theta(p.declared_lipschitz, 2.0).entries
    rng = np.random.default_rng(11)
    t = np.linspace(0, 1, p.n_intervals + 1)

    def state():
        scale = 10.0 ** rng.uniform(-3, 2)
        x = scale * (rng.normal() + rng.normal() * np.sin(np.pi * rng.integers(1, 6) * t) + rng.normal(size=t.size) * 0.1)
        y = scale * (rng.normal() + rng.normal() * np.cos(np.pi * rng.integers(1, 6) * t) + rng.normal(size=t.size) * 0.1)
        return SystemState.from_arrays(x, scale * rng.normal(), y, scale * rng.normal())

    worst = -np.inf
    for _ in range(200):
        u, v = state(), state()
        lhs = vector_distance(apply_T(u, p), apply_T(v, p), 2.0)
        worst = max(worst, float(np.max(lhs - M @ vector_distance(u, v, 2.0))))
    verdict(6, "d(Tu, Tv) <= M_theta d(u, v) on ex1", worst <= 1e-12, f"worst excess {worst:.2e}")


def test_grid_convergence(verdict):
    states = {n: perov_solve(example("ex1", a=0.1, grid=n), tol=1e-13).state for n in (256, 512, 1024)}

    def gap(coarse, fine):
        k = fine // coarse
        u, v = states[coarse], states[fine]
        return max(float(np.max(np.abs(u.x.values - v.x.values[::k]))),
                   float(np.max(np.abs(u.y.values - v.y.values[::k]))))

    ratio = gap(256, 512) / gap(512, 1024)
    rk4 = rk4_error_ratio()
    verdict(7, "second-order trapezoid, fourth-order RK4", 3.0 <= ratio <= 5.0 and rk4 >= 12.0,
            f"trapezoid ratio {ratio:.3f}, RK4 ratio {rk4:.2f}")


def test_cli_contract(verdict, tmp_path, capsys):
    problems = []
    runs = [("example_ex1_a0.1.txt", ["example", "ex1", "--param", "a=0.1"], 0),
            ("example_ex1_a0.3.txt", ["example", "ex1", "--param", "a=0.3"], 2),
            ("example_ex2_a0.1.txt", ["example", "ex2", "--param", "a=0.1"], 0)]
    for golden, argv, code in runs:
        outputs = []
        for k in range(2):
            out_dir = tmp_path / f"{golden}.{k}"
            got = main(argv + ["--out", str(out_dir), "--seed", "0"])
            text = capsys.readouterr().out
            files = {f.name: f.read_bytes() for f in sorted(out_dir.iterdir())}
            outputs.append((got, text, files))
            if got != code:
                problems.append(f"{golden}: exit {got}")
            if text != (GOLDEN / golden).read_text():
                problems.append(f"{golden}: differs from golden file")
            for name in ("solution.csv", "oracle.csv"):
                if code == 0 and not files[name].startswith(b"t,x,y\n"):
                    problems.append(f"{golden}: {name} header")
        if outputs[0] != outputs[1]:
            problems.append(f"{golden}: runs differ")
    verdict(8, "CLI golden files, exit codes and bit-identical reruns", not problems, f"{problems}")
