"""First example: a contraction in a vector-valued metric gives a certified solution."""
# %%
import numpy as np

from nonlocal_ivp.config import builtin_config, problem_from_config
from nonlocal_ivp.hypotheses import build_M_theta, find_theta
from nonlocal_ivp.oracle import solve_nonlocal
from nonlocal_ivp.problem import LipschitzSpec
from nonlocal_ivp.solver import perov_solve
from nonlocal_ivp.space import vector_distance

# %% x' = 0.25 sin x + a y + t,  y' = cos(a x + 0.25 y) + 1, with x(0), y(0) read off at t = 1/4
p = problem_from_config(builtin_config("ex1", a=0.1))
for name in ("f1", "f2", "alpha", "beta"):
    print(f"{name:>5} = {getattr(p, name).source}")

# %% the Lipschitz matrix depends on the weight theta; theta = 2 is optimal here
L = p.declared_lipschitz
for theta in (0.5, 1.0, 2.0, 4.0):
    M = build_M_theta(L, theta)
    print(f"theta={theta}: rho={np.max(np.abs(np.linalg.eigvals(M.entries))):.4f}")
print("search:", find_theta(L))

# %% the |a| < 1/4 threshold
for a in (0.0, 0.2, 0.24, 0.26, 0.3):
    best = find_theta(LipschitzSpec(0.25, a, a, 0.25, 0.125, 0.125, 0.125, 0.125))
    print(f"a={a}: best rho = {best.rho:.4f}")

# %% iterate, stop on the a-posteriori bound, compare with the shooting solution
r = perov_solve(p)
c = r.certificate
print("iterations:", r.iterations)
print("a-priori bound:    ", c.apriori_bound)
print("a-posteriori bound:", c.aposteriori_bound)
o = solve_nonlocal(p)
print("distance to shooting solution:", vector_distance(r.state, o.to_state(), p.theta))
print("x(0), y(0):", r.state.a, r.state.b)
