"""Second example: no Lipschitz constant, but an invariant ball still gives existence."""
# %%
from dataclasses import replace

import numpy as np

from nonlocal_ivp.config import builtin_config, problem_from_config
from nonlocal_ivp.hypotheses import ball_invariance_check, falsify_constants, schauder_radii
from nonlocal_ivp.oracle import solve_nonlocal
from nonlocal_ivp.problem import LipschitzSpec
from nonlocal_ivp.solver import picard_solve
from nonlocal_ivp.space import SystemState, vector_distance

p = problem_from_config(builtin_config("ex2", a=0.1))
print("f1 =", p.f1.source)
print("f2 =", p.f2.source)

# %% x sin(y/x) is bounded by |x| but not Lipschitz near x = 0
claim = LipschitzSpec(1e6, 1e6, 1e6, 1e6, 0.125, 0.125, 0.125, 0.125)
print(falsify_constants(replace(p, declared_lipschitz=claim), "lipschitz", samples=100_000))

# %% linear growth bounds give the radii of a ball that T maps into itself
R = schauder_radii(p.declared_growth, p.theta)
print("radii:", R)
print("invariance:", ball_invariance_check(p, R, samples=200))

# %% Picard iteration stays in the ball and lands on the shooting solution
r = picard_solve(p)
o = solve_nonlocal(p, radii=R)
print("picard:", r.status, "after", r.iterations, "iterations, inside ball:", r.inside_ball)
print("oracle size:", vector_distance(o.to_state(), SystemState.zero(p.n_intervals), p.theta), "<=", R)
print("max gap picard vs oracle:",
      max(np.max(np.abs(r.state.x.values - o.x.values)), np.max(np.abs(r.state.y.values - o.y.values))))
