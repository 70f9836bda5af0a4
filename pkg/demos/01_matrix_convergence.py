"""When does M^k -> 0?  Four ways to tell, and how they line up."""
# %%
import numpy as np

from nonlocal_ivp.matrix import check_convergent_to_zero, neumann_inverse, spectral_radius

# %% the matrix of the first example at theta = 2, a = 0.1
M = np.array([[0.5, 0.35], [0.35, 0.5]])
report = check_convergent_to_zero(M)
print("rho =", report.spectral_radius, "->", report.verdict)
print("power iteration / Neumann / eigenvalues / inverse >= 0:",
      report.by_power_iteration, report.by_neumann, report.by_eigenvalues, report.by_inverse_positivity)
print("(I - M)^-1 =\n", neumann_inverse(M))

# %% the verdict flips as the off-diagonal coupling crosses 1/2
for off in (0.3, 0.45, 0.49, 0.51, 0.6):
    A = np.array([[0.5, off], [off, 0.5]])
    print(f"off-diagonal {off:.2f}: rho={spectral_radius(A):.3f} {check_convergent_to_zero(A).verdict}")

# %% random nonnegative matrices: the four criteria never disagree away from rho = 1
rng = np.random.default_rng(0)
split = {True: 0, False: 0}
for _ in range(500):
    n = int(rng.integers(2, 5))
    r = check_convergent_to_zero(rng.uniform(0, 2, (n, n)) / n)
    votes = {r.by_power_iteration, r.by_neumann, r.by_eigenvalues, r.by_inverse_positivity}
    assert len(votes) == 1 or abs(r.spectral_radius - 1) < 1e-6
    split[votes.pop()] += 1
print("convergent / not convergent:", split[True], "/", split[False])
