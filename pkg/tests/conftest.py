import pytest

from nonlocal_ivp.config import builtin_config, problem_from_config
from nonlocal_ivp.oracle import solve_nonlocal
from nonlocal_ivp.solver import perov_solve, picard_solve


def example(name, a=0.1, **overrides):
    return problem_from_config(builtin_config(name, a=a), overrides)


@pytest.fixture(scope="session")
def ex1():
    return example("ex1")


@pytest.fixture(scope="session")
def ex2():
    return example("ex2")


@pytest.fixture(scope="session")
def ex1_perov(ex1):
    return perov_solve(ex1)


@pytest.fixture(scope="session")
def ex1_oracle(ex1):
    return solve_nonlocal(ex1)


@pytest.fixture(scope="session")
def ex2_picard(ex2):
    return picard_solve(ex2)
