import numpy as np
import pytest

import switchrep as sr


@pytest.fixture(scope="session")
def fig1():
    """Three genotypes, two environments; genotype 1 never wins an
    environment but leads in mean fitness for pi = (q, 1-q), 1/4 < q < 3/4."""
    return sr.FitnessLandscape([[1.0, 1.0], [0.7, 1.1], [1.1, 0.7]])


@pytest.fixture(scope="session")
def symmetric_q():
    return np.array([[-1.0, 1.0], [1.0, -1.0]])


@pytest.fixture(scope="session")
def fig1_spec(fig1, symmetric_q):
    return sr.ModelSpec(fig1, sr.ConstantGenerator(symmetric_q))


@pytest.fixture(scope="session")
def two_genotype():
    return sr.FitnessLandscape([[1.0, 0.8], [0.8, 1.0]])


@pytest.fixture(scope="session")
def q1_spec(two_genotype):
    """Jumps favor the environment that benefits the dominant genotype."""
    basis = [[[0.0, 0.0], [1.0, -1.0]],
             [[-1.0, 1.0], [0.0, 0.0]]]
    return sr.ModelSpec(two_genotype, sr.StateDependentGenerator(basis))


@pytest.fixture(scope="session")
def q2_spec(two_genotype):
    """Jumps favor the environment that harms the dominant genotype."""
    basis = [[[-1.0, 1.0], [0.0, 0.0]],
             [[0.0, 0.0], [1.0, -1.0]]]
    return sr.ModelSpec(two_genotype, sr.StateDependentGenerator(basis))


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels(fig1, q1_spec):
    # compile the integration kernels once up front so timed tests measure
    # the algorithms, not JIT latency
    sr.integrate_fixed_env(sr.SimplexState.uniform(3), 1, fig1, 0.05, 0.01)
    sr.simulate(q1_spec, [0.6, 0.4], 1, 0.05, 0.01, seed=0)
