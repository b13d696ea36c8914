import numpy as np
import pytest

import switchrep as sr


def random_positive_landscape(rng, m, n):
    return sr.FitnessLandscape(rng.uniform(0.2, 2.0, size=(m, n)))


class TestVectorField:
    def test_vertex_is_equilibrium(self, fig1):
        for i in (1, 2, 3):
            F = sr.vector_field(sr.SimplexState.vertex(i, 3), 1, fig1)
            assert np.all(F == 0.0)

    def test_fig1_uniform_values(self, fig1):
        # phi = 14/15, F = (1/45, -7/90, 1/18)
        F = sr.vector_field(sr.SimplexState.uniform(3), 1, fig1)
        np.testing.assert_allclose(F, [1 / 45, -7 / 90, 1 / 18], rtol=0, atol=1e-15)

    def test_two_genotype_values(self):
        L = sr.FitnessLandscape([[1.0], [0.8]])
        F = sr.vector_field([0.5, 0.5], 1, L)
        np.testing.assert_allclose(F, [0.05, -0.05], rtol=0, atol=1e-15)

    def test_components_sum_to_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            m = int(rng.integers(1, 6))
            n = int(rng.integers(1, 4))
            L = random_positive_landscape(rng, m, n)
            p = rng.dirichlet(np.ones(m))
            k = int(rng.integers(1, n + 1))
            assert abs(sr.vector_field(p, k, L).sum()) <= 1e-12

    def test_index_out_of_range(self, fig1):
        with pytest.raises(IndexError):
            sr.vector_field(sr.SimplexState.uniform(3), 3, fig1)


class TestAverageFitness:
    def test_vertex_picks_single_fitness(self, fig1):
        assert sr.average_fitness(sr.SimplexState.vertex(2, 3), 1, fig1) == 0.7

    def test_fig1_uniform(self, fig1):
        assert sr.average_fitness(sr.SimplexState.uniform(3), 1, fig1) == pytest.approx(14 / 15, abs=1e-15)

    def test_two_genotype(self):
        L = sr.FitnessLandscape([[1.0], [0.8]])
        assert sr.average_fitness([0.5, 0.5], 1, L) == pytest.approx(0.9, abs=1e-15)


class TestIntegrateFixedEnv:
    def test_single_genotype_fixed_point(self):
        L = sr.FitnessLandscape([[1.3]])
        traj = sr.integrate_fixed_env([1.0], 1, L, 5.0, 0.01)
        assert np.all(traj.states == 1.0)

    def test_fig1_env1_converges_to_e3(self, fig1):
        traj = sr.integrate_fixed_env(sr.SimplexState.uniform(3), 1, fig1, 200.0, 0.01)
        assert np.abs(traj.final_state() - [0.0, 0.0, 1.0]).max() < 1e-6

    def test_fig1_env2_converges_to_e2(self, fig1):
        traj = sr.integrate_fixed_env(sr.SimplexState.uniform(3), 2, fig1, 200.0, 0.01)
        assert np.abs(traj.final_state() - [0.0, 1.0, 0.0]).max() < 1e-6

    def test_subsimplex_invariance_exact(self, fig1):
        traj = sr.integrate_fixed_env([0.5, 0.0, 0.5], 1, fig1, 50.0, 0.01)
        assert np.all(traj.states[:, 1] == 0.0)

    def test_average_fitness_monotone(self, fig1):
        for k in (1, 2):
            traj = sr.integrate_fixed_env(sr.SimplexState.uniform(3), k, fig1, 50.0, 0.01)
            phi = traj.states @ fig1.env_fitness(k)
            assert np.all(np.diff(phi) >= -1e-10)

    def test_halving_dt_oracle_equivalence(self, fig1):
        for k in (1, 2):
            a = sr.integrate_fixed_env(sr.SimplexState.uniform(3), k, fig1, 200.0, 0.01)
            b = sr.integrate_fixed_env(sr.SimplexState.uniform(3), k, fig1, 200.0, 0.005)
            assert np.abs(a.final_state() - b.final_state()).max() < 1e-8

    def test_time_grid(self, fig1):
        traj = sr.integrate_fixed_env(sr.SimplexState.uniform(3), 1, fig1, 1.0, 0.3)
        np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)

    def test_zero_horizon(self, fig1):
        traj = sr.integrate_fixed_env(sr.SimplexState.uniform(3), 1, fig1, 0.0, 0.01)
        assert traj.times.size == 1

    def test_dt_larger_than_horizon_rejected(self, fig1):
        with pytest.raises(ValueError):
            sr.integrate_fixed_env(sr.SimplexState.uniform(3), 1, fig1, 0.5, 1.0)


class TestFixedEnvEquilibria:
    def test_fig1_env1_stable_vertex_e3(self, fig1):
        summary = sr.fixed_env_equilibria(1, fig1)
        assert not summary.degenerate
        assert summary.entries == [(1, False), (2, False), (3, True)]

    def test_fig1_env2_stable_vertex_e2(self, fig1):
        summary = sr.fixed_env_equilibria(2, fig1)
        assert summary.entries == [(1, False), (2, True), (3, False)]

    def test_two_values_larger_wins(self):
        L = sr.FitnessLandscape([[1.0], [0.8]])
        assert sr.fixed_env_equilibria(1, L).entries == [(1, True), (2, False)]

    def test_tied_fitness_flagged(self):
        L = sr.FitnessLandscape([[1.0], [1.0], [0.5]])
        summary = sr.fixed_env_equilibria(1, L)
        assert summary.degenerate
        assert summary.degenerate_ties == (1, 2)
        assert all(not stable for _, stable in summary.entries)
