"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report. Initial conditions and horizons that the qualitative targets leave
open are fixed here and recorded in each test body.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
import yaml
from scipy.linalg import expm

import switchrep as sr
from switchrep.cli import main


@contextmanager
def criterion(cid, label):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[acceptance] {cid} {label}: FAIL ({time.perf_counter() - t0:.2f}s)")
        raise
    print(f"[acceptance] {cid} {label}: PASS ({time.perf_counter() - t0:.2f}s)")


FIG1_MODEL = {
    "fitness": [[1.0, 1.0], [0.7, 1.1], [1.1, 0.7]],
    "generator": {"kind": "constant", "q": [[-1.0, 1.0], [1.0, -1.0]]},
}


def q1_two_genotype_spec():
    two = sr.FitnessLandscape([[1.0, 0.8], [0.8, 1.0]])
    return sr.ModelSpec(two, sr.StateDependentGenerator(
        [[[0.0, 0.0], [1.0, -1.0]], [[-1.0, 1.0], [0.0, 0.0]]]))


def q2_two_genotype_spec():
    two = sr.FitnessLandscape([[1.0, 0.8], [0.8, 1.0]])
    return sr.ModelSpec(two, sr.StateDependentGenerator(
        [[[-1.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, -1.0]]]))


def random_models_3x2(seed, count, margin_min=0.05):
    """Random 3-genotype/2-environment models with irreducible Q and a
    non-degenerate leader (operationalized as a mean-fitness margin of at
    least margin_min over the runner-up)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        W = rng.uniform(0.7, 1.3, size=(3, 2))
        if min(abs(np.diff(np.sort(W[:, k]))).min() for k in range(2)) < 1e-6:
            continue
        a, b = rng.uniform(1.0, 3.0, size=2)
        Q = np.array([[-a, a], [b, -b]])
        pi = np.array([b / (a + b), a / (a + b)])
        means = W @ pi
        order = np.argsort(means)
        if means[order[-1]] - means[order[-2]] < margin_min:
            continue
        out.append((sr.ModelSpec(sr.FitnessLandscape(W), sr.ConstantGenerator(Q)),
                    int(order[-1]) + 1))
    return out


def test_c01_partition_boundaries(tmp_path):
    with criterion("C1", "partition boundaries 1/4 and 3/4"):
        out = tmp_path / "out"
        cfg = tmp_path / "partition.yaml"
        cfg.write_text(yaml.safe_dump({
            "model": FIG1_MODEL,
            "experiment": {"kind": "partition", "resolution": 1000},
            "seed": 1,
            "output": {"directory": str(out)},
        }), encoding="utf-8")
        t0 = time.perf_counter()
        assert main(["partition", "--config", str(cfg)]) == 0
        elapsed = time.perf_counter() - t0
        doc = json.loads((out / "partition_summary.json").read_text())
        assert len(doc["boundaries"]) == 2
        assert abs(doc["boundaries"][0] - 0.25) <= 1e-9
        assert abs(doc["boundaries"][1] - 0.75) <= 1e-9
        assert elapsed < 1.0, f"partition took {elapsed:.3f}s"


def test_c02_fixed_environment_fixation(fig1):
    with criterion("C2", "fixed-environment fixation at the argmax vertex"):
        t0 = time.perf_counter()
        tr1 = sr.integrate_fixed_env(sr.SimplexState.uniform(3), 1, fig1, 200.0, 0.01)
        assert np.abs(tr1.final_state() - [0.0, 0.0, 1.0]).max() < 1e-6
        tr2 = sr.integrate_fixed_env(sr.SimplexState.uniform(3), 2, fig1, 200.0, 0.01)
        assert np.abs(tr2.final_state() - [0.0, 1.0, 0.0]).max() < 1e-6
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0, f"integration took {elapsed:.3f}s"


def test_c03_mean_fitness_monotonicity_suite():
    with criterion("C3", "average-fitness monotonicity over random landscapes"):
        rng = np.random.default_rng(333)
        for _ in range(100):
            m = int(rng.integers(2, 6))
            n = int(rng.integers(1, 4))
            L = sr.FitnessLandscape(rng.uniform(0.2, 2.0, size=(m, n)))
            start = rng.dirichlet(np.ones(m))
            for k in range(1, n + 1):
                traj = sr.integrate_fixed_env(start, k, L, 20.0, 0.01)
                phi = traj.states @ L.env_fitness(k)
                assert np.all(np.diff(phi) >= -1e-10)
                assert np.abs(traj.states.sum(axis=1) - 1.0).max() <= 1e-9


def test_c04_holding_time_statistics():
    with criterion("C4", "exponential holding-time statistics at rate 1"):
        rng = np.random.default_rng(444)
        Q = np.array([[-1.0, 1.0], [1.0, -1.0]])
        samples = np.array([sr.sample_jump(Q, 1, rng).holding_time
                            for _ in range(100_000)])
        assert abs(samples.mean() - 1.0) < 0.01
        tail = np.mean(samples > np.log(2.0))
        assert abs(tail - 0.5) <= 0.01  # 2% of 1/2


def test_c05_stationary_distribution_oracle():
    with criterion("C5", "stationary distributions vs matrix-exponential limit"):
        rng = np.random.default_rng(555)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            q = rng.uniform(0.05, 2.0, size=(n, n))
            np.fill_diagonal(q, 0.0)
            np.fill_diagonal(q, -q.sum(axis=1))
            sd = sr.stationary_distribution(q)
            assert np.abs(sd.pi @ q).max() <= 1e-10
            limit_row = expm(q * 1e3)[0]
            assert np.abs(limit_row - sd.pi).max() <= 1e-6


def test_c06_certificate_construction_and_audit(fig1, symmetric_q):
    with criterion("C6", "certificate values and annulus audit"):
        t0 = time.perf_counter()
        stab = sr.build_stability_certificate(fig1, symmetric_q)
        np.testing.assert_allclose(stab.beta, [0.1, 0.1], rtol=0, atol=1e-9)
        np.testing.assert_allclose(stab.c[0], [0.1, -0.1], rtol=0, atol=1e-9)
        np.testing.assert_allclose(stab.c[1], [-0.1, 0.1], rtol=0, atol=1e-9)
        rep = sr.verify_certificate(stab, fig1, symmetric_q, (1e-4, 0.05),
                                    10_000, seed=66)
        assert rep.passed and rep.max_lie < 0
        for g in (2, 3):
            inst = sr.build_instability_certificate(fig1, symmetric_q, g)
            rep = sr.verify_certificate(inst, fig1, symmetric_q, (1e-4, 0.05),
                                        10_000, seed=66 + g)
            assert rep.passed and rep.max_lie < 0 and rep.pole_diverges
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"certification took {elapsed:.3f}s"


def test_c07_hybrid_fixation_under_symmetric_switching(fig1_spec):
    with criterion("C7", "interior starts fixate at the mean-fitness leader"):
        rep = sr.estimate_fixation(fig1_spec, sr.interior_start(), 500, 200.0,
                                   0.01, seed=701)
        assert rep.fixation_frequency(1) >= 0.95


def test_c08_bistability_of_selfish_switching():
    with criterion("C8", "state-dependent switching yields bistability"):
        spec = q1_two_genotype_spec()
        near1 = sr.estimate_fixation(spec, sr.vertex_ball(1, 0.05), 500, 200.0,
                                     0.01, seed=801)
        assert near1.fixation_frequency(1) >= 0.90
        near2 = sr.estimate_fixation(spec, sr.vertex_ball(2, 0.05), 500, 200.0,
                                     0.01, seed=802)
        assert near2.fixation_frequency(2) >= 0.90


def test_c09_nonconvergence_of_spiteful_switching():
    with criterion("C9", "adverse state-dependent switching prevents fixation"):
        spec = q2_two_genotype_spec()
        rep = sr.estimate_fixation(spec, sr.fixed_start([0.5, 0.5]), 500, 200.0,
                                   0.01, seed=901)
        assert rep.fixation_counts.sum() / rep.n_runs <= 0.10


def test_c10_theory_simulation_consistency():
    with criterion("C10", "certificates agree with ensemble behavior"):
        t0 = time.perf_counter()
        models = random_models_3x2(seed=1234, count=20, margin_min=0.05)
        for i, (spec, leader) in enumerate(models):
            L = spec.landscape
            Q = spec.generator.q
            # certified-stable vertex: escape stays rare
            stab = sr.build_stability_certificate(L, Q)
            assert stab.target == leader
            ver = sr.verify_certificate(stab, L, Q, (1e-4, 0.05), 2000, seed=40 + i)
            esc = sr.estimate_escape(spec, leader, 0.01, 0.2, 200, 100.0, 0.01,
                                     seed=1000 + i)
            assert esc.escape_frequency <= 0.10
            if ver.passed:
                # coupling: a verified stability certificate predicts fixation
                # from nearby starts
                fix = sr.estimate_fixation(spec, sr.vertex_ball(leader, 0.05),
                                           60, 100.0, 0.01, seed=3000 + i)
                assert fix.fixation_frequency(leader) > 0.9
            # certified-unstable vertex: escape frequency stays bounded below
            target = next(g for g in (1, 2, 3) if g != leader)
            inst = sr.build_instability_certificate(L, Q, target)
            iver = sr.verify_certificate(inst, L, Q, (1e-4, 0.05), 2000, seed=70 + i)
            assert iver.passed
            curve = sr.stability_curve(spec, target, [0.05, 0.02, 0.01], 0.2,
                                       60, 150.0, 0.01, seed=2000 + i)
            assert curve[-1][1] >= 0.30
        elapsed = time.perf_counter() - t0
        assert elapsed < 300.0, f"criterion took {elapsed:.1f}s"


def test_c11_byte_reproducibility(tmp_path, monkeypatch):
    with criterion("C11", "byte-identical reruns across parallelism settings"):
        jobs = {
            "simulate": ({"kind": "simulate", "p0": [0.4, 0.3, 0.3], "alpha0": 1,
                          "t_end": 20.0, "dt": 0.01},
                         ["trajectory.csv", "run_summary.json"]),
            "ensemble": ({"kind": "ensemble", "mode": "fixation", "n_runs": 20,
                          "t_end": 20.0, "dt": 0.01,
                          "start": {"kind": "interior"}},
                         ["runs.csv", "ensemble_summary.json"]),
            "certify": ({"kind": "certify", "annulus": [1e-4, 0.05],
                         "verify_samples": 2000},
                        ["certificates.json"]),
            "partition": ({"kind": "partition", "resolution": 500},
                          ["partition.csv", "partition_summary.json"]),
        }
        for command, (experiment, files) in jobs.items():
            blobs = {}
            for rep, threads in (("a", "1"), ("b", "1"), ("c", "4")):
                out = tmp_path / f"{command}_{rep}"
                cfg = tmp_path / f"{command}_{rep}.yaml"
                cfg.write_text(yaml.safe_dump({
                    "model": FIG1_MODEL,
                    "experiment": experiment,
                    "seed": 1100,
                    "output": {"directory": str(out)},
                }), encoding="utf-8")
                monkeypatch.setenv("SWITCHREP_THREADS", threads)
                assert main([command, "--config", str(cfg)]) == 0
                blobs[rep] = [(out / f).read_bytes() for f in files]
            assert blobs["a"] == blobs["b"] == blobs["c"], command
