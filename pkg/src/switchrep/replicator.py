"""Deterministic replicator dynamics within a single fixed environment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NonFiniteStateError
from .model import DEGENERACY_TOL, FitnessLandscape, SimplexState, as_state_vector

DEFAULT_DT = 0.01


@dataclass(frozen=True)
class FixedEnvTrajectory:
    """Sampled flow of the replicator equation in one environment."""

    times: np.ndarray
    states: np.ndarray  # (len(times), m)
    environment: int    # 1-based

    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class EquilibriaSummary:
    """Per-vertex stability classification for one environment.

    entries: list of (vertex 1-based, stable) pairs. With pairwise-distinct
    fitness values exactly one vertex is stable (the fitness argmax); ties
    are reported through degenerate_ties and no vertex is marked stable.
    """

    environment: int
    entries: list
    degenerate_ties: tuple

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_ties)


def vector_field(P, k: int, L: FitnessLandscape) -> np.ndarray:
    """Growth rates F_i = P_i * (w_i - phi) in environment k (1-based).

    Components sum to zero up to rounding: total growth equals the average
    fitness minus itself.
    """
    p = as_state_vector(P)
    w = L.env_fitness(k)
    if p.size != L.m:
        raise ValueError(f"state has {p.size} components, landscape has {L.m} genotypes")
    return p * (w - w @ p)


def average_fitness(P, k: int, L: FitnessLandscape) -> float:
    """Population-average fitness phi in environment k."""
    p = as_state_vector(P)
    w = L.env_fitness(k)
    if p.size != L.m:
        raise ValueError(f"state has {p.size} components, landscape has {L.m} genotypes")
    return float(w @ p)


def integrate_fixed_env(P0, k: int, L: FitnessLandscape, t_end: float,
                        dt: float = DEFAULT_DT) -> FixedEnvTrajectory:
    """Fixed-step RK4 integration of the replicator flow in environment k.

    After every step the state is clamped (negatives to zero) and rescaled
    back onto the simplex; clamping first preserves invariant faces. The
    average fitness is nondecreasing along the output up to integrator
    rounding. Fixed steps keep runs bit-reproducible.
    """
    p0 = as_state_vector(P0)
    w = np.ascontiguousarray(L.env_fitness(k))
    if p0.size != L.m:
        raise ValueError(f"state has {p0.size} components, landscape has {L.m} genotypes")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if t_end > 0 and dt > t_end:
        raise ValueError("dt must not exceed t_end")

    n_full, take_rem = _kernels.segment_plan(t_end, dt)
    count = 1 + n_full + (1 if take_rem else 0)
    times = np.empty(count)
    states = np.empty((count, p0.size))
    times[0] = 0.0
    states[0] = p0

    p = p0.copy()
    m = p.size
    scratch = [np.empty(m) for _ in range(5)]
    idx, status, t_fail, _ = _kernels.advance_segment(
        p, w, 0.0, t_end, dt, n_full, take_rem,
        True, times, states, 1, -1, 0.0, *scratch)
    if status == 1:
        raise NonFiniteStateError(t_fail)
    return FixedEnvTrajectory(times=times[:idx], states=states[:idx], environment=k)


def fixed_env_equilibria(k: int, L: FitnessLandscape) -> EquilibriaSummary:
    """All simplex vertices with their stability in environment k.

    The stable vertex is the one with the largest fitness value; every
    other vertex is unstable.
    """
    w = L.env_fitness(k)
    order = np.argsort(w)
    top = order[-1]
    tied = tuple(sorted(int(i) + 1 for i in np.flatnonzero(w >= w[top] - DEGENERACY_TOL)))
    if len(tied) > 1:
        entries = [(i + 1, False) for i in range(L.m)]
        return EquilibriaSummary(environment=k, entries=entries, degenerate_ties=tied)
    entries = [(i + 1, i == top) for i in range(L.m)]
    return EquilibriaSummary(environment=k, entries=entries, degenerate_ties=())
