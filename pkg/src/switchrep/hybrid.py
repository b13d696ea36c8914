"""Coupled replicator flow + Markov regime switching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import AbsorbingStateError, NonFiniteStateError, StepTooLargeError
from .model import ModelSpec, SimplexState, as_state_vector, require_valid
from .regimes import sample_jump
from .replicator import DEFAULT_DT

DEFAULT_EPSILON = 1e-3
POLYMORPHIC_FACTOR = 10.0


@dataclass(frozen=True)
class HybridTrajectory:
    """Sampled path of (P, regime) plus the jump-event log.

    Regime labels are 1-based. Sample times are strictly increasing, the
    regime is piecewise constant between jump records, and the sample at a
    jump time carries the post-jump regime.
    """

    times: np.ndarray
    states: np.ndarray      # (len(times), m)
    regimes: np.ndarray     # int, 1-based
    jump_times: np.ndarray
    jump_from: np.ndarray   # int, 1-based
    jump_to: np.ndarray     # int, 1-based
    seed: int
    fingerprint: str

    @property
    def jump_count(self) -> int:
        return self.jump_times.size

    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class OutcomeLabel:
    """Terminal classification of a trajectory.

    kind is 'fixation' (within epsilon of a vertex, sup norm),
    'polymorphic' (farther than 10*epsilon from every vertex) or
    'undecided' (in between). vertex is the 1-based fixation vertex.
    """

    kind: str
    vertex: Optional[int]
    final_state: np.ndarray
    final_dist: float


class _RunResult:
    """Internal per-run output shared by simulate() and the ensembles."""

    __slots__ = ("times", "states", "regimes", "jump_times", "jump_from",
                 "jump_to", "final_p", "alpha_end", "sup_dist", "jump_count")

    def __init__(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)


def _scratch(m):
    return [np.empty(m) for _ in range(5)]


def _run_constant(p0, W, Q, alpha0, t_end, dt, rng, record, target):
    """Event-exact run: jump times are pre-sampled, the flow is integrated
    between jumps with the final partial step landing on each jump time."""
    m = p0.size
    # jump schedule up to the horizon, determined a priori
    schedule = []
    t = 0.0
    a = alpha0
    while True:
        try:
            js = sample_jump(Q, a + 1, rng)
        except AbsorbingStateError:
            break
        t = t + js.holding_time
        if t >= t_end:
            break
        schedule.append((t, a, js.next_regime - 1))
        a = js.next_regime - 1

    bounds = [0.0] + [s[0] for s in schedule] + [t_end]
    segs = [bounds[i + 1] - bounds[i] for i in range(len(bounds) - 1)]

    count = 1 + sum(_kernels.record_count(s, dt) for s in segs) if record else 1
    times = np.empty(count)
    states = np.empty((count, m))
    regimes = np.empty(count, dtype=np.int32)
    times[0] = 0.0
    states[0] = p0
    regimes[0] = alpha0 + 1

    p = p0.copy()
    scratch = _scratch(m)
    idx = 1
    sup = 0.0 if target < 0 else 1.0 - p0[target]
    alpha = alpha0
    for si, seg in enumerate(segs):
        n_full, take_rem = _kernels.segment_plan(seg, dt)
        before = idx
        idx, status, t_fail, sup = _kernels.advance_segment(
            p, W[alpha], bounds[si], bounds[si + 1], dt, n_full, take_rem,
            record, times, states, idx, target, sup, *scratch)
        if status == 1:
            raise NonFiniteStateError(t_fail)
        if record:
            regimes[before:idx] = alpha + 1
        if si < len(schedule):
            alpha = schedule[si][2]
            if record and idx > before:
                # the sample at the jump time carries the post-jump regime
                regimes[idx - 1] = alpha + 1

    jt = np.array([s[0] for s in schedule])
    jf = np.array([s[1] + 1 for s in schedule], dtype=np.int32)
    jto = np.array([s[2] + 1 for s in schedule], dtype=np.int32)
    return _RunResult(times=times[:idx], states=states[:idx], regimes=regimes[:idx],
                      jump_times=jt, jump_from=jf, jump_to=jto,
                      final_p=p, alpha_end=alpha, sup_dist=sup,
                      jump_count=len(schedule))


def _run_state_dependent(p0, W, basis, alpha0, t_end, dt, rng, record, target):
    """Euler-coupled run: one flow step per dt, then one draw of the regime
    at the step's end from row alpha of I + Q(P)*dt (flow first, then jump)."""
    m = p0.size
    n_full, take_rem = _kernels.segment_plan(t_end, dt)
    total = n_full + (1 if take_rem else 0)
    uniforms = rng.random(total)

    rec_n = total if record else 0
    times = np.empty(1 + rec_n)
    states = np.empty((1 + rec_n, m))
    regimes = np.empty(1 + rec_n, dtype=np.int64)
    times[0] = 0.0
    states[0] = p0
    regimes[0] = alpha0
    jump_t = np.empty(total)
    jump_from = np.empty(total, dtype=np.int64)
    jump_to = np.empty(total, dtype=np.int64)

    p = p0.copy()
    idx, nj, status, t_fail, alpha_end, sup = _kernels.run_state_dependent(
        p, W, basis, alpha0, dt, n_full, take_rem, t_end, uniforms,
        record, times[1:], states[1:], regimes[1:],
        jump_t, jump_from, jump_to, target)
    if status == 1:
        raise NonFiniteStateError(t_fail)
    if status == 2:
        raise StepTooLargeError(
            f"step too large for the switching approximation at t={t_fail:.6g}; reduce dt",
            t=t_fail)
    stop = 1 + idx
    return _RunResult(times=times[:stop], states=states[:stop],
                      regimes=(regimes[:stop] + 1).astype(np.int32),
                      jump_times=jump_t[:nj].copy(),
                      jump_from=(jump_from[:nj] + 1).astype(np.int32),
                      jump_to=(jump_to[:nj] + 1).astype(np.int32),
                      final_p=p, alpha_end=alpha_end, sup_dist=sup,
                      jump_count=nj)


def _run(spec, p0, alpha0_0b, t_end, dt, rng, record, target=-1):
    W = np.ascontiguousarray(spec.landscape.w.T)
    gen = spec.generator
    if gen.is_state_dependent:
        return _run_state_dependent(p0, W, gen.basis, alpha0_0b, t_end, dt,
                                    rng, record, target)
    return _run_constant(p0, W, gen.q, alpha0_0b, t_end, dt, rng, record, target)


def simulate(spec: ModelSpec, P0, alpha0: int, t_end: float,
             dt: float = DEFAULT_DT, seed: int = 0) -> HybridTrajectory:
    """Simulate one hybrid trajectory.

    State-independent generators use event-exact switching (jump times
    sampled a priori, flow integrated onto them); state-dependent ones use
    the per-step I + Q(P)*dt approximation. Identical arguments give a
    byte-identical trajectory.

    Args:
        spec: validated model (errors raise ModelValidationError).
        P0: initial frequencies (SimplexState or array-like).
        alpha0: initial regime, 1-based.
        t_end: horizon.
        dt: integrator step.
        seed: seed for the run's private random stream.
    """
    require_valid(spec)
    p0 = as_state_vector(P0)
    if p0.size != spec.m:
        raise ValueError(f"initial state has {p0.size} components, model has {spec.m}")
    if not 1 <= alpha0 <= spec.n:
        raise IndexError(f"alpha0 {alpha0} out of range 1..{spec.n}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    res = _run(spec, p0, alpha0 - 1, t_end, dt, rng, record=True)
    return HybridTrajectory(times=res.times, states=res.states, regimes=res.regimes,
                            jump_times=res.jump_times, jump_from=res.jump_from,
                            jump_to=res.jump_to, seed=seed,
                            fingerprint=spec.fingerprint())


def classify_outcome(traj: HybridTrajectory,
                     epsilon: float = DEFAULT_EPSILON) -> OutcomeLabel:
    """Label the trajectory endpoint by its sup-norm distance to the vertices."""
    if traj.times.size == 0:
        raise ValueError("empty trajectory")
    return classify_final_state(traj.final_state(), epsilon)


def classify_final_state(p: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> OutcomeLabel:
    # sup-norm distance to vertex e_i is 1 - P_i, so the nearest vertex is the argmax
    p = np.asarray(p, dtype=float)
    i = int(np.argmax(p))
    dist = 1.0 - p[i]
    if dist < epsilon:
        return OutcomeLabel(kind="fixation", vertex=i + 1, final_state=p, final_dist=dist)
    if dist > POLYMORPHIC_FACTOR * epsilon:
        return OutcomeLabel(kind="polymorphic", vertex=None, final_state=p, final_dist=dist)
    return OutcomeLabel(kind="undecided", vertex=None, final_state=p, final_dist=dist)
