"""Monte Carlo estimation of the probabilistic stability notions.

Runs are embarrassingly parallel: run j draws from its own stream seeded
by (master_seed, j), so reports are identical across reruns and across
thread counts. The worker count comes from the threads argument or the
SWITCHREP_THREADS environment variable (default 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import NonFiniteStateError, StepTooLargeError
from .hybrid import DEFAULT_EPSILON, _run, classify_final_state
from .model import ModelSpec, as_state_vector, require_valid
from .replicator import DEFAULT_DT

ESCAPE_NOTE = ("escape monitored on the sampling grid over t in [0, T]; "
               "a finite horizon makes this a lower bound on the "
               "unbounded-horizon escape probability")


@dataclass(frozen=True)
class StartRegion:
    """Initial-condition sampler description.

    kind 'fixed' replays p0 every run; 'interior' draws uniformly on the
    simplex; 'vertex_ball' draws uniformly on the sup-norm ball of radius
    delta around a vertex (equivalently: the slice P_vertex >= 1 - delta).
    """

    kind: str
    p0: Optional[np.ndarray] = None
    vertex: Optional[int] = None
    delta: Optional[float] = None


def fixed_start(p0) -> StartRegion:
    return StartRegion(kind="fixed", p0=as_state_vector(p0))


def interior_start() -> StartRegion:
    return StartRegion(kind="interior")


def vertex_ball(vertex: int, delta: float) -> StartRegion:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return StartRegion(kind="vertex_ball", vertex=vertex, delta=delta)


def draw_start(region: StartRegion, m: int, rng: np.random.Generator) -> np.ndarray:
    if region.kind == "fixed":
        if region.p0.size != m:
            raise ValueError(f"fixed start has {region.p0.size} components, model has {m}")
        return region.p0.copy()
    if region.kind == "interior":
        return rng.dirichlet(np.ones(m))
    if region.kind == "vertex_ball":
        v = region.vertex
        if not 1 <= v <= m:
            raise IndexError(f"vertex {v} out of range 1..{m}")
        # the ball {||P - e_v||_inf <= delta} is exactly {P_v >= 1 - delta};
        # mapping a uniform draw on the corner simplex of radius delta onto
        # the other coordinates samples it uniformly without rejection
        y = rng.dirichlet(np.ones(m))
        p = np.empty(m)
        others = [j for j in range(m) if j != v - 1]
        p[others] = region.delta * y[:-1]
        p[v - 1] = 1.0 - region.delta * y[:-1].sum()
        return p
    raise ValueError(f"unknown start region {region.kind!r}")


@dataclass(frozen=True)
class RunRecord:
    index: int
    seed_word: int
    outcome: str          # fixation | polymorphic | undecided
    vertex: Optional[int]
    final_dist: float
    jumps: int
    escaped: Optional[bool]
    sup_dist: Optional[float]
    error: Optional[str] = None


@dataclass
class EnsembleReport:
    """Aggregated outcome counts with binomial standard errors."""

    mode: str             # fixation | escape
    n_runs: int
    m: int
    fixation_counts: np.ndarray
    polymorphic_count: int
    undecided_count: int
    escape_count: Optional[int]
    params: dict
    runs: List[RunRecord] = field(default_factory=list)
    note: Optional[str] = None

    @staticmethod
    def binomial_se(f: float, n: int) -> float:
        return math.sqrt(f * (1.0 - f) / n) if n > 0 else 0.0

    def fixation_frequency(self, vertex: int) -> float:
        return self.fixation_counts[vertex - 1] / self.n_runs

    @property
    def escape_frequency(self) -> Optional[float]:
        if self.escape_count is None:
            return None
        return self.escape_count / self.n_runs

    def frequencies(self) -> dict:
        out = {}
        for v in range(1, self.m + 1):
            f = self.fixation_frequency(v)
            out[f"fixation_{v}"] = (f, self.binomial_se(f, self.n_runs))
        for name, cnt in (("polymorphic", self.polymorphic_count),
                          ("undecided", self.undecided_count)):
            f = cnt / self.n_runs
            out[name] = (f, self.binomial_se(f, self.n_runs))
        if self.escape_count is not None:
            f = self.escape_frequency
            out["escape"] = (f, self.binomial_se(f, self.n_runs))
        return out


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("SWITCHREP_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _run_seed(master_seed: int, index: int):
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    word = int(ss.generate_state(1, np.uint64)[0])
    return np.random.default_rng(ss), word


def _one_run(spec, region, alpha0_policy, alpha0, n_env, t_end, dt, epsilon,
             master_seed, index, target0, escape_radius):
    """One ensemble member. Per-run draw order: start state, then initial
    regime (uniform policy only), then the simulation's own stream."""
    rng, word = _run_seed(master_seed, index)
    p0 = draw_start(region, spec.m, rng)
    if alpha0_policy == "uniform":
        a0 = int(rng.integers(0, n_env))
    else:
        a0 = alpha0 - 1
    try:
        res = _run(spec, p0, a0, t_end, dt, rng, record=False, target=target0)
    except (NonFiniteStateError, StepTooLargeError) as exc:
        return RunRecord(index=index, seed_word=word, outcome="undecided",
                         vertex=None, final_dist=float("nan"), jumps=0,
                         escaped=None, sup_dist=None, error=str(exc))
    label = classify_final_state(res.final_p, epsilon)
    escaped = None
    sup = None
    if target0 >= 0:
        sup = float(res.sup_dist)
        escaped = sup > escape_radius
    return RunRecord(index=index, seed_word=word, outcome=label.kind,
                     vertex=label.vertex, final_dist=label.final_dist,
                     jumps=res.jump_count, escaped=escaped, sup_dist=sup)


def _aggregate(mode, spec, records, params, track_escape) -> EnsembleReport:
    fix = np.zeros(spec.m, dtype=int)
    poly = undec = esc = 0
    for rec in records:
        if rec.outcome == "fixation":
            fix[rec.vertex - 1] += 1
        elif rec.outcome == "polymorphic":
            poly += 1
        else:
            undec += 1
        if rec.escaped:
            esc += 1
    return EnsembleReport(mode=mode, n_runs=len(records), m=spec.m,
                          fixation_counts=fix, polymorphic_count=poly,
                          undecided_count=undec,
                          escape_count=esc if track_escape else None,
                          params=params, runs=list(records),
                          note=ESCAPE_NOTE if track_escape else None)


def _map_runs(worker, n_runs, threads):
    if threads <= 1:
        return [worker(j) for j in range(n_runs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(n_runs)))


def estimate_fixation(spec: ModelSpec, start: StartRegion, n_runs: int,
                      t_end: float, dt: float = DEFAULT_DT,
                      epsilon: float = DEFAULT_EPSILON, seed: int = 0,
                      alpha0_policy: str = "uniform", alpha0: Optional[int] = None,
                      threads: Optional[int] = None) -> EnsembleReport:
    """Fixation statistics over independent hybrid runs.

    Every run is classified by classify_outcome at the horizon; failed
    runs degrade to 'undecided' with an error note rather than aborting
    the ensemble. The report is reproducible from the master seed alone.
    """
    require_valid(spec)
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    _check_alpha_policy(alpha0_policy, alpha0, spec.n)
    params = {"mode": "fixation", "n_runs": n_runs, "t_end": t_end, "dt": dt,
              "epsilon": epsilon, "seed": int(seed),
              "alpha0_policy": alpha0_policy, "alpha0": alpha0,
              "start": _region_dict(start)}

    def worker(j):
        return _one_run(spec, start, alpha0_policy, alpha0, spec.n, t_end, dt,
                        epsilon, seed, j, -1, 0.0)

    records = _map_runs(worker, n_runs, _resolve_threads(threads))
    return _aggregate("fixation", spec, records, params, track_escape=False)


def estimate_escape(spec: ModelSpec, target: int, delta: float, r: float,
                    n_runs: int, t_end: float, dt: float = DEFAULT_DT,
                    epsilon: float = DEFAULT_EPSILON, seed: int = 0,
                    alpha0_policy: str = "uniform", alpha0: Optional[int] = None,
                    threads: Optional[int] = None) -> EnsembleReport:
    """Escape statistics from starts near a vertex.

    Starts are uniform on the sup-norm delta-ball around the target
    vertex; a run escapes when its grid-sampled sup distance from the
    vertex exceeds r before the horizon.
    """
    require_valid(spec)
    if not 0.0 < delta < r < 1.0:
        raise ValueError("need 0 < delta < r < 1")
    if not 1 <= target <= spec.m:
        raise IndexError(f"vertex {target} out of range 1..{spec.m}")
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    _check_alpha_policy(alpha0_policy, alpha0, spec.n)
    region = vertex_ball(target, delta)
    params = {"mode": "escape", "n_runs": n_runs, "t_end": t_end, "dt": dt,
              "epsilon": epsilon, "seed": int(seed),
              "alpha0_policy": alpha0_policy, "alpha0": alpha0,
              "target": target, "delta": delta, "escape_radius": r,
              "start": _region_dict(region)}

    def worker(j):
        return _one_run(spec, region, alpha0_policy, alpha0, spec.n, t_end, dt,
                        epsilon, seed, j, target - 1, r)

    records = _map_runs(worker, n_runs, _resolve_threads(threads))
    return _aggregate("escape", spec, records, params, track_escape=True)


def stability_curve(spec: ModelSpec, target: int, deltas, r: float,
                    n_per_delta: int, t_end: float, dt: float = DEFAULT_DT,
                    seed: int = 0, alpha0_policy: str = "uniform",
                    alpha0: Optional[int] = None,
                    threads: Optional[int] = None) -> List[Tuple[float, float]]:
    """Escape frequency as the start radius shrinks.

    deltas must be strictly decreasing and below r; each radius gets its
    own n_per_delta-run ensemble on a child stream of the master seed.
    For a vertex that is stable in probability the curve falls toward 0.
    """
    deltas = [float(d) for d in deltas]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    if any(not 0.0 < d < r for d in deltas):
        raise ValueError("every delta must lie in (0, r)")
    out = []
    for j, d in enumerate(deltas):
        child = int(np.random.SeedSequence([int(seed), j]).generate_state(1, np.uint64)[0])
        rep = estimate_escape(spec, target, d, r, n_per_delta, t_end, dt,
                              seed=child, alpha0_policy=alpha0_policy,
                              alpha0=alpha0, threads=threads)
        out.append((d, rep.escape_frequency))
    return out


def _check_alpha_policy(policy, alpha0, n):
    if policy not in ("uniform", "fixed"):
        raise ValueError(f"unknown alpha0 policy {policy!r}")
    if policy == "fixed":
        if alpha0 is None or not 1 <= alpha0 <= n:
            raise ValueError(f"fixed policy needs alpha0 in 1..{n}")


def _region_dict(region: StartRegion) -> dict:
    d = {"kind": region.kind}
    if region.p0 is not None:
        d["p0"] = [float(x) for x in region.p0]
    if region.vertex is not None:
        d["vertex"] = region.vertex
    if region.delta is not None:
        d["delta"] = region.delta
    return d
