"""Mean-fitness classification, partition sweeps, and Lyapunov certificates.

Certificate construction follows the reduced-system route: pick a target
vertex, eliminate its coordinate through the simplex constraint, and build
per-coordinate power functions V = (1 - gamma*c^k) * x^gamma whose
switching Lie derivative is negative on an annulus around the vertex.
gamma > 0 certifies asymptotic stability in probability of the leader's
vertex; gamma < 0 (V with a pole at the vertex) certifies instability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from .errors import (DegenerateLeaderError, PoleEvaluationError,
                     ReducibleGeneratorError, ResidualTooLargeError)
from .model import (DEGENERACY_TOL, FitnessLandscape, ModelSpec, SimplexState,
                    check_q_property, is_irreducible)
from .regimes import StationaryDistribution, stationary_distribution

ORTHOGONALITY_TOL = 1e-10   # |pi . rhs| admissible before solving
RESIDUAL_TOL = 1e-9         # ||Q c - rhs||_inf after solving
BISECT_WIDTH = 1e-12        # bracket width for boundary refinement
BOUNDARY_MERGE = 1e-9       # boundaries closer than this collapse to one
DEFAULT_ANNULUS = (1e-4, 0.05)
GAMMA_SAFETY = 0.5          # fraction of the strict bound actually used


@dataclass(frozen=True)
class Degenerate:
    """Tie marker: the listed genotypes share the top mean fitness."""

    tied: tuple

    def __str__(self):
        return "degenerate(" + "|".join(str(i) for i in self.tied) + ")"


Winner = Union[int, Degenerate]


def mean_fitness(pi, L: FitnessLandscape) -> np.ndarray:
    """Stationary-averaged fitness of every genotype: component i is pi . w_i."""
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (L.n,):
        raise ValueError(f"pi has shape {pi.shape}, landscape has {L.n} environments")
    return L.w @ pi


def leading_genotype(pi, L: FitnessLandscape) -> Winner:
    """Genotype with the highest mean fitness (1-based), or Degenerate on a tie.

    The leader must win by more than 1e-12; anything closer is reported as
    a tie, since the stability theory is silent on the tie set.
    """
    means = mean_fitness(pi, L)
    order = np.argsort(means)
    top = order[-1]
    if L.m == 1:
        return 1
    if means[top] - means[order[-2]] > DEGENERACY_TOL:
        return int(top) + 1
    tied = tuple(sorted(int(i) + 1 for i in
                        np.flatnonzero(means >= means[top] - DEGENERACY_TOL)))
    return Degenerate(tied=tied)


@dataclass(frozen=True)
class MeanFitnessReport:
    means: np.ndarray
    leader: Winner
    pi: StationaryDistribution


def mean_fitness_report(sd: StationaryDistribution, L: FitnessLandscape) -> MeanFitnessReport:
    return MeanFitnessReport(means=mean_fitness(sd.pi, L),
                             leader=leading_genotype(sd.pi, L), pi=sd)


# ---------------------------------------------------------------------------
# partition of the stationary simplex by the leading genotype


@dataclass(frozen=True)
class PartitionMap:
    """Winner of the mean-fitness comparison over a grid of stationary
    distributions, with tie boundaries refined by bisection."""

    points: np.ndarray           # (num_points, n)
    winners: list
    boundary_points: list        # list of pi vectors where the top two tie
    boundaries_q: Optional[list]  # first component of each boundary (n == 2)
    resolution: int


def _winner_set(w: Winner) -> tuple:
    return (w,) if isinstance(w, int) else w.tied


def _bisect_tie(L, pa, pb, a, b):
    """Root of mean_a - mean_b on the segment pa->pb (linear in the parameter)."""

    def f(s):
        pi = (1.0 - s) * pa + s * pb
        mm = mean_fitness(pi, L)
        return mm[a - 1] - mm[b - 1]

    lo, hi = 0.0, 1.0
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return pa
    if fhi == 0.0:
        return pb
    if flo * fhi > 0.0:
        return None
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    s = 0.5 * (lo + hi)
    return (1.0 - s) * pa + s * pb


def _refine_boundaries(L, points, winners, adjacency):
    found = []
    for ia, ib in adjacency:
        wa, wb = winners[ia], winners[ib]
        if wa == wb:
            continue
        for a in _winner_set(wa):
            for b in _winner_set(wb):
                if a == b:
                    continue
                root = _bisect_tie(L, points[ia], points[ib], a, b)
                if root is not None:
                    found.append(root)
    # dedupe: boundaries within BOUNDARY_MERGE collapse
    found.sort(key=lambda p: tuple(p))
    out = []
    for p in found:
        if not out or np.abs(out[-1] - p).max() > BOUNDARY_MERGE:
            out.append(p)
    return out


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def partition_sweep(L: FitnessLandscape, resolution: int) -> PartitionMap:
    """Winner map over the simplex of stationary distributions.

    n == 2 sweeps q in [0, 1] (pi = (q, 1-q)); n >= 3 sweeps a barycentric
    lattice. Boundaries are bracketed by adjacent grid points whose winner
    differs and refined by bisection of the tied pair's mean-fitness gap.
    """
    if resolution < 1:
        raise ValueError("resolution must be a positive integer")
    n = L.n
    if n == 1:
        pt = np.array([[1.0]])
        return PartitionMap(points=pt, winners=[leading_genotype(pt[0], L)],
                            boundary_points=[], boundaries_q=None,
                            resolution=resolution)
    if n == 2:
        qs = np.linspace(0.0, 1.0, resolution + 1)
        points = np.column_stack([qs, 1.0 - qs])
        winners = [leading_genotype(p, L) for p in points]
        adjacency = [(i, i + 1) for i in range(len(qs) - 1)]
        bpts = _refine_boundaries(L, points, winners, adjacency)
        return PartitionMap(points=points, winners=winners,
                            boundary_points=bpts,
                            boundaries_q=sorted(float(p[0]) for p in bpts),
                            resolution=resolution)

    comps = list(_compositions(resolution, n))
    index = {c: i for i, c in enumerate(comps)}
    points = np.array(comps, dtype=float) / resolution
    winners = [leading_genotype(p, L) for p in points]
    adjacency = []
    for c, i in index.items():
        for a in range(n):
            if c[a] == 0:
                continue
            for b in range(n):
                if b == a:
                    continue
                nb = list(c)
                nb[a] -= 1
                nb[b] += 1
                j = index[tuple(nb)]
                if j > i:
                    adjacency.append((i, j))
    bpts = _refine_boundaries(L, points, winners, adjacency)
    return PartitionMap(points=points, winners=winners, boundary_points=bpts,
                        boundaries_q=None, resolution=resolution)


# ---------------------------------------------------------------------------
# reduced dynamics and certificates


def reduced_indices(m: int, target: int) -> tuple:
    """Genotypes kept after eliminating the target's coordinate (ascending, 1-based)."""
    return tuple(j for j in range(1, m + 1) if j != target)


def fitness_gaps(L: FitnessLandscape, target: int) -> np.ndarray:
    """Gap matrix over the reduced genotypes: row g, column k is
    w[reduced_g, k] - w[target, k]."""
    idx = [j - 1 for j in reduced_indices(L.m, target)]
    return L.w[idx, :] - L.w[target - 1, :]


def reduced_vector_field(x, k: int, L: FitnessLandscape, target: int,
                         coupling: str = "per_competitor") -> np.ndarray:
    """Replicator flow in reduced coordinates (target's coordinate eliminated).

    dx_g/dt = x_g * (a_g - sum_j a_j x_j) with a_j the fitness gap of
    genotype j over the target in environment k. coupling='own_rate'
    switches the cross term to use a_g for every competitor; this alternate
    closure is kept for comparison only and is not used by the certificates.
    """
    x = np.asarray(x, dtype=float)
    a = fitness_gaps(L, target)[:, k - 1]
    if x.shape != a.shape:
        raise ValueError(f"reduced state needs {a.size} components, got {x.size}")
    if coupling == "per_competitor":
        drift = a @ x
        return x * (a - drift)
    if coupling == "own_rate":
        return x * a * (1.0 - x.sum())
    raise ValueError(f"unknown coupling {coupling!r}")


@dataclass(frozen=True)
class StabilityCertificate:
    """Data of a power-function certificate at one vertex.

    kind 'stability': target == leader; genotypes lists every other
    genotype g with its beta_g = -pi . (w_g - w_leader) and solution c_g of
    Q c = (w_g - w_leader) + beta_g * 1; gamma in (0, 1).

    kind 'instability': target is a non-leading genotype i; genotypes is
    (i,); beta holds pi . (w_leader - w_i) and c solves
    Q c = (w_leader - w_i) - beta * 1; gamma in (-1, 0), so the certificate
    function has a pole at the target vertex.

    gamma is GAMMA_SAFETY times gamma_bound, the strict admissibility bound
    assembled from the ratio constraints and coefficient positivity.
    """

    kind: str
    target: int
    leader: int
    m: int
    pi: np.ndarray
    genotypes: tuple
    beta: np.ndarray
    c: np.ndarray
    gamma: float
    gamma_bound: float
    residuals: np.ndarray
    coeff_positive: np.ndarray

    @property
    def reduced(self) -> tuple:
        return reduced_indices(self.m, self.target)


def _prepare(L, Q):
    if L.m < 2:
        raise ValueError("certificates need at least two genotypes")
    Q = np.asarray(Q, dtype=float)
    bad = check_q_property(Q)
    if bad:
        raise ValueError("not a generator: " + "; ".join(bad))
    if not is_irreducible(Q):
        raise ReducibleGeneratorError(
            "generator is reducible: the kernel is not one-dimensional, so the "
            "certificate systems need not be solvable")
    sd = stationary_distribution(Q)
    leader = leading_genotype(sd.pi, L)
    if isinstance(leader, Degenerate):
        raise DegenerateLeaderError(leader.tied)
    return Q, sd.pi, leader


def _solve_shifted(Q, pi, rhs):
    dot = abs(float(pi @ rhs))
    if dot > ORTHOGONALITY_TOL:
        raise ResidualTooLargeError(
            f"right-hand side not orthogonal to the generator kernel: |pi.rhs| = {dot:.3e}")
    c, *_ = np.linalg.lstsq(Q, rhs, rcond=None)
    residual = float(np.abs(Q @ c - rhs).max())
    if residual > RESIDUAL_TOL:
        raise ResidualTooLargeError(
            f"certificate system residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    return c, residual


def build_stability_certificate(L: FitnessLandscape, Q) -> StabilityCertificate:
    """Certificate of asymptotic stability in probability for the leader's vertex.

    For every non-leading genotype g, beta_g = -pi . a_g > 0 (a_g the gap
    vector w_g - w_leader), c_g is the minimum-norm solution of
    Q c = a_g + beta_g * 1, and gamma is half the strict bound
    min(1, min ratios pi.a_g / (c_g^k a_g^k) over negative products,
    min 1/c_g^k over positive c_g^k), keeping every admissibility
    inequality strict and all coefficients 1 - gamma*c positive.
    """
    Q, pi, leader = _prepare(L, Q)
    others = reduced_indices(L.m, leader)
    n = L.n
    betas, cs, residuals = [], [], []
    bound_cands = [1.0]
    for g in others:
        a = L.w[g - 1] - L.w[leader - 1]
        beta = -float(pi @ a)
        c, residual = _solve_shifted(Q, pi, a + beta)
        pia = float(pi @ a)
        for k in range(n):
            prod = c[k] * a[k]
            if prod < 0.0:
                bound_cands.append(pia / prod)
            if c[k] > 0.0:
                bound_cands.append(1.0 / c[k])
        betas.append(beta)
        cs.append(c)
        residuals.append(residual)
    gamma_bound = float(min(bound_cands))
    gamma = GAMMA_SAFETY * gamma_bound
    c_arr = np.array(cs)
    return StabilityCertificate(
        kind="stability", target=leader, leader=leader, m=L.m, pi=pi,
        genotypes=others, beta=np.array(betas), c=c_arr,
        gamma=gamma, gamma_bound=gamma_bound,
        residuals=np.array(residuals),
        coeff_positive=(1.0 - gamma * c_arr) > 0.0)


def build_instability_certificate(L: FitnessLandscape, Q, i: int) -> StabilityCertificate:
    """Certificate of instability in probability for a non-leading vertex e_i.

    beta = pi . (w_leader - w_i) > 0, c solves Q c = a - beta * 1 with
    a = w_leader - w_i, and gamma is half the strict negative bound
    max(-1, max ratios pi.a / (c^k a^k) over negative products,
    max 1/c^k over negative c^k). The certificate function
    (1 - gamma*c^k) * P_leader^gamma blows up at the target vertex.
    """
    Q, pi, leader = _prepare(L, Q)
    if not 1 <= i <= L.m:
        raise IndexError(f"genotype {i} out of range 1..{L.m}")
    if i == leader:
        raise ValueError(f"target genotype {i} is the leader; instability needs a non-leader")
    a = L.w[leader - 1] - L.w[i - 1]
    beta = float(pi @ a)
    c, residual = _solve_shifted(Q, pi, a - beta)
    pia = float(pi @ a)
    bound_cands = [-1.0]
    for k in range(L.n):
        prod = c[k] * a[k]
        if prod < 0.0:
            bound_cands.append(pia / prod)
        if c[k] < 0.0:
            bound_cands.append(1.0 / c[k])
    gamma_bound = float(max(bound_cands))
    gamma = GAMMA_SAFETY * gamma_bound
    c_arr = c[None, :]
    return StabilityCertificate(
        kind="instability", target=i, leader=leader, m=L.m, pi=pi,
        genotypes=(i,), beta=np.array([beta]), c=c_arr,
        gamma=gamma, gamma_bound=gamma_bound,
        residuals=np.array([residual]),
        coeff_positive=(1.0 - gamma * c_arr) > 0.0)


def certificate_value(cert: StabilityCertificate, x, k: int) -> float:
    """Evaluate the certificate function V at a reduced-coordinate point."""
    x = np.asarray(x, dtype=float)
    gamma = cert.gamma
    k0 = k - 1
    if cert.kind == "stability":
        return float(np.sum((1.0 - gamma * cert.c[:, k0]) * x ** gamma))
    pos = cert.reduced.index(cert.leader)
    p1 = x[pos]
    if p1 <= 0.0:
        raise PoleEvaluationError("certificate function has a pole where the "
                                  "leader's coordinate vanishes")
    return float((1.0 - gamma * cert.c[0, k0]) * p1 ** gamma)


def lie_derivative(cert: StabilityCertificate, x, k: int,
                   L: FitnessLandscape, Q,
                   coupling: str = "per_competitor") -> float:
    """Switching Lie derivative of the certificate function at a reduced point.

    Evaluates flow-gradient plus generator terms against the full nonlinear
    reduced field (no small-x truncation); the x^(gamma-1) gradient factor
    is folded into x^gamma analytically, which also extends the stability
    case continuously onto the coordinate planes.
    """
    x = np.asarray(x, dtype=float)
    Q = np.asarray(Q, dtype=float)
    d = L.m - 1
    if x.shape != (d,):
        raise ValueError(f"reduced state needs {d} components, got {x.size}")
    if x.min() < 0.0:
        raise ValueError("reduced coordinates must be nonnegative")
    gamma = cert.gamma
    k0 = k - 1
    a = fitness_gaps(L, cert.target)[:, k0]

    if cert.kind == "stability":
        if coupling == "per_competitor":
            drift = a - (a @ x)
        else:
            drift = a * (1.0 - x.sum())
        pow_x = x ** gamma
        flow = gamma * (1.0 - gamma * cert.c[:, k0]) * pow_x * drift
        jump = pow_x * ((1.0 - gamma * cert.c) @ Q[k0])
        return float(np.sum(flow + jump))

    pos = cert.reduced.index(cert.leader)
    p1 = x[pos]
    if p1 <= 0.0:
        raise PoleEvaluationError("certificate function has a pole where the "
                                  "leader's coordinate vanishes")
    if coupling == "per_competitor":
        drift = a[pos] - (a @ x)
    else:
        drift = a[pos] * (1.0 - x.sum())
    pow1 = p1 ** gamma
    c = cert.c[0]
    flow = gamma * (1.0 - gamma * c[k0]) * pow1 * drift
    jump = pow1 * float((1.0 - gamma * c) @ Q[k0])
    return float(flow + jump)


def lie_derivative_general(value, gradient, x, k: int, L: FitnessLandscape,
                           Q, target: int) -> float:
    """Switching Lie derivative of an arbitrary C1 family of functions.

    value(x, k) and gradient(x, k) define the family on the reduced
    coordinates obtained by eliminating the target vertex. Useful for
    cross-checks; the certificate path uses the analytic specialization
    in lie_derivative.
    """
    x = np.asarray(x, dtype=float)
    Q = np.asarray(Q, dtype=float)
    F = reduced_vector_field(x, k, L, target)
    flow = float(np.dot(np.asarray(gradient(x, k), dtype=float), F))
    jump = float(sum(Q[k - 1, l] * value(x, l + 1) for l in range(Q.shape[0])))
    return flow + jump


def _lie_batch(cert, X, k0, a_full, Q):
    """Vectorized lie_derivative over rows of X for one (0-based) regime."""
    gamma = cert.gamma
    a = a_full[:, k0]
    if cert.kind == "stability":
        drift = a[None, :] - (X @ a)[:, None]
        pow_x = X ** gamma
        flow = gamma * (1.0 - gamma * cert.c[:, k0])[None, :] * pow_x * drift
        jump = pow_x * ((1.0 - gamma * cert.c) @ Q[k0])[None, :]
        return (flow + jump).sum(axis=1)
    pos = cert.reduced.index(cert.leader)
    drift = a[pos] - X @ a
    pow1 = X[:, pos] ** gamma
    c = cert.c[0]
    flow = gamma * (1.0 - gamma * c[k0]) * pow1 * drift
    jump = pow1 * float((1.0 - gamma * c) @ Q[k0])
    return flow + jump


def sample_annulus(rng: np.random.Generator, d: int, rho: float, r: float,
                   size: int) -> np.ndarray:
    """Uniform points x > 0 with rho <= sum(x) <= r (reduced coordinates).

    Draws uniformly on the corner simplex of radius r and rejects the
    (rho/r)^d sliver below rho; rejection is negligible for rho << r.
    """
    if not 0.0 < rho < r:
        raise ValueError("annulus requires 0 < rho < r")
    out = np.empty((size, d))
    have = 0
    while have < size:
        batch = max(size - have, 64)
        y = rng.dirichlet(np.ones(d + 1), size=batch)
        x = r * y[:, :d]
        keep = x[x.sum(axis=1) >= rho]
        take = min(size - have, keep.shape[0])
        out[have:have + take] = keep[:take]
        have += take
    return out


@dataclass(frozen=True)
class VerificationReport:
    """Numerical audit of a certificate on an annulus around its vertex."""

    passed: bool
    max_lie: float
    argmax_point: np.ndarray
    argmax_regime: int
    samples: int
    rho: float
    r: float
    seed: int
    pole_diverges: Optional[bool]  # instability only


def verify_certificate(cert: StabilityCertificate, L: FitnessLandscape, Q,
                       annulus=DEFAULT_ANNULUS, samples: int = 10000,
                       seed: int = 0) -> VerificationReport:
    """Sample the annulus and check ℒV < 0 at every (point, regime) pair.

    PASS requires a strictly negative maximum. Instability certificates
    additionally check the pole: V must grow along a ray into the vertex.
    Finite sampling makes this an audit, not a proof; the annulus and
    sample count are reported alongside the verdict.
    """
    rho, r = float(annulus[0]), float(annulus[1])
    Q = np.asarray(Q, dtype=float)
    d = cert.m - 1
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    X = sample_annulus(rng, d, rho, r, samples)
    a_full = fitness_gaps(L, cert.target)

    best = -np.inf
    arg_x = X[0]
    arg_k = 1
    for k0 in range(L.n):
        vals = _lie_batch(cert, X, k0, a_full, Q)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best = float(vals[j])
            arg_x = X[j].copy()
            arg_k = k0 + 1

    pole = None
    if cert.kind == "instability":
        ray = np.full(d, 1.0 / d)
        radii = [r, r / 10.0, r / 100.0, r / 1000.0]
        pole = True
        for k in range(1, L.n + 1):
            vals = [certificate_value(cert, rad * ray, k) for rad in radii]
            if not all(v2 > v1 for v1, v2 in zip(vals, vals[1:])):
                pole = False
    passed = best < 0.0 and (pole is None or pole)
    return VerificationReport(passed=passed, max_lie=best, argmax_point=arg_x,
                              argmax_regime=arg_k, samples=samples, rho=rho,
                              r=r, seed=seed, pole_diverges=pole)


# ---------------------------------------------------------------------------
# state-dependent generators: local (heuristic) vertex analysis


@dataclass(frozen=True)
class LocalVertexReport:
    """Leader analysis with pi taken from Q evaluated at one vertex.

    Heuristic: with a state-dependent generator there is no universal
    stationary distribution, so this freezes Q at the vertex and reports
    what the constant-Q theory would conclude there.
    """

    vertex: int
    pi: np.ndarray
    unique: bool
    leader: Winner
    locally_stable: Optional[bool]
    heuristic: bool = True


def local_leader_heuristic(spec: ModelSpec) -> List[LocalVertexReport]:
    """Per-vertex stationary distribution and would-be leader for Q(e_i)."""
    L = spec.landscape
    out = []
    for v in range(1, L.m + 1):
        Qv = spec.generator.rate_matrix(SimplexState.vertex(v, L.m))
        sd = stationary_distribution(Qv)
        leader = leading_genotype(sd.pi, L)
        stable = (leader == v) if isinstance(leader, int) else None
        out.append(LocalVertexReport(vertex=v, pi=sd.pi, unique=sd.unique,
                                     leader=leader, locally_stable=stable))
    return out
