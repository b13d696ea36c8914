"""Markov jump-process machinery: stationary distributions and jump sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AbsorbingStateError, NumericalError, StepTooLargeError
from .model import (EDGE_TOL, GeneratorSpec, as_state_vector, check_q_property,
                    communicating_classes, is_irreducible)

RESIDUAL_FAIL = 1e-8   # stationary solve aborts above this
ABSORBING_TOL = 1e-12  # exit rate at or below this counts as absorbing


@dataclass(frozen=True)
class StationaryDistribution:
    """Solution of pi @ Q = 0, sum(pi) = 1.

    unique is True iff the generator is irreducible; for a reducible
    generator the returned pi is supported on one closed communicating
    class (the one containing the smallest state index).
    """

    pi: np.ndarray
    unique: bool
    residual: float


@dataclass(frozen=True)
class JumpSample:
    holding_time: float
    next_regime: int  # 1-based


def _solve_on(Q: np.ndarray) -> np.ndarray:
    """Least-squares solve of pi Q = 0 with the normalization row appended."""
    n = Q.shape[0]
    A = np.vstack([Q.T, np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    np.clip(pi, 0.0, None, out=pi)
    s = pi.sum()
    if s <= 0:
        raise NumericalError("stationary solve produced a non-normalizable vector")
    return pi / s


def stationary_distribution(Q) -> StationaryDistribution:
    """Stationary distribution of a generator matrix.

    Q must have the q-property. Irreducible generators give the unique
    positive pi; reducible ones give a distribution supported on a closed
    communicating class, flagged unique=False.
    """
    Q = np.asarray(Q, dtype=float)
    bad = check_q_property(Q)
    if bad:
        raise ValueError("not a generator: " + "; ".join(bad))
    classes = communicating_classes(Q)
    if len(classes) == 1:
        pi = _solve_on(Q)
        unique = True
    else:
        members = next(m for m, closed in classes if closed)
        sub = _solve_on(Q[np.ix_(members, members)])
        pi = np.zeros(Q.shape[0])
        pi[members] = sub
        unique = False
    residual = float(np.abs(pi @ Q).max())
    if residual > RESIDUAL_FAIL:
        raise NumericalError(f"stationary solve residual {residual:.3e} exceeds {RESIDUAL_FAIL}")
    return StationaryDistribution(pi=pi, unique=unique, residual=residual)


def sample_next_regime(row: np.ndarray, k0: int, rate: float, u: float) -> int:
    """Inverse-CDF draw of the embedded-chain successor (0-based everywhere)."""
    n = row.size
    cum = 0.0
    last = -1
    for l in range(n):
        if l == k0:
            continue
        p = row[l] / rate
        if p <= 0.0:
            continue
        cum += p
        last = l
        if u < cum:
            return l
    return last  # u landed in the rounding gap at the top of the CDF


def sample_jump(Q, k: int, rng: np.random.Generator) -> JumpSample:
    """Exponential holding time and successor regime out of regime k (1-based).

    Raises AbsorbingStateError when regime k has no exit rate; the caller
    then runs the flow deterministically forever.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if not 1 <= k <= n:
        raise IndexError(f"regime {k} out of range 1..{n}")
    rate = -Q[k - 1, k - 1]
    if rate <= ABSORBING_TOL:
        raise AbsorbingStateError(f"regime {k} is absorbing (exit rate {rate:.3g})")
    holding = rng.exponential(1.0 / rate)
    nxt = sample_next_regime(Q[k - 1], k - 1, rate, rng.random())
    return JumpSample(holding_time=float(holding), next_regime=nxt + 1)


def transition_row(gen: GeneratorSpec, P, k: int, dt: float) -> np.ndarray:
    """Row k of I + Q(P)*dt with the diagonal defined by complement.

    The complement construction makes the row sum exactly 1. Raises
    StepTooLargeError if any entry leaves [0, 1].
    """
    p = as_state_vector(P)
    Q = gen.rate_matrix(p)
    n = Q.shape[0]
    if not 1 <= k <= n:
        raise IndexError(f"regime {k} out of range 1..{n}")
    row = Q[k - 1] * dt
    probs = np.empty(n)
    stay = 1.0
    for l in range(n):
        if l == k - 1:
            continue
        pl = row[l]
        if pl > 1.0:
            raise StepTooLargeError(
                f"step too large: transition probability {pl:.3g} > 1 at row {k}")
        probs[l] = pl
        stay -= pl
    if stay < 0.0:
        raise StepTooLargeError(
            f"step too large: staying probability {stay:.3g} < 0 at row {k}")
    probs[k - 1] = stay
    # nudge the complement entry so the left-to-right total is exactly 1
    # (the raw fold can miss by one ulp); must match the kernel's walk
    for _ in range(4):
        total = 0.0
        for l in range(n):
            total += probs[l]
        if total == 1.0:
            break
        adjusted = stay - (total - 1.0)
        if adjusted < 0.0:
            break
        stay = adjusted
        probs[k - 1] = stay
    return probs


def step_state_dependent(gen: GeneratorSpec, P, k: int, dt: float,
                         rng: np.random.Generator) -> int:
    """Draw the regime after one Euler step of the switching chain.

    Samples from the categorical distribution given by row k of
    I + Q(P)*dt. Returns the (1-based) regime at the end of the step;
    it equals k when no switch fires.
    """
    probs = transition_row(gen, P, k, dt)
    u = rng.random()
    cum = 0.0
    for l in range(probs.size):
        cum += probs[l]
        if u < cum:
            return l + 1
    return k  # rounding gap at the top of the CDF


def stationary_is_unique(Q) -> bool:
    """Irreducibility via graph reachability on entries above EDGE_TOL."""
    return is_irreducible(np.asarray(Q, dtype=float), EDGE_TOL)
