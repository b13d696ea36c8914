"""Domain types and model validation.

Conventions used throughout the package:
  - fitness tables are (m, n) arrays: row i = genotype i, column k = environment k
  - environments (regimes) are labelled 1..n in every public interface
  - genotypes / simplex vertices are labelled 1..m in every public interface
Internal arrays are 0-based; conversion happens at the API boundary.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

# Shared numeric tolerances
SIMPLEX_SUM_TOL = 1e-12    # |sum(P) - 1| at construction
SIMPLEX_NEG_TOL = 1e-15    # most negative admissible component
Q_PROPERTY_TOL = 1e-12     # row sums / off-diagonal sign of generators
EDGE_TOL = 1e-12           # q_kl > EDGE_TOL counts as a transition edge
DEGENERACY_TOL = 1e-12     # fitness / mean-fitness tie margin


@dataclass(frozen=True)
class SimplexState:
    """A genotype frequency vector on the simplex.

    Components must be >= -1e-15 (tiny negatives are clamped to 0) and sum
    to 1 within 1e-12. The stored array is read-only.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("simplex state must be a 1-D vector")
        if not np.all(np.isfinite(p)):
            raise ValueError("simplex state has non-finite components")
        if p.min() < -SIMPLEX_NEG_TOL:
            raise ValueError(f"negative component {p.min():.3e} below tolerance")
        if abs(p.sum() - 1.0) > SIMPLEX_SUM_TOL:
            raise ValueError(f"components sum to {p.sum()!r}, not 1")
        np.clip(p, 0.0, None, out=p)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return self.p.size

    @classmethod
    def uniform(cls, m: int) -> "SimplexState":
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def vertex(cls, i: int, m: int) -> "SimplexState":
        """Unit vector e_i (1-based vertex label)."""
        p = np.zeros(m)
        p[i - 1] = 1.0
        return cls(p)


def as_state_vector(P) -> np.ndarray:
    """Coerce a SimplexState or array-like to a validated frequency vector."""
    if isinstance(P, SimplexState):
        return P.p
    return SimplexState(np.asarray(P, dtype=float)).p


@dataclass(frozen=True)
class FitnessLandscape:
    """Fitness table w[i, k] of genotype i in environment k.

    Intended invariants (checked by validate_model, not the constructor):
    all entries positive; within each environment the values are pairwise
    distinct (ties are flagged as warnings, not errors).
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError("fitness table must be a (m, n) matrix with m, n >= 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @property
    def n(self) -> int:
        return self.w.shape[1]

    def env_fitness(self, k: int) -> np.ndarray:
        """Fitness column for environment k (1-based)."""
        if not 1 <= k <= self.n:
            raise IndexError(f"environment {k} out of range 1..{self.n}")
        return self.w[:, k - 1]


@dataclass(frozen=True)
class ConstantGenerator:
    """State-independent jump-rate matrix."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise ValueError("generator must be a square matrix")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    is_state_dependent = False

    def rate_matrix(self, P=None) -> np.ndarray:
        return self.q


@dataclass(frozen=True)
class StateDependentGenerator:
    """Affine-in-state family Q(P) = sum_i P_i * basis[i].

    The affine form is closed on the simplex: a convex combination of
    matrices with the q-property keeps the q-property, so Q(P) is a valid
    generator at every simplex point once each basis matrix validates.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[0] < 1:
            raise ValueError("basis must be a (m, n, n) stack of square matrices")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    @property
    def basis_count(self) -> int:
        return self.basis.shape[0]

    is_state_dependent = True

    def rate_matrix(self, P) -> np.ndarray:
        p = as_state_vector(P)
        if p.size != self.basis_count:
            raise ValueError(f"state has {p.size} components, basis expects {self.basis_count}")
        return np.einsum("i,ikl->kl", p, self.basis)


GeneratorSpec = Union[ConstantGenerator, StateDependentGenerator]


@dataclass(frozen=True)
class ModelSpec:
    """A fitness landscape coupled to a switching-rate generator."""

    landscape: FitnessLandscape
    generator: GeneratorSpec

    @property
    def m(self) -> int:
        return self.landscape.m

    @property
    def n(self) -> int:
        return self.generator.n

    def fingerprint(self) -> str:
        """sha256 over a canonical serialization of the model data."""
        if self.generator.is_state_dependent:
            gen = {"kind": "state_dependent",
                   "basis": _float_tree(self.generator.basis)}
        else:
            gen = {"kind": "constant", "q": _float_tree(self.generator.q)}
        doc = {"fitness": _float_tree(self.landscape.w), "generator": gen}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _float_tree(a: np.ndarray):
    if a.ndim == 1:
        return [repr(float(x)) for x in a]
    return [_float_tree(row) for row in a]


@dataclass
class ValidationReport:
    """Structured outcome of validate_model; never raised."""

    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def lines(self):
        out = [f"ERROR: {e}" for e in self.errors]
        out += [f"WARNING: {w}" for w in self.warnings]
        if not out:
            out = ["model valid: no errors, no warnings"]
        return out


def check_q_property(Q: np.ndarray, tol: float = Q_PROPERTY_TOL) -> list:
    """Return q-property violations ('row sum != 0' / negative off-diagonal) per row, 1-based."""
    Q = np.asarray(Q, dtype=float)
    msgs = []
    n = Q.shape[0]
    for k in range(n):
        row = Q[k]
        off = np.delete(row, k)
        if off.size and off.min() < -tol:
            msgs.append(f"q-property violated at row {k + 1}: negative off-diagonal entry")
        if abs(row.sum()) > tol:
            msgs.append(f"q-property violated at row {k + 1}: row sum != 0")
    return msgs


def reachability(Q: np.ndarray, tol: float = EDGE_TOL) -> np.ndarray:
    """Boolean all-pairs reachability over edges q_kl > tol (k != l)."""
    n = Q.shape[0]
    adj = (np.asarray(Q) > tol) & ~np.eye(n, dtype=bool)
    reach = adj | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(max(n, 2)))))):
        reach = reach | (reach @ reach)
    return reach


def is_irreducible(Q: np.ndarray, tol: float = EDGE_TOL) -> bool:
    """Strong connectivity of the positive off-diagonal graph."""
    return bool(reachability(Q, tol).all())


def communicating_classes(Q: np.ndarray, tol: float = EDGE_TOL):
    """Communicating classes (sorted by smallest member) and their closedness."""
    n = Q.shape[0]
    reach = reachability(Q, tol)
    seen = np.zeros(n, dtype=bool)
    classes = []
    for i in range(n):
        if seen[i]:
            continue
        members = np.flatnonzero(reach[i] & reach[:, i])
        seen[members] = True
        outside = np.setdiff1d(np.arange(n), members)
        closed = not (outside.size and reach[members][:, outside].any())
        classes.append((members, closed))
    classes.sort(key=lambda c: c[0][0])
    return classes


def validate_model(spec: ModelSpec) -> ValidationReport:
    """Check the model's mathematical invariants; returns a report, never raises.

    Errors: nonpositive/nonfinite fitness, dimension mismatches, q-property
    violations. Warnings: tied per-environment fitness values, reducible
    generators (reported per evaluated state for the affine family).
    """
    rep = ValidationReport()
    L, gen = spec.landscape, spec.generator
    w = L.w

    if not np.all(np.isfinite(w)):
        rep.errors.append("fitness table contains non-finite values")
    elif w.min() <= 0.0:
        ii, kk = np.unravel_index(np.argmin(w), w.shape)
        rep.errors.append(
            f"fitness must be positive: w[{ii + 1}][{kk + 1}] = {w[ii, kk]:g}")

    if gen.n != L.n:
        rep.errors.append(
            f"generator dimension {gen.n} does not match environment count {L.n}")
    if gen.is_state_dependent and gen.basis_count != L.m:
        rep.errors.append(
            f"state-dependent basis count {gen.basis_count} does not match genotype count {L.m}")

    matrices = gen.basis if gen.is_state_dependent else [gen.q]
    for idx, Q in enumerate(matrices):
        prefix = f"basis {idx + 1}: " if gen.is_state_dependent else ""
        rep.errors.extend(prefix + msg for msg in check_q_property(Q))

    # ties within an environment are a degeneracy flag, not a hard failure
    for k in range(L.n):
        col = np.sort(w[:, k])
        tied = np.flatnonzero(np.diff(col) <= DEGENERACY_TOL)
        if tied.size:
            vals = ", ".join(f"{col[t]:g}" for t in tied)
            rep.warnings.append(
                f"environment {k + 1}: tied fitness values ({vals}); "
                "stability analysis may be degenerate")

    # reducibility reported per evaluated state; nothing assumes it globally
    if not rep.errors:
        if gen.is_state_dependent:
            m = L.m
            probes = [(f"vertex {i + 1}", SimplexState.vertex(i + 1, m)) for i in range(m)]
            probes.append(("barycenter", SimplexState.uniform(m)))
            for label, P in probes:
                if not is_irreducible(gen.rate_matrix(P)):
                    rep.warnings.append(f"generator at {label} is reducible")
        elif not is_irreducible(gen.q):
            rep.warnings.append(
                "generator is reducible: no universal stationary distribution")
    return rep


def require_valid(spec: ModelSpec) -> ModelSpec:
    """Validate and raise ModelValidationError on errors (warnings pass)."""
    from .errors import ModelValidationError

    rep = validate_model(spec)
    if not rep.ok:
        raise ModelValidationError(rep.errors)
    return spec
