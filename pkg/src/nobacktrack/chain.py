"""Finite Markov chains: validation, stationary distributions and balance checks.

A chain is a row-stochastic matrix ``T`` together with an ordered tuple of
opaque string labels.  Distributions and functions of state are plain 1-d
numpy arrays aligned with that ordering; :func:`as_distribution` and
:func:`as_state_function` validate them.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    NegativeEntry,
    NonUniqueStationary,
    NotSquare,
    NumericalFailure,
    RowSumViolation,
    ZeroTargetProbability,
)

TOL_STOCHASTIC = 1e-9
TOL_LINEAR = 1e-10


@dataclass(frozen=True, eq=False)
class FiniteChain:
    """Immutable finite-state Markov chain.

    Build instances with :func:`validate_chain`; the constructor itself
    performs no checks beyond freezing the matrix.
    """

    states: tuple
    T: np.ndarray = field(repr=False)

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        T.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))

    @property
    def n(self) -> int:
        return self.T.shape[0]

    def index(self, label) -> int:
        """Position of a state given its label (or an integer index)."""
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < self.n:
                raise IndexError(f"state index {label} out of range")
            return int(label)
        return self.states.index(str(label))

    def successors(self, x: int) -> np.ndarray:
        return np.flatnonzero(self.T[x] > 0)

    def __len__(self):
        return self.n


def default_labels(n: int) -> tuple:
    return tuple(str(i) for i in range(n))


def validate_chain(T, tol: float = TOL_STOCHASTIC, states: Sequence | None = None) -> FiniteChain:
    """Check that ``T`` is a transition matrix and wrap it as a chain.

    Entries within ``tol`` outside of [0, 1] are clipped; rows are never
    renormalized.
    """
    T = np.array(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 1:
        raise NotSquare(f"transition matrix must be square and non-empty, got shape {T.shape}")
    if not np.all(np.isfinite(T)):
        raise NumericalFailure("transition matrix has non-finite entries")
    bad = np.argwhere((T < -tol) | (T > 1 + tol))
    if len(bad):
        r, c = bad[0]
        raise NegativeEntry(int(r), int(c), float(T[r, c]))
    T = np.clip(T, 0.0, 1.0)
    sums = T.sum(axis=1)
    off = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if len(off):
        raise RowSumViolation(int(off[0]), float(sums[off[0]]))
    if states is None:
        states = default_labels(T.shape[0])
    if len(states) != T.shape[0]:
        raise DimensionMismatch(f"{len(states)} labels for a {T.shape[0]}-state chain")
    if len(set(map(str, states))) != len(states):
        raise ValueError("state labels must be unique")
    return FiniteChain(tuple(states), T)


def as_distribution(p, n: int | None = None, tol: float = TOL_STOCHASTIC) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (n is not None and p.shape[0] != n):
        raise DimensionMismatch(f"distribution of shape {p.shape} for {n} states")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError("not a probability vector")
    return np.clip(p, 0.0, None)


def as_state_function(f, n: int | None = None) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or (n is not None and f.shape[0] != n):
        raise DimensionMismatch(f"function of shape {f.shape} for {n} states")
    if not np.all(np.isfinite(f)):
        raise ValueError("state function has non-finite values")
    return f


def stationary_distribution(chain: FiniteChain, tol: float = TOL_LINEAR) -> np.ndarray:
    """Solve pi T = pi, sum(pi) = 1 directly.

    One balance equation is replaced by the normalization constraint.  Works
    for periodic chains; raises :class:`NonUniqueStationary` when the chain
    has more than one closed class.
    """
    n = chain.n
    if n == 1:
        return np.ones(1)
    A = np.eye(n) - chain.T
    if np.linalg.matrix_rank(A) < n - 1:
        raise NonUniqueStationary("balance equations have rank deficiency > 1")
    M = A.T.copy()
    M[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    if np.any(pi < -tol):
        raise NumericalFailure(f"stationary solve produced negative mass {pi.min()!r}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.max(np.abs(pi @ chain.T - pi))
    if residual > tol:
        raise NumericalFailure(f"stationary residual {residual:.3e} exceeds {tol:.1e}")
    return pi


def _check_dims(chain: FiniteChain, dist) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (chain.n,):
        raise DimensionMismatch(f"distribution of shape {dist.shape} for {chain.n} states")
    return dist


def check_invariant(chain: FiniteChain, dist, tol: float = TOL_LINEAR) -> bool:
    dist = _check_dims(chain, dist)
    return bool(np.max(np.abs(dist @ chain.T - dist)) <= tol)


def balance_defect(chain: FiniteChain, dist) -> float:
    """Largest violation of pi(x) T(x,y) = pi(y) T(y,x)."""
    dist = _check_dims(chain, dist)
    flow = dist[:, None] * chain.T
    return float(np.max(np.abs(flow - flow.T)))


def check_detailed_balance(chain: FiniteChain, dist, tol: float = TOL_LINEAR) -> bool:
    return balance_defect(chain, dist) <= tol


def check_irreducible(chain: FiniteChain) -> bool:
    if chain.n == 1:
        return True
    n_comp, _ = connected_components(chain.T > 0, directed=True, connection="strong")
    return n_comp == 1


def period(chain: FiniteChain) -> int:
    """Period of an irreducible chain (gcd of cycle lengths through BFS levels)."""
    level = np.full(chain.n, -1)
    level[0] = 0
    queue = deque([0])
    g = 0
    while queue:
        u = queue.popleft()
        for v in chain.successors(u):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, int(level[u] + 1 - level[v]))
    return g if g else 1


def metropolize(proposal: FiniteChain, target) -> FiniteChain:
    """Metropolis-Hastings chain for ``target`` driven by ``proposal``.

    Off-diagonal moves are accepted with probability
    ``min(1, pi(y) S(y,x) / (pi(x) S(x,y)))``; rejected mass stays on the
    diagonal.  A move whose reverse proposal is impossible is never accepted.
    """
    pi = _check_dims(proposal, target)
    if np.any(pi <= 0):
        raise ZeroTargetProbability("target must be strictly positive")
    S = proposal.T
    forward = pi[:, None] * S
    # pi(x) T(x,y) = min(pi(x) S(x,y), pi(y) S(y,x)), symmetric by construction
    T = np.minimum(forward, forward.T) / pi[:, None]
    np.fill_diagonal(T, 0.0)
    np.fill_diagonal(T, 1.0 - T.sum(axis=1))
    return validate_chain(T, states=proposal.states)
