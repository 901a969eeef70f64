"""Pair-state lifting of a reversible chain and the no-backtracking modification.

The lifted chain lives on pairs ``(x, y)`` with ``T(x, y) > 0``.  One
transition swaps the two components and then redraws the second component
from an update kernel ``U_x(y, .)`` anchored at the (new) first component.
With the degenerate kernel ``U_x(y, z) = T(x, z)`` this replays the original
chain; with Liu's modified Gibbs kernel it avoids returning to the state it
just came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .chain import (
    TOL_LINEAR,
    FiniteChain,
    as_state_function,
    check_detailed_balance,
    stationary_distribution,
    validate_chain,
)
from .errors import KernelConditionViolation, NotReversible
from .rng import make_rng
from .variance import Trajectory


def pair_label(chain: FiniteChain, x: int, y: int) -> str:
    return f"({chain.states[x]}|{chain.states[y]})"


@dataclass(frozen=True, eq=False)
class ExpandedChain:
    """A chain on pair-states together with its base chain and lifted pi."""

    base: FiniteChain
    pairs: tuple
    chain: FiniteChain
    lifted_dist: np.ndarray = field(repr=False)
    kernel_name: str = "identity"

    @property
    def pair_index(self) -> dict:
        return {p: i for i, p in enumerate(self.pairs)}

    @property
    def first(self) -> np.ndarray:
        return np.array([p[0] for p in self.pairs], dtype=np.int64)

    @property
    def second(self) -> np.ndarray:
        return np.array([p[1] for p in self.pairs], dtype=np.int64)

    def index(self, x, y) -> int:
        return self.pair_index[(self.base.index(x), self.base.index(y))]


@dataclass(frozen=True, eq=False)
class UpdateKernel:
    """Per-anchor update rows ``U[x, y, :]``, defined where ``T(x, y) > 0``."""

    chain: FiniteChain
    U: np.ndarray = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        U = np.array(self.U, dtype=float)
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    def row(self, x: int, y: int) -> np.ndarray:
        return self.U[x, y]


class Violation(NamedTuple):
    x: int
    y: int
    z: int
    condition: str
    defect: float


def expand_states(chain: FiniteChain) -> list:
    """All pairs (x, y) with T(x, y) > 0, in lexicographic index order."""
    xs, ys = np.nonzero(chain.T > 0)
    return [(int(x), int(y)) for x, y in zip(xs, ys)]


def lift_distribution(chain: FiniteChain, dist=None, tol: float = TOL_LINEAR) -> np.ndarray:
    """pi(x) T(x, y) on every pair; both marginals equal pi."""
    pi = stationary_distribution(chain) if dist is None else np.asarray(dist, dtype=float)
    if not check_detailed_balance(chain, pi, tol):
        raise NotReversible("base chain does not satisfy detailed balance")
    return np.array([pi[x] * chain.T[x, y] for x, y in expand_states(chain)])


def _assemble(chain: FiniteChain, pairs: list, weight) -> np.ndarray:
    index = {p: i for i, p in enumerate(pairs)}
    TT = np.zeros((len(pairs), len(pairs)))
    for i, (x0, x1) in enumerate(pairs):
        for y1 in chain.successors(x1):
            TT[i, index[(x1, int(y1))]] = weight(x0, x1, int(y1))
    return TT


def _expanded(chain, pairs, TT, dist, name) -> ExpandedChain:
    labels = [pair_label(chain, x, y) for x, y in pairs]
    return ExpandedChain(chain, tuple(pairs), validate_chain(TT, states=labels), dist, name)


def lift_chain(chain: FiniteChain) -> ExpandedChain:
    """The original chain in disguise: swap, then redraw the second component from T."""
    dist = lift_distribution(chain)
    pairs = expand_states(chain)
    TT = _assemble(chain, pairs, lambda x0, x1, y1: chain.T[x1, y1])
    return _expanded(chain, pairs, TT, dist, "identity")


def identity_kernel(chain: FiniteChain) -> UpdateKernel:
    """Degenerate kernel U_x(y, z) = T(x, z): an ordinary Gibbs redraw."""
    n = chain.n
    U = np.zeros((n, n, n))
    for x, y in expand_states(chain):
        U[x, y] = chain.T[x]
    return UpdateKernel(chain, U, "identity")


def liu_kernel(chain: FiniteChain) -> UpdateKernel:
    """Liu's modified Gibbs update of the second component.

    For z != y: U_x(y, z) = min(T(x,z) / (1 - T(x,y)), T(x,z) / (1 - T(x,z))),
    the remainder stays at y.  When T(x, y) = 1 the proposal is undefined and
    the update never moves.
    """
    n = chain.n
    T = chain.T
    U = np.zeros((n, n, n))
    for x, y in expand_states(chain):
        row = np.zeros(n)
        if T[x, y] < 1.0:
            others = chain.successors(x)
            others = others[others != y]
            t = T[x, others]
            row[others] = np.minimum(t / (1.0 - T[x, y]), t / (1.0 - t))
        stay = 1.0 - row.sum()
        row[y] = 0.0 if abs(stay) < 1e-15 else stay
        U[x, y] = row
    return UpdateKernel(chain, U, "liu")


def verify_update_conditions(chain: FiniteChain, kernel: UpdateKernel, tol: float = TOL_LINEAR) -> list:
    """Every (x, y, z) breaking detailed balance of the update or domination over T.

    Also reports rows that are not probability vectors or put mass on z with
    T(x, z) = 0.  An empty list means the kernel is admissible.
    """
    T = chain.T
    U = kernel.U
    out = []
    for x in range(chain.n):
        succ = chain.successors(x)
        for y in succ:
            row = U[x, y]
            if abs(row.sum() - 1.0) > tol or np.any(row < -tol):
                out.append(Violation(x, int(y), -1, "row", float(row.sum() - 1.0)))
            leak = np.flatnonzero((T[x] == 0) & (np.abs(row) > tol))
            out.extend(Violation(x, int(y), int(z), "support", float(row[z])) for z in leak)
            for z in succ:
                if z == y:
                    continue
                sym = T[x, y] * row[z] - T[x, z] * U[x, z, y]
                if abs(sym) > tol:
                    out.append(Violation(x, int(y), int(z), "balance", float(sym)))
                dom = T[x, z] - row[z]
                if dom > tol:
                    out.append(Violation(x, int(y), int(z), "domination", float(dom)))
    return out


def build_nobacktrack(chain: FiniteChain, kernel: UpdateKernel | None = None, tol: float = TOL_LINEAR) -> ExpandedChain:
    """Swap followed by the kernel update: T''((x0,x1),(x1,y1)) = U_{x1}(x0, y1)."""
    if kernel is None:
        kernel = liu_kernel(chain)
    dist = lift_distribution(chain, tol=tol)
    bad = verify_update_conditions(chain, kernel, tol)
    if bad:
        raise KernelConditionViolation(bad)
    pairs = expand_states(chain)
    U = kernel.U
    TT = _assemble(chain, pairs, lambda x0, x1, y1: U[x1, x0, y1])
    return _expanded(chain, pairs, TT, dist, kernel.name)


def lift_function(f, expanded: ExpandedChain) -> np.ndarray:
    """f on the second component of each pair-state."""
    f = as_state_function(f, expanded.base.n)
    return f[expanded.second]


def sample_update(chain: FiniteChain, x, y, seed=0) -> int:
    """Draw z from Liu's U_x(y, .) without building the kernel row.

    ``seed`` may be an integer or a ``numpy.random.Generator``; pass a
    generator when drawing repeatedly.
    """
    rng = make_rng(seed)
    x, y = chain.index(x), chain.index(y)
    row = chain.T[x]
    t_cur = row[y]
    if t_cur <= 0:
        raise ValueError(f"T({x},{y}) = 0: pair is not a lifted state")
    if t_cur >= 1.0:
        return y
    if t_cur >= 0.5:
        # propose z* != y directly from T(x, .) with y's interval cut out;
        # every other T(x, z) <= 1/2 so acceptance (1-T(x,y))/(1-T(x,z*)) <= 1
        masked = row.copy()
        masked[y] = 0.0
        cum = np.cumsum(masked)
        z = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        z = min(z, chain.n - 1)
        while masked[z] <= 0:
            z -= 1
        accept = (1.0 - t_cur) / (1.0 - row[z])
    else:
        cum = np.cumsum(row)
        while True:
            z = int(np.searchsorted(cum, rng.random(), side="right"))
            z = min(z, chain.n - 1)
            while row[z] <= 0:
                z -= 1
            if z != y:
                break
        accept = min(1.0, (1.0 - t_cur) / (1.0 - row[z]))
    return z if rng.random() < accept else y


def simulate_nobacktrack(chain: FiniteChain, n: int, start, seed=0) -> Trajectory:
    """Run the modified chain on the fly: swap, then :func:`sample_update`.

    ``start`` is a base-state pair ``(x, y)`` with ``T(x, y) > 0``.  States in
    the returned trajectory are indices into :func:`expand_states` order.
    """
    rng = make_rng(seed)
    index = {p: i for i, p in enumerate(expand_states(chain))}
    prev, cur = chain.index(start[0]), chain.index(start[1])
    out = np.empty(n, dtype=np.int64)
    out[0] = index[(prev, cur)]
    for t in range(1, n):
        prev, cur = cur, sample_update(chain, cur, prev, rng)
        out[t] = index[(prev, cur)]
    return Trajectory(out, seed=seed if isinstance(seed, int) else None)
