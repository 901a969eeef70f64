"""Constructors for the chains used throughout the package and its tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import FiniteChain, validate_chain
from .errors import DeltaOutOfRange
from .rng import make_rng


@dataclass(frozen=True, eq=False)
class ExampleSpec:
    name: str
    chain: FiniteChain
    f: np.ndarray = field(repr=False)
    dist: np.ndarray = field(repr=False)
    parameters: dict = field(default_factory=dict)


def line_walk(N: int) -> ExampleSpec:
    """Random walk on 1..N moving +-1 with probability 1/2 each.

    A step off either end is replaced by a self-loop, so states 1 and N
    each hold a self-transition of 1/2.  ``f(x) = x``.
    """
    if N < 2:
        raise ValueError("line walk needs N >= 2")
    T = np.zeros((N, N))
    for i in range(N):
        T[i, i - 1 if i > 0 else i] += 0.5
        T[i, i + 1 if i < N - 1 else i] += 0.5
    chain = validate_chain(T, states=[str(i + 1) for i in range(N)])
    return ExampleSpec(f"line_walk_{N}", chain, np.arange(1.0, N + 1), np.full(N, 1.0 / N), {"N": N})


def rectangle(N: int, M: int) -> ExampleSpec:
    """Nearest-neighbour walk on an N x M grid, 1/4 per direction.

    Moves that would leave the grid become self-loops (1/4 on an edge, 1/2
    at a corner).  States are ordered row-major over (i, j) with i in 1..N
    the column and j in 1..M the row; ``f`` is the column index i.
    """
    if N < 2 or M < 2:
        raise ValueError("rectangle needs N, M >= 2")
    n = N * M
    T = np.zeros((n, n))

    def idx(i, j):
        return i * M + j

    for i in range(N):
        for j in range(M):
            s = idx(i, j)
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                T[s, idx(a, b) if 0 <= a < N and 0 <= b < M else s] += 0.25
    labels = [f"{i + 1},{j + 1}" for i in range(N) for j in range(M)]
    f = np.array([i + 1.0 for i in range(N) for _ in range(M)])
    return ExampleSpec(f"rectangle_{N}x{M}", validate_chain(T, states=labels), f, np.full(n, 1.0 / n), {"N": N, "M": M})


COUNTEREXAMPLE_STATES = ("A", "top", "B", "bottom")


def peskun_counterexample(delta: float = 0.5) -> tuple[ExampleSpec, ExampleSpec]:
    """Four-state cycle where lowering self-transitions raises asymptotic variance.

    The old chain runs A -> top -> B -> bottom -> A, pausing at A and B with
    probability 1/2.  The new chain moves mass ``delta`` of each pause
    directly across (A -> B, B -> A).  Both leave (1/3, 1/6, 1/3, 1/6)
    invariant; neither is reversible.
    """
    if not 0.0 < delta <= 0.5:
        raise DeltaOutOfRange(f"delta must lie in (0, 1/2], got {delta!r}")
    A, top, B, bottom = range(4)
    T = np.zeros((4, 4))
    T[A, A] = T[A, top] = 0.5
    T[top, B] = 1.0
    T[B, B] = T[B, bottom] = 0.5
    T[bottom, A] = 1.0
    Tn = T.copy()
    Tn[A, A] -= delta
    Tn[A, B] += delta
    Tn[B, B] -= delta
    Tn[B, A] += delta
    f = np.array([0.0, 1.0, 0.0, -1.0])
    pi = np.array([1 / 3, 1 / 6, 1 / 3, 1 / 6])
    params = {"delta": delta}
    old = ExampleSpec("counterexample_old", validate_chain(T, states=COUNTEREXAMPLE_STATES), f, pi, params)
    new = ExampleSpec("counterexample_new", validate_chain(Tn, states=COUNTEREXAMPLE_STATES), f, pi, params)
    return old, new


def peskun_matrices():
    """Three 3x3 chains, each step changing one state pair; all reversible for pi."""
    T = np.array([[0.4, 0.4, 0.2], [0.4, 0.4, 0.2], [0.4, 0.4, 0.2]])
    middle = np.array([[0.3, 0.5, 0.2], [0.5, 0.3, 0.2], [0.4, 0.4, 0.2]])
    Tp = np.array([[0.3, 0.5, 0.2], [0.5, 0.2, 0.3], [0.4, 0.6, 0.0]])
    pi = np.array([0.4, 0.4, 0.2])
    return T, middle, Tp, pi


def _random_graph(n: int, density: float, rng) -> np.ndarray:
    adj = np.zeros((n, n), dtype=bool)
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = order[k], order[rng.integers(k)]
        adj[a, b] = adj[b, a] = True
    extra = np.triu(rng.random((n, n)) < density)
    return adj | extra | extra.T


def random_reversible(
    n_states: int,
    density: float = 0.5,
    seed: int = 0,
    weights: str = "random",
    self_loops: bool = True,
) -> ExampleSpec:
    """Random walk on a connected weighted graph.

    A random spanning tree guarantees connectivity; further edges (and, if
    allowed, self-loops) appear with probability ``density``.  With
    symmetric weights w, T(x, y) = w(x, y) / sum_z w(x, z) is reversible for
    pi(x) proportional to sum_z w(x, z).  ``f`` is a random integer
    function in [-3, 3].
    """
    if n_states < 2:
        raise ValueError("need at least two states")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must be in (0, 1]")
    rng = make_rng(seed)
    adj = _random_graph(n_states, density, rng)
    if not self_loops:
        np.fill_diagonal(adj, False)
    if weights == "equal":
        w = adj.astype(float)
    else:
        w = rng.uniform(0.1, 1.0, (n_states, n_states))
        w = np.triu(w) + np.triu(w, 1).T
        w = np.where(adj, w, 0.0)
    deg = w.sum(axis=1)
    T = w / deg[:, None]
    pi = deg / deg.sum()
    f = rng.integers(-3, 4, n_states).astype(float)
    chain = validate_chain(T)
    return ExampleSpec(f"random_reversible_{n_states}_{seed}", chain, f, pi,
                       {"n_states": n_states, "density": density, "seed": seed})


def random_dominated_pair(n_states: int, seed: int = 0, n_changes: int = 1, density: float = 0.5):
    """Random reversible T and a T' dominating it off the diagonal.

    Each change picks a state pair (x, y) and moves a flow m out of both
    self-loops into the x <-> y transitions: T'(x, y) += m / pi(x) and
    T'(y, x) += m / pi(y).  Detailed balance w.r.t. pi is preserved.
    Returns ``(old, new)`` ExampleSpecs sharing ``f`` and ``dist``.
    """
    rng = make_rng(seed, 1)
    base = random_reversible(n_states, density, seed)
    pi = base.dist
    # every state needs a self-loop to give up mass
    w = pi[:, None] * base.chain.T
    w[np.diag_indices(n_states)] += rng.uniform(0.2, 1.0, n_states) * pi
    w /= w.sum()
    pi = w.sum(axis=1)
    T = w / pi[:, None]
    Tn = T.copy()
    all_pairs = [(x, y) for x in range(n_states) for y in range(x + 1, n_states)]
    picks = rng.choice(len(all_pairs), size=min(n_changes, len(all_pairs)), replace=False)
    for k in sorted(picks):
        x, y = all_pairs[k]
        m = rng.uniform(0.2, 0.9) * min(pi[x] * Tn[x, x], pi[y] * Tn[y, y])
        Tn[x, y] += m / pi[x]
        Tn[x, x] -= m / pi[x]
        Tn[y, x] += m / pi[y]
        Tn[y, y] -= m / pi[y]
    params = {"n_states": n_states, "seed": seed, "n_changes": n_changes}
    old = ExampleSpec(f"dominated_old_{seed}", validate_chain(T), base.f, pi, params)
    new = ExampleSpec(f"dominated_new_{seed}", validate_chain(Tn), base.f, pi, params)
    return old, new
