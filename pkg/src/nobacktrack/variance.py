"""Asymptotic variance of time-average estimators.

Exact values come from the Poisson equation ``(I - T) g = f - mu``; empirical
values come from seeded, replicated simulation started from the stationary
distribution.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import asdict, dataclass

import numpy as np

from .chain import (
    TOL_LINEAR,
    FiniteChain,
    as_state_function,
    check_irreducible,
    period,
    stationary_distribution,
)
from .errors import InvalidInit, NotIrreducible, NumericalFailure, SingularSystem
from .rng import make_rng


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Visited state indices ``X_1..X_n`` plus optional per-transition marks."""

    states: np.ndarray
    seed: int | None = None
    marks: np.ndarray | None = None

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class VarianceReport:
    exact: float
    empirical: float
    empirical_stderr: float
    n: int
    reps: int
    seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stderr"] = d.pop("empirical_stderr")
        return d


def solve_poisson(chain: FiniteChain, dist, f, tol: float = TOL_LINEAR) -> np.ndarray:
    """Return g with (I - T) g = f - (pi.f) and pi.g = 0."""
    f = as_state_function(f, chain.n)
    pi = np.asarray(dist, dtype=float)
    if not check_irreducible(chain):
        raise SingularSystem("Poisson equation is singular for a reducible chain")
    fc = f - pi @ f
    n = chain.n
    # pi (I - T + 1 pi) = pi, so the solution automatically has pi.g = pi.fc = 0
    A = np.eye(n) - chain.T + np.outer(np.ones(n), pi)
    try:
        g = np.linalg.solve(A, fc)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    scale = max(1.0, float(np.max(np.abs(fc))))
    residual = np.max(np.abs(g - chain.T @ g - fc))
    if residual > tol * scale or abs(pi @ g) > tol * max(1.0, float(np.max(np.abs(g)))):
        raise NumericalFailure(f"Poisson residual {residual:.3e} exceeds tolerance")
    return g


def exact_asymptotic_variance(chain: FiniteChain, f, dist=None, tol: float = TOL_LINEAR) -> float:
    """lim n Var(mu_hat_n), valid for any irreducible chain, periodic or not."""
    if not check_irreducible(chain):
        raise NotIrreducible("asymptotic variance needs an irreducible chain")
    f = as_state_function(f, chain.n)
    pi = stationary_distribution(chain) if dist is None else np.asarray(dist, dtype=float)
    fc = f - pi @ f
    g = solve_poisson(chain, pi, f)
    v = float(np.sum(pi * fc * (2.0 * g - fc)))
    scale = max(1.0, float(pi @ fc**2))
    if v < -tol * scale:
        raise NumericalFailure(f"negative asymptotic variance {v!r}")
    return max(v, 0.0)


def autocovariance_variance(
    chain: FiniteChain,
    f,
    dist=None,
    tol: float = 1e-12,
    max_lag: int = 10_000_000,
) -> float:
    """Independent oracle: Var_pi(f) + 2 sum_k Cov_pi(f(X_0), f(X_k)).

    Lags are summed until the increments stay below ``tol`` for a full window.
    Periodic chains have non-decaying autocovariances, so the sum is taken on
    the lazy chain (I + T)/2 instead and mapped back with
    V(T) = (V(lazy) - Var_pi(f)) / 2.
    """
    f = as_state_function(f, chain.n)
    pi = stationary_distribution(chain) if dist is None else np.asarray(dist, dtype=float)
    fc = f - pi @ f
    var0 = float(pi @ fc**2)
    T = chain.T
    lazy = period(chain) > 1
    if lazy:
        T = 0.5 * (np.eye(chain.n) + T)
    weighted = pi * fc
    v = T @ fc
    total = var0
    window = 64
    quiet = 0
    for _ in range(max_lag):
        inc = 2.0 * float(weighted @ v)
        total += inc
        quiet = quiet + 1 if abs(inc) < tol else 0
        if quiet >= window:
            break
        v = T @ v
    else:
        raise NumericalFailure("autocovariance sum did not converge")
    return (total - var0) / 2.0 if lazy else total


def _cumulative_rows(chain: FiniteChain):
    cum = np.cumsum(chain.T, axis=1)
    last = np.array([chain.successors(x)[-1] for x in range(chain.n)])
    return cum, last


def _initial_state(chain: FiniteChain, init, rng) -> int:
    if init is None:
        init = stationary_distribution(chain)
    if isinstance(init, (int, np.integer, str)):
        try:
            return chain.index(init)
        except (ValueError, IndexError) as exc:
            raise InvalidInit(f"unknown initial state {init!r}") from exc
    p = np.asarray(init, dtype=float)
    if p.shape != (chain.n,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise InvalidInit("initial distribution must be a probability vector over the states")
    return int(min(np.searchsorted(np.cumsum(p), rng.random(), side="right"), chain.n - 1))


def simulate(chain: FiniteChain, n: int, seed: int = 0, init=None) -> Trajectory:
    """Simulate ``n`` states by inverse-CDF lookup on each row, in state order.

    ``init`` is a state (label or index), a distribution, or None for the
    stationary distribution.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    x = _initial_state(chain, init, rng)
    cum, last = _cumulative_rows(chain)
    rows = [list(r) for r in cum]
    last = last.tolist()
    u = rng.random(n - 1)
    out = np.empty(n, dtype=np.int64)
    out[0] = x
    for t in range(n - 1):
        y = bisect.bisect_right(rows[x], u[t])
        x = y if y <= last[x] else last[x]
        out[t + 1] = x
    return Trajectory(out, seed=seed)


def step_batch(cum: np.ndarray, last: np.ndarray, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One transition for many independent chains sharing a transition matrix."""
    nxt = (u[:, None] >= cum[states]).sum(axis=1)
    return np.minimum(nxt, last[states])


def draw_states(p: np.ndarray, size: int, rng) -> np.ndarray:
    idx = np.searchsorted(np.cumsum(p), rng.random(size), side="right")
    return np.minimum(idx, len(p) - 1)


def empirical_estimate(traj: Trajectory, f) -> float:
    """Time average of f over the visited states."""
    f = np.asarray(f, dtype=float)
    return float(f[np.asarray(traj.states)].mean())


def replicate_means(chain: FiniteChain, f, n: int, reps: int, seed: int = 0) -> np.ndarray:
    """mu_hat_n for ``reps`` independent runs started from pi."""
    f = as_state_function(f, chain.n)
    rng = make_rng(seed)
    pi = stationary_distribution(chain)
    cum, last = _cumulative_rows(chain)
    x = draw_states(pi, reps, rng)
    total = f[x].copy()
    for _ in range(n - 1):
        x = step_batch(cum, last, x, rng.random(reps))
        total += f[x]
    return total / n


def scaled_variance(means: np.ndarray, n: int) -> tuple[float, float]:
    """n * sample variance of replicate means and its normal-theory stderr."""
    reps = len(means)
    est = n * float(np.var(means, ddof=1))
    return est, est * math.sqrt(2.0 / (reps - 1))


def replicated_variance(chain: FiniteChain, f, n: int, reps: int, seed: int = 0) -> VarianceReport:
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if not check_irreducible(chain):
        raise NotIrreducible("replicated variance needs an irreducible chain")
    exact = exact_asymptotic_variance(chain, f)
    est, se = scaled_variance(replicate_means(chain, f, n, reps, seed), n)
    return VarianceReport(exact, est, se, n, reps, seed)


def expected_estimate(chain: FiniteChain, f, init, n: int) -> float:
    """E[mu_hat_n] from a given start, by propagating the state distribution exactly."""
    f = as_state_function(f, chain.n)
    if isinstance(init, (int, np.integer, str)):
        p = np.zeros(chain.n)
        p[chain.index(init)] = 1.0
    else:
        p = np.asarray(init, dtype=float).copy()
    total = 0.0
    for _ in range(n):
        total += p @ f
        p = p @ chain.T
    return total / n
