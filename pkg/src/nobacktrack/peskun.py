"""Delta transitions, blocks and stratification for dominated chain pairs.

Two chains that differ on a single pair of states A, B can be simulated from
one uniform stream so that they disagree only on "delta" transitions.  Those
transitions cut each run into blocks typed AA, AB, BA or BB by their end
states.  In the new chain the homogeneous blocks alternate AA, BB, AA, ...,
which stratifies them; the harnesses here check that behaviour, along with
the two lemmas it relies on, by simulation.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .chain import (
    TOL_LINEAR,
    FiniteChain,
    as_state_function,
    check_detailed_balance,
    check_invariant,
    check_irreducible,
    stationary_distribution,
    validate_chain,
)
from .errors import (
    DominationViolation,
    EmptySubset,
    NoMarks,
    NotElementaryPair,
    NotIrreducible,
    NotReversible,
    RhoAsymmetric,
)
from .no_backtrack import (
    ExpandedChain,
    UpdateKernel,
    _assemble,
    _expanded,
    expand_states,
    lift_distribution,
    verify_update_conditions,
)
from .rng import make_rng
from .variance import Trajectory, _cumulative_rows, draw_states, scaled_variance, step_batch

BLOCK_TYPES = ("AA", "AB", "BA", "BB")


class DeltaRoles(NamedTuple):
    """Where delta transitions leave from and land on.

    For a pair of chains differing on states A and B all four are just A and
    B.  For lifted chains, deltas leave (A, O) or (B, O) and land on (O, A)
    or (O, B).
    """

    a_from: int
    a_to: int
    b_from: int
    b_to: int


@dataclass(frozen=True, eq=False)
class PeskunPair:
    old: FiniteChain
    new: FiniteChain
    dist: np.ndarray = field(repr=False)
    roles: DeltaRoles
    delta_A: float
    delta_B: float


def _check_domination(old: FiniteChain, new: FiniteChain, tol: float):
    diff = new.T - old.T
    np.fill_diagonal(diff, 0.0)
    bad = np.argwhere(diff < -tol)
    if len(bad):
        x, y = bad[0]
        raise DominationViolation(f"T'({x},{y}) < T({x},{y}) by {-diff[x, y]:.3e}")


def elementary_pair(old: FiniteChain, new: FiniteChain, dist=None, tol: float = TOL_LINEAR) -> PeskunPair:
    """Extract (A, B, delta_A, delta_B) from two chains differing on one state pair.

    Entries changing by less than ``tol`` count as unchanged.  Both chains
    must leave ``dist`` invariant and satisfy pi(A) delta_A = pi(B) delta_B.
    """
    if old.n != new.n:
        raise NotElementaryPair("chains have different sizes")
    _check_domination(old, new, tol)
    diff = new.T - old.T
    changed = np.argwhere(np.abs(diff) > tol)
    involved = sorted({int(i) for i in changed.ravel()})
    if len(involved) != 2:
        raise NotElementaryPair(f"changes involve states {involved}, expected exactly two")
    A, B = involved
    if np.any(np.abs(diff[[A, B]][:, [A, B]].sum(axis=1)) > tol):
        raise NotElementaryPair("changes move mass outside the {A, B} block")
    dA, dB = float(diff[A, B]), float(diff[B, A])
    if abs(diff[A, A] + dA) > tol or abs(diff[B, B] + dB) > tol:
        raise NotElementaryPair("self-transition changes do not mirror the cross changes")
    pi = stationary_distribution(old) if dist is None else np.asarray(dist, dtype=float)
    if not (check_invariant(old, pi) and check_invariant(new, pi)):
        raise NotElementaryPair("both chains must leave dist invariant")
    if abs(pi[A] * dA - pi[B] * dB) > tol:
        raise NotElementaryPair("pi(A) delta_A != pi(B) delta_B")
    return PeskunPair(old, new, pi, DeltaRoles(A, A, B, B), dA, dB)


def pairwise_decomposition(old: FiniteChain, new: FiniteChain, dist=None, tol: float = TOL_LINEAR) -> list:
    """Chains C_1..C_m stepping from ``old`` to ``new`` one state pair at a time.

    Pairs are visited in lexicographic order; each step copies the two
    off-diagonal entries for the pair from ``new`` and lets the diagonal
    absorb the difference (recomputed as one
    minus the off-diagonal sum).  Returns an empty list when the chains agree.
    """
    pi = stationary_distribution(old) if dist is None else np.asarray(dist, dtype=float)
    if not check_detailed_balance(old, pi, tol) or not check_detailed_balance(new, pi, tol):
        raise NotReversible("pairwise decomposition needs both chains reversible w.r.t. dist")
    _check_domination(old, new, tol)
    steps = []
    cur = old.T.copy()
    n = old.n
    for x in range(n):
        for y in range(x + 1, n):
            if abs(new.T[x, y] - cur[x, y]) <= tol and abs(new.T[y, x] - cur[y, x]) <= tol:
                continue
            cur = cur.copy()
            for a, b in ((x, y), (y, x)):
                cur[a, b] = new.T[a, b]
                # correctly rounded, so printed decimal matrices come out exact
                cur[a, a] = math.fsum([1.0, *(-cur[a, c] for c in range(n) if c != a)])
            steps.append(validate_chain(cur, states=old.states))
    return steps


def _delta_partitions(pair: PeskunPair):
    """Interval partition of [0, 1) per state for the old chain.

    States a_from and b_from put their delta target first, so that the
    delta interval is [0, delta).
    """
    T = pair.old.T
    r = pair.roles
    parts = []
    for x in range(pair.old.n):
        order = list(range(pair.old.n))
        if x == r.a_from:
            order.remove(r.a_to)
            order.insert(0, r.a_to)
        elif x == r.b_from:
            order.remove(r.b_to)
            order.insert(0, r.b_to)
        order = [y for y in order if T[x, y] > 0]
        parts.append((order, list(np.cumsum(T[x, order]))))
    return parts


def delta_coupled_simulate(pair: PeskunPair, n: int, seed=0, init=None) -> tuple[Trajectory, Trajectory]:
    """Run old and new chains on a shared uniform stream, marking delta transitions.

    Old chain: from a_from with U < delta_A go to a_to (marked); new chain
    sends the same draw to b_to instead, and symmetrically for b_from.  All
    other draws use the old chain's partition, which the new chain shares
    outside the delta intervals.  ``init`` defaults to a_to or b_to with
    probability 1/2 each, so both runs start at a block boundary.
    """
    rng = make_rng(seed)
    r = pair.roles
    if init is None:
        init = r.a_to if rng.random() < 0.5 else r.b_to
    parts = _delta_partitions(pair)
    u = rng.random(n - 1)
    out = []
    for mode in ("old", "new"):
        hit_a = r.a_to if mode == "old" else r.b_to
        hit_b = r.b_to if mode == "old" else r.a_to
        states = np.empty(n, dtype=np.int64)
        marks = np.zeros(n - 1, dtype=bool)
        x = int(init)
        states[0] = x
        for t in range(n - 1):
            ut = u[t]
            if x == r.a_from and ut < pair.delta_A:
                x = hit_a
                marks[t] = True
            elif x == r.b_from and ut < pair.delta_B:
                x = hit_b
                marks[t] = True
            else:
                order, cum = parts[x]
                k = bisect.bisect_right(cum, ut)
                x = order[min(k, len(order) - 1)]
            states[t + 1] = x
        out.append(Trajectory(states, seed=seed if isinstance(seed, int) else None, marks=marks))
    return out[0], out[1]


@dataclass(frozen=True, eq=False)
class BlockTrace:
    """Complete blocks of one run, in order, with their content sums and lengths."""

    types: np.ndarray
    H: np.ndarray
    L: np.ndarray
    start_states: np.ndarray = field(repr=False)
    end_states: np.ndarray = field(repr=False)
    source: str = "old"
    partial: tuple | None = None

    def __len__(self):
        return len(self.types)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["type", "H", "L"])
        for t, h, l in zip(self.types, self.H, self.L):
            w.writerow([t, repr(float(h)), int(l)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _as_roles(roles) -> DeltaRoles:
    if isinstance(roles, PeskunPair):
        return roles.roles
    if isinstance(roles, DeltaRoles):
        return roles
    A, B = roles
    return DeltaRoles(A, A, B, B)


def segment_blocks(traj: Trajectory, f, roles, source: str = "old") -> BlockTrace:
    """Cut a marked trajectory into blocks at its delta transitions.

    ``roles`` is a :class:`PeskunPair`, a :class:`DeltaRoles` or a plain
    ``(A, B)`` tuple.  A block runs from a landing state up to and including
    the state a marked transition leaves.  Any run before the first landing
    state and the open block after the last mark are left out; the latter's
    (H, L) is kept in ``partial``.
    """
    if traj.marks is None:
        raise NoMarks("trajectory carries no delta marks")
    r = _as_roles(roles)
    f = np.asarray(f, dtype=float)
    states = np.asarray(traj.states)
    ends = np.flatnonzero(traj.marks)
    starts = np.concatenate(([0], ends + 1))
    stops = np.concatenate((ends, [len(states) - 1]))
    csum = np.concatenate(([0.0], np.cumsum(f[states])))
    H = csum[stops + 1] - csum[starts]
    L = stops - starts + 1
    start_role = {r.a_to: "A", r.b_to: "B"}
    end_role = {r.a_from: "A", r.b_from: "B"}
    partial = (float(H[-1]), int(L[-1]))
    s0, s1 = states[starts[:-1]], states[stops[:-1]]
    keep = np.array([s in start_role for s in s0], dtype=bool)
    types = np.array([start_role.get(a, "?") + end_role[b] for a, b in zip(s0, s1)], dtype="<U2")
    return BlockTrace(types[keep], H[:-1][keep], L[:-1][keep], s0[keep], s1[keep], source, partial)


def block_statistics(trace: BlockTrace) -> dict:
    """Counts, frequencies and (H, L) moments per block type.

    Also reports the homogeneous fraction ``h`` and the AA/BB and AB/BA
    frequency differences with multinomial standard errors.
    """
    K = len(trace)
    if K == 0:
        raise NoMarks("no complete blocks")
    out = {"blocks": K, "source": trace.source}
    for t in BLOCK_TYPES:
        sel = trace.types == t
        c = int(sel.sum())
        Hs, Ls = trace.H[sel], trace.L[sel]
        out[t] = {
            "count": c,
            "freq": c / K,
            "H_mean": float(Hs.mean()) if c else math.nan,
            "H_var": float(Hs.var(ddof=1)) if c > 1 else math.nan,
            "L_mean": float(Ls.mean()) if c else math.nan,
            "L_var": float(Ls.var(ddof=1)) if c > 1 else math.nan,
        }
    out["h"] = (out["AA"]["count"] + out["BB"]["count"]) / K
    out["h_stderr"] = math.sqrt(out["h"] * (1 - out["h"]) / K)
    for a, b in (("AA", "BB"), ("AB", "BA")):
        pa, pb = out[a]["freq"], out[b]["freq"]
        out[f"{a}-{b}"] = {
            "diff": pa - pb,
            "count_diff": out[a]["count"] - out[b]["count"],
            "stderr": math.sqrt(max(pa + pb - (pa - pb) ** 2, 0.0) / K),
        }
    return out


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """Finite-support law over (H, L) pairs."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        probs = np.asarray(self.probs, dtype=float)
        if atoms.shape != (len(probs), 2) or np.any(atoms[:, 1] <= 0):
            raise ValueError("atoms must be (H, L) rows with L > 0, one per probability")
        if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-9:
            raise ValueError("probs must form a probability vector")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs / probs.sum())

    def sample(self, rng, size=None) -> np.ndarray:
        idx = np.searchsorted(np.cumsum(self.probs), rng.random(size), side="right")
        return self.atoms[np.minimum(idx, len(self.probs) - 1)]

    def mean(self) -> np.ndarray:
        return self.probs @ self.atoms


@dataclass(frozen=True, eq=False)
class BlockLawSpec:
    """Homogeneity probability and content laws: Q0 for AA, Q1 for BB, Q2 for AB/BA."""

    h: float
    Q0: DiscreteLaw
    Q1: DiscreteLaw
    Q2: DiscreteLaw

    def __post_init__(self):
        if not 0.0 <= self.h <= 1.0:
            raise ValueError("h must lie in [0, 1]")

    def law(self, z: int) -> DiscreteLaw:
        return (self.Q0, self.Q1, self.Q2)[z]


def stratified_block_simulate(spec: BlockLawSpec, n_blocks: int, mode: str = "old", seed=0) -> BlockTrace:
    """Simulate whole blocks rather than single transitions.

    Homogeneity draws come from a sub-stream shared by both modes, so old
    and new runs see the same homogeneous/non-homogeneous sequence.  After
    a block ending in A, the old chain's next homogeneous block is AA and
    the new chain's is BB; non-homogeneous blocks are drawn as AB, reversed
    into BA when they must start at B (reversal keeps (H, L)).
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if mode not in ("old", "new"):
        raise ValueError("mode must be 'old' or 'new'")
    homog = make_rng(seed, 0).random(n_blocks) < spec.h
    prev_end = "A" if make_rng(seed, 1).random() < 0.5 else "B"
    content = make_rng(seed, 2 if mode == "old" else 3)
    types = []
    for is_h in homog:
        start = prev_end if mode == "old" else ("B" if prev_end == "A" else "A")
        t = start + (start if is_h else ("B" if start == "A" else "A"))
        types.append(t)
        prev_end = t[1]
    types = np.array(types, dtype="<U2")
    HL = np.empty((n_blocks, 2))
    for z, sel in ((0, types == "AA"), (1, types == "BB"), (2, (types == "AB") | (types == "BA"))):
        if sel.any():
            HL[sel] = spec.law(z).sample(content, int(sel.sum()))
    code = {"A": 0, "B": 1}
    starts = np.array([code[t[0]] for t in types])
    ends = np.array([code[t[1]] for t in types])
    return BlockTrace(types, HL[:, 0], HL[:, 1], starts, ends, mode, None)


@dataclass(frozen=True)
class ComparisonReport:
    """Two scaled-variance estimates and the z statistic of their difference."""

    old_est: float
    old_stderr: float
    new_est: float
    new_stderr: float
    z: float
    passed: bool
    n: int = 0
    reps: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "old": {"est": self.old_est, "stderr": self.old_stderr},
            "new": {"est": self.new_est, "stderr": self.new_stderr},
            "z": self.z,
            "pass": self.passed,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
        }


def _z(old, se_old, new, se_new) -> float:
    se = math.hypot(se_old, se_new)
    if se == 0.0:
        return 0.0 if new == old else math.copysign(math.inf, new - old)
    return (new - old) / se


def lemma1_check(chain: FiniteChain, S, f, n: int, reps: int, seed=0, z_max: float = 4.0) -> ComparisonReport:
    """Compare n Var(mu_hat_n) with n Var(mu_tilde_k), k = ceil(n pi(S)).

    ``mu_tilde_k`` averages f up to the k-th visit to S.  Both estimators
    are read off the same replicate runs, started from pi.
    """
    S = sorted({chain.index(s) for s in S})
    if not S:
        raise EmptySubset("S must be non-empty")
    if not check_irreducible(chain):
        raise NotIrreducible("the stopping-time comparison needs an irreducible chain")
    f = as_state_function(f, chain.n)
    rng = make_rng(seed)
    pi = stationary_distribution(chain)
    inS = np.zeros(chain.n, dtype=np.int64)
    inS[S] = 1
    k = max(1, math.ceil(n * pi[S].sum() - 1e-9))
    cum, last = _cumulative_rows(chain)

    x = draw_states(pi, reps, rng)
    total = f[x].copy()
    hits = inS[x].copy()
    fixed = np.full(reps, np.nan)
    tilde = np.full(reps, np.nan)
    t = 1
    done = hits >= k
    tilde[done] = total[done] / t
    while t < n or not done.all():
        if t == n:
            fixed = total / n
        x = step_batch(cum, last, x, rng.random(reps))
        total += f[x]
        hits += inS[x]
        t += 1
        now = (hits >= k) & ~done
        tilde[now] = total[now] / t
        done |= now
    if t == n:
        fixed = total / n
    old, se_old = scaled_variance(fixed, n)
    new, se_new = scaled_variance(tilde, n)
    z = _z(old, se_old, new, se_new)
    return ComparisonReport(old, se_old, new, se_new, z, abs(z) < z_max, n, reps, seed if isinstance(seed, int) else 0)


def alternate_types(Z: np.ndarray) -> np.ndarray:
    """Replace the 0/1 entries of each column by an alternating 0/1 run.

    The run starts from the first non-2 value of the column; 2s stay put.
    Rows index position, columns index replicate.
    """
    Z = np.asarray(Z)
    is01 = Z != 2
    before = np.cumsum(is01, axis=0) - is01
    first = np.argmax(is01, axis=0)
    zk = Z[first, np.arange(Z.shape[1])]
    return np.where(is01, (zk[None, :] + before) % 2, 2)


def lemma2_check(
    spec: BlockLawSpec,
    rho,
    Z_transition: FiniteChain,
    n: int,
    reps: int,
    seed=0,
    z_max: float = 4.0,
    tol: float = 1e-9,
) -> ComparisonReport:
    """Compare n Var(R_n) for block types Z with n Var(R'_n) for stratified Z'.

    Reported ``old`` is R (unstratified), ``new`` is R'.  ``passed`` is
    False only when R' exceeds R by more than ``z_max`` standard errors.
    """
    rho = np.asarray(rho, dtype=float)
    if abs(rho[0] - rho[1]) > tol:
        raise RhoAsymmetric("rho(0) must equal rho(1)")
    if Z_transition.n != 3 or not check_irreducible(Z_transition):
        raise NotIrreducible("Z transition must be an irreducible 3-state chain")
    if not check_invariant(Z_transition, rho, tol):
        raise ValueError("rho is not stationary for Z_transition")
    rng_z, rng_c, rng_s = make_rng(seed, 0), make_rng(seed, 1), make_rng(seed, 2)
    cum, last = _cumulative_rows(Z_transition)
    Z = np.empty((n, reps), dtype=np.int64)
    Z[0] = draw_states(rho, reps, rng_z)
    for i in range(1, n):
        Z[i] = step_batch(cum, last, Z[i - 1], rng_z.random(reps))
    Zs = alternate_types(Z)

    def ratio(types, rng):
        HL = np.empty((n, reps, 2))
        for z in range(3):
            sel = types == z
            if sel.any():
                HL[sel] = spec.law(z).sample(rng, int(sel.sum()))
        return HL[..., 0].sum(axis=0) / HL[..., 1].sum(axis=0)

    old, se_old = scaled_variance(ratio(Z, rng_c), n)
    new, se_new = scaled_variance(ratio(Zs, rng_s), n)
    z = _z(old, se_old, new, se_new)
    return ComparisonReport(old, se_old, new, se_new, z, z <= z_max, n, reps, seed if isinstance(seed, int) else 0)


def symmetric_type_chain(stay: float, cross: float) -> tuple[FiniteChain, np.ndarray]:
    """3-state block-type chain invariant under swapping 0 and 1.

    From 0 (or 1): stay with ``stay``, switch to the other homogeneous type
    with ``cross``, go to 2 otherwise; from 2 the mass splits evenly between
    0 and 1 with half staying at 2.  The swap symmetry forces rho(0) = rho(1).
    """
    to2 = 1.0 - stay - cross
    if min(stay, cross, to2) < 0:
        raise ValueError("stay + cross must not exceed 1")
    P = np.array([[stay, cross, to2], [cross, stay, to2], [0.25, 0.25, 0.5]])
    chain = validate_chain(P)
    return chain, stationary_distribution(chain)


def perturb_kernel(kernel: UpdateKernel, O: int, A: int, B: int, delta_A: float) -> UpdateKernel:
    """Move mass delta_A from U_O(A, A) to U_O(A, B) and the balancing
    delta_B = T(O, A) delta_A / T(O, B) from U_O(B, B) to U_O(B, A)."""
    T = kernel.chain.T
    delta_B = T[O, A] * delta_A / T[O, B]
    U = kernel.U.copy()
    U[O, A, A] -= delta_A
    U[O, A, B] += delta_A
    U[O, B, B] -= delta_B
    U[O, B, A] += delta_B
    return UpdateKernel(kernel.chain, U, f"{kernel.name}+delta")


def expanded_elementary_pair(chain: FiniteChain, U_old: UpdateKernel, U_new: UpdateKernel,
                             tol: float = TOL_LINEAR) -> tuple[PeskunPair, ExpandedChain, ExpandedChain]:
    """Lift a one-anchor kernel change to a pair of chains on pair-states.

    The change must touch only U_O(A, .) and U_O(B, .) on {A, B} for a
    single anchor O.  Deltas leave (A, O) / (B, O) and land on (O, A) /
    (O, B); pi(O) T(O, A) delta_A = pi(O) T(O, B) delta_B is enforced.
    """
    diff = U_new.U - U_old.U
    changed = np.argwhere(np.abs(diff) > tol)
    anchors = {int(c[0]) for c in changed}
    if len(anchors) != 1:
        raise NotElementaryPair(f"kernel change touches anchors {sorted(anchors)}")
    O = anchors.pop()
    involved = sorted({int(v) for c in changed for v in c[1:]})
    if len(involved) != 2:
        raise NotElementaryPair(f"kernel change involves states {involved}")
    A, B = involved
    dA, dB = float(diff[O, A, B]), float(diff[O, B, A])
    if dA < -tol or dB < -tol:
        raise DominationViolation("kernel change lowers an off-current update probability")
    pi = stationary_distribution(chain)
    if abs(pi[O] * chain.T[O, A] * dA - pi[O] * chain.T[O, B] * dB) > tol:
        raise NotElementaryPair("pi(O) T(O,A) delta_A != pi(O) T(O,B) delta_B")
    for U in (U_old, U_new):
        bad = [v for v in verify_update_conditions(chain, U, tol) if v.condition != "domination"]
        if bad:
            raise NotElementaryPair(f"kernel {U.name} is not balanced: {bad[0]}")
    old = _lift_with(chain, U_old)
    new = _lift_with(chain, U_new)
    ix = old.pair_index
    roles = DeltaRoles(ix[(A, O)], ix[(O, A)], ix[(B, O)], ix[(O, B)])
    pair = PeskunPair(old.chain, new.chain, old.lifted_dist, roles, dA, dB)
    return pair, old, new


def _lift_with(chain: FiniteChain, kernel: UpdateKernel) -> ExpandedChain:
    # domination over T is not required of intermediate kernels, only balance
    dist = lift_distribution(chain)
    pairs = expand_states(chain)
    TT = _assemble(chain, pairs, lambda x0, x1, y1: kernel.U[x1, x0, y1])
    return _expanded(chain, pairs, TT, dist, kernel.name)
