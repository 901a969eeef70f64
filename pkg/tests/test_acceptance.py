"""Acceptance criteria 1-12, each at its stated tolerance.

Every test records a PASS/FAIL line in ``RESULTS``; the conftest hook prints
them as one block at the end of the run.  Criterion 2 is checked literally
(f(x) = x) and fails: the asymptotic variance of x grows like N**4.  The
bounded-function reading f(x) = x/N is checked separately below.
"""

import math

import numpy as np
import pytest
from scipy import stats

from nobacktrack import examples as ex
from nobacktrack import reproduce as rp
from nobacktrack.chain import check_detailed_balance, check_invariant, check_irreducible, validate_chain
from nobacktrack.no_backtrack import build_nobacktrack, lift_function, liu_kernel, sample_update
from nobacktrack.peskun import block_statistics, delta_coupled_simulate, elementary_pair, pairwise_decomposition, segment_blocks
from nobacktrack.rng import make_rng
from nobacktrack.variance import autocovariance_variance, exact_asymptotic_variance, simulate

from conftest import small_corpus

RESULTS = {}


def record(k, ok, detail):
    RESULTS[k] = f"{'PASS' if ok else 'FAIL'} criterion {k:>2}: {detail}"
    assert ok, RESULTS[k]


def modified(spec, f):
    nb = build_nobacktrack(spec.chain, liu_kernel(spec.chain))
    return nb, exact_asymptotic_variance(nb.chain, lift_function(f, nb))


def modified_corpus():
    out = []
    for seed in range(50):
        spec = ex.random_reversible(3 + seed % 6, density=0.5, seed=seed)
        rng = make_rng(seed, 100)
        fs = [rng.integers(-5, 6, spec.chain.n).astype(float) for _ in range(3)]
        out.append((spec, fs))
    return out


def test_criterion_01_zero_variance_line_walk():
    worst = 0.0
    for N in (3, 5, 9, 17):
        spec = ex.line_walk(N)
        rng = make_rng(N, 1)
        for _ in range(10):
            worst = max(worst, modified(spec, rng.integers(-10, 11, N).astype(float))[1])
    record(1, worst <= 1e-10, f"max modified V over 40 cases = {worst:.2e} (<= 1e-10)")


def test_criterion_02_random_walk_scaling():
    sizes = (8, 16, 32, 64)
    v = [exact_asymptotic_variance(s.chain, s.f) for s in map(ex.line_walk, sizes)]
    slope = rp.loglog_slope(sizes, v)
    record(2, abs(slope - 2.0) <= 0.2, f"log-log slope of V(f=x) = {slope:.4f} (target 2.0 +- 0.2)")


def test_criterion_02_companion_bounded_function():
    # not a criterion: with f = x/N the growth exponent is the diffusive 2
    sizes = (8, 16, 32, 64)
    v = [exact_asymptotic_variance(s.chain, s.f / s.chain.n) for s in map(ex.line_walk, sizes)]
    assert abs(rp.loglog_slope(sizes, v) - 2.0) <= 0.2


def test_criterion_03_variance_ordering():
    fails = 0
    for spec, fs in modified_corpus():
        nb = build_nobacktrack(spec.chain, liu_kernel(spec.chain))
        for f in fs:
            v0 = exact_asymptotic_variance(spec.chain, f)
            v1 = exact_asymptotic_variance(nb.chain, lift_function(f, nb))
            fails += v1 > v0 + 1e-9
    record(3, fails == 0, f"{150 - fails}/150 cases with V(modified) <= V(original) + 1e-9")


def test_criterion_04_modified_chain_structure():
    bad = []
    for spec, _ in modified_corpus():
        nb = build_nobacktrack(spec.chain, liu_kernel(spec.chain))
        if not check_irreducible(nb.chain):
            bad.append((spec.name, "reducible"))
        if not check_invariant(nb.chain, nb.lifted_dist, 1e-10):
            bad.append((spec.name, "not invariant"))
        if check_detailed_balance(nb.chain, nb.lifted_dist):
            bad.append((spec.name, "reversible"))
    two = build_nobacktrack(validate_chain([[0.0, 1.0], [1.0, 0.0]]))
    two_ok = check_detailed_balance(two.chain, two.lifted_dist)
    record(4, not bad and two_ok,
           f"50 chains irreducible/invariant/non-reversible, failures={bad[:3]}; 2-state lift reversible={two_ok}")


def test_criterion_05_peskun_theorem():
    fails = 0
    for seed in range(50):
        old, new = ex.random_dominated_pair(3 + seed % 6, seed=seed, n_changes=1)
        elementary_pair(old.chain, new.chain, old.dist)
        fails += exact_asymptotic_variance(new.chain, new.f) > exact_asymptotic_variance(old.chain, old.f) + 1e-9
    T, middle, Tp, pi = ex.peskun_matrices()
    steps = pairwise_decomposition(validate_chain(T), validate_chain(Tp), pi)
    exact = len(steps) == 2 and np.array_equal(steps[0].T, middle)
    record(5, fails == 0 and exact, f"{50 - fails}/50 pairs ordered; 3x3 middle matrix exact={exact}")


def test_criterion_06_counterexample():
    old, new = ex.peskun_counterexample(0.5)
    v_old = exact_asymptotic_variance(old.chain, old.f)
    v_new = exact_asymptotic_variance(new.chain, new.f)
    n = 10_000
    traj = simulate(old.chain, n, seed=0, init="A")
    ns = np.arange(1, n + 1)
    bound = bool(np.all(np.abs(np.cumsum(old.f[traj.states]) / ns) <= 1.0 / ns))
    record(6, v_old <= 1e-10 and v_new >= 0.01 and bound,
           f"V(T)={v_old:.2e}, V(T')={v_new:.4f}, |mu_n| <= 1/n for all n <= 1e4: {bound}")


@pytest.mark.slow
def test_criterion_07_block_laws():
    old, new = ex.peskun_counterexample()
    pairs = [(elementary_pair(old.chain, new.chain, old.dist), old.f, "counterexample")]
    for seed in range(5):
        o, w = ex.random_dominated_pair(5, seed=seed, n_changes=1)
        pairs.append((elementary_pair(o.chain, w.chain, o.dist), o.f, f"random:{seed}"))
    worst_z, strat = 0.0, True
    for pair, f, _ in pairs:
        a, b = delta_coupled_simulate(pair, 1_000_000, seed=0)
        for name, traj in (("old", a), ("new", b)):
            s = block_statistics(segment_blocks(traj, f, pair, name))
            for key in ("AA-BB", "AB-BA"):
                d = s[key]
                z = abs(d["diff"]) / d["stderr"] if d["stderr"] > 0 else (0.0 if d["diff"] == 0 else math.inf)
                worst_z = max(worst_z, z)
            if name == "new":
                strat &= abs(s["AA-BB"]["count_diff"]) <= 1
    record(7, worst_z <= 3 and strat,
           f"6 pairs x 1e6 steps: max |diff|/stderr = {worst_z:.2f} (<= 3); new |N_AA - N_BB| <= 1: {strat}")


@pytest.mark.slow
def test_criterion_08_lemma1():
    rep = rp.lemma1(n=100_000, reps=200, seed=0)
    zs = [r["z"] for r in rep.rows]
    record(8, all(abs(z) < 4 for z in zs), f"6 harness runs, max |z| = {max(map(abs, zs)):.2f} (< 4)")


@pytest.mark.slow
def test_criterion_09_lemma2():
    rep = rp.lemma2(n_seeds=20, seed=0)
    ok = sum(r["pass"] for r in rep.rows)
    cz = rep.meta["control"]["z"]
    record(9, ok >= 19 and abs(cz) < 4, f"{ok}/20 runs with R' not worse (need 19); control |z| = {abs(cz):.2f} (< 4)")


@pytest.mark.slow
def test_criterion_10_sampler_fidelity():
    line, rect = ex.line_walk(5).chain, ex.rectangle(4, 3).chain
    cases = [(line, "1", "1"), (line, "1", "2"), (line, "3", "2"), (line, "5", "4"), (line, "5", "5"),
             (rect, "1,1", "1,1"), (rect, "1,1", "2,1"), (rect, "2,2", "2,3"), (rect, "2,1", "2,1"),
             (rect, "4,3", "3,3")]
    pvals = []
    for k, (chain, x, y) in enumerate(cases):
        rng = make_rng(0, 10, k)
        draws = np.array([sample_update(chain, x, y, rng) for _ in range(100_000)])
        expected = liu_kernel(chain).row(chain.index(x), chain.index(y))
        sup = expected > 0
        obs = np.bincount(draws, minlength=chain.n)
        if obs[~sup].sum():
            pvals.append(0.0)
        elif sup.sum() == 1:
            pvals.append(1.0)
        else:
            pvals.append(stats.chisquare(obs[sup], 100_000 * expected[sup]).pvalue)
    record(10, min(pvals) > 0.001, f"10 pair-states x 1e5 draws, min chi-square p = {min(pvals):.4f} (> 0.001)")


def test_criterion_11_oracle_cross_check():
    chains = [(s.chain, s.f) for s in small_corpus()]
    for N in (3, 5):
        spec = ex.line_walk(N)
        nb = build_nobacktrack(spec.chain)
        chains.append((nb.chain, lift_function(spec.f, nb)))
    worst = 0.0
    for chain, f in chains:
        assert chain.n <= 12
        worst = max(worst, abs(exact_asymptotic_variance(chain, f) - autocovariance_variance(chain, f)))
    record(11, worst <= 1e-8, f"{len(chains)} chains, max |Poisson - autocovariance| = {worst:.2e} (<= 1e-8)")


def test_criterion_12_rectangle_constant_factor():
    rep = rp.rectangle(sizes=((4, 3), (8, 3), (16, 3), (8, 6)))
    ratios = [r["ratio"] for r in rep.rows]
    band = max(ratios) / min(ratios)
    record(12, band <= 3.0, "ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f"; band factor {band:.3f} (<= 3)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
