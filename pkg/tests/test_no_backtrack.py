import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from nobacktrack import examples as ex
from nobacktrack.chain import check_detailed_balance, check_invariant, check_irreducible, validate_chain
from nobacktrack.errors import KernelConditionViolation, NotReversible
from nobacktrack.no_backtrack import (
    UpdateKernel,
    build_nobacktrack,
    expand_states,
    identity_kernel,
    lift_chain,
    lift_distribution,
    lift_function,
    liu_kernel,
    sample_update,
    simulate_nobacktrack,
    verify_update_conditions,
)
from nobacktrack.rng import make_rng
from nobacktrack.variance import exact_asymptotic_variance, expected_estimate


def test_expand_states_loop_free_two_state():
    c = validate_chain([[0, 1], [1, 0]])
    assert expand_states(c) == [(0, 1), (1, 0)]


def test_lift_distribution_marginals():
    spec = ex.random_reversible(6, seed=3)
    pairs = np.array(expand_states(spec.chain))
    p = lift_distribution(spec.chain)
    for k in (0, 1):
        marg = np.bincount(pairs[:, k], weights=p, minlength=spec.chain.n)
        np.testing.assert_allclose(marg, spec.dist, atol=1e-12)


def test_lift_requires_reversibility():
    old, _ = ex.peskun_counterexample()
    with pytest.raises(NotReversible):
        lift_distribution(old.chain, old.dist)


def test_identity_kernel_reproduces_lift_chain(corpus):
    for spec in corpus:
        if not check_detailed_balance(spec.chain, spec.dist):
            continue
        a = lift_chain(spec.chain)
        b = build_nobacktrack(spec.chain, identity_kernel(spec.chain))
        assert np.array_equal(a.chain.T, b.chain.T)


def test_lift_chain_preserves_variance():
    spec = ex.rectangle(3, 3)
    lifted = lift_chain(spec.chain)
    v0 = exact_asymptotic_variance(spec.chain, spec.f)
    v1 = exact_asymptotic_variance(lifted.chain, lift_function(spec.f, lifted))
    assert v1 == pytest.approx(v0, rel=1e-9)


def test_line_walk_5_modified_is_deterministic_cycle():
    spec = ex.line_walk(5)
    nb = build_nobacktrack(spec.chain, liu_kernel(spec.chain))
    assert nb.chain.n == 10
    assert np.all(np.isin(nb.chain.T, (0.0, 1.0)))
    assert check_irreducible(nb.chain)
    traj = simulate_nobacktrack(spec.chain, 12, start=("1", "2"), seed=0)
    seconds = [spec.chain.states[nb.second[i]] for i in traj.states]
    assert seconds == ["2", "3", "4", "5", "5", "4", "3", "2", "1", "1", "2", "3"]


def test_broken_kernel_reports_triple():
    spec = ex.line_walk(3)
    k = liu_kernel(spec.chain)
    U = k.U.copy()
    # pair (x=1, y=0): lower mass sent to z=2 below T(1, 2)
    U[1, 0, 2] -= 0.6
    U[1, 0, 0] += 0.6
    bad = verify_update_conditions(spec.chain, UpdateKernel(spec.chain, U, "broken"))
    assert any((v.x, v.y, v.z, v.condition) == (1, 0, 2, "domination") for v in bad)
    with pytest.raises(KernelConditionViolation):
        build_nobacktrack(spec.chain, UpdateKernel(spec.chain, U, "broken"))


def test_two_state_exemption():
    c = validate_chain([[0, 1], [1, 0]])
    nb = build_nobacktrack(c)
    assert check_detailed_balance(nb.chain, nb.lifted_dist)


def test_two_state_with_self_loops_is_not_reversible():
    # (x, x) -> (x, y) is possible but (x, y) -> (x, x) is not
    c = validate_chain([[0.3, 0.7], [0.6, 0.4]])
    nb = build_nobacktrack(c)
    assert not check_detailed_balance(nb.chain, nb.lifted_dist)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 8), seed=st.integers(0, 10_000), density=st.floats(0.2, 1.0))
def test_modified_chain_claims(n, seed, density):
    spec = ex.random_reversible(n, density, seed=seed)
    k = liu_kernel(spec.chain)
    assert verify_update_conditions(spec.chain, k) == []
    nb = build_nobacktrack(spec.chain, k)
    assert check_irreducible(nb.chain)
    assert check_invariant(nb.chain, nb.lifted_dist)
    assert not check_detailed_balance(nb.chain, nb.lifted_dist)
    ff = lift_function(spec.f, nb)
    assert exact_asymptotic_variance(nb.chain, ff) <= exact_asymptotic_variance(spec.chain, spec.f) + 1e-9


def _chi2_pvalue(chain, x, y, draws, seed):
    rng = make_rng(seed)
    z = np.array([sample_update(chain, x, y, rng) for _ in range(draws)])
    expected = liu_kernel(chain).row(x, y)
    support = expected > 0
    observed = np.bincount(z, minlength=chain.n)
    assert observed[~support].sum() == 0
    if support.sum() == 1:
        return 1.0
    return stats.chisquare(observed[support], draws * expected[support]).pvalue


@pytest.mark.parametrize("x,y", [(1, 2), (0, 0), (2, 1)])
def test_sampler_matches_kernel_line(x, y):
    assert _chi2_pvalue(ex.line_walk(4).chain, x, y, 20_000, seed=x * 10 + y) > 0.001


def test_sampler_high_current_probability_branch():
    # T(0, 0) = 0.6 >= 1/2 exercises the masked-proposal branch
    c = validate_chain([[0.6, 0.3, 0.1], [0.3, 0.4, 0.3], [0.1, 0.3, 0.6]])
    assert _chi2_pvalue(c, 0, 0, 40_000, seed=5) > 0.001
    assert _chi2_pvalue(c, 0, 1, 40_000, seed=6) > 0.001


def test_on_the_fly_matches_materialized():
    spec = ex.random_reversible(5, seed=7)
    nb = build_nobacktrack(spec.chain)
    x, y = expand_states(spec.chain)[0]
    traj = simulate_nobacktrack(spec.chain, 200_000, start=(x, y), seed=1)
    s = traj.states
    counts = np.zeros((nb.chain.n, nb.chain.n))
    np.add.at(counts, (s[:-1], s[1:]), 1)
    for i in range(nb.chain.n):
        row = nb.chain.T[i]
        sup = row > 0
        if counts[i].sum() < 500 or sup.sum() < 2:
            continue
        assert counts[i, ~sup].sum() == 0
        assert stats.chisquare(counts[i, sup], counts[i].sum() * row[sup]).pvalue > 1e-4


def test_bias_is_order_one_over_n():
    spec = ex.random_reversible(6, seed=2)
    nb = build_nobacktrack(spec.chain)
    ff = lift_function(spec.f, nb)
    mu = spec.dist @ spec.f
    start = np.zeros(nb.chain.n)
    start[0] = 1.0
    scaled = [n * abs(expected_estimate(nb.chain, ff, start, n) - mu) for n in (100, 1000, 10_000)]
    # n * bias settles to a constant instead of growing
    assert scaled[2] == pytest.approx(scaled[1], rel=0.05)
    assert scaled[2] < 2 * scaled[0] + 1e-9
