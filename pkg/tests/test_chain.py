import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nobacktrack import examples as ex
from nobacktrack.chain import (
    as_distribution,
    balance_defect,
    check_detailed_balance,
    check_invariant,
    check_irreducible,
    metropolize,
    period,
    stationary_distribution,
    validate_chain,
)
from nobacktrack.errors import (
    DimensionMismatch,
    NegativeEntry,
    NonUniqueStationary,
    NotSquare,
    RowSumViolation,
    ZeroTargetProbability,
)


def test_identity_is_valid():
    c = validate_chain(np.eye(2))
    assert c.n == 2 and c.states == ("0", "1")


def test_row_sum_violation_reports_row():
    with pytest.raises(RowSumViolation) as err:
        validate_chain([[0.5, 0.5], [0.3, 0.6]])
    assert err.value.row == 1


def test_negative_entry():
    with pytest.raises(NegativeEntry) as err:
        validate_chain([[1.2, -0.2], [0.5, 0.5]])
    assert (err.value.row, err.value.col) == (0, 0)


def test_not_square():
    with pytest.raises(NotSquare):
        validate_chain(np.ones((2, 3)) / 3)


def test_zero_row_rejected():
    with pytest.raises(RowSumViolation):
        validate_chain([[0.0, 0.0], [0.5, 0.5]])


def test_tiny_negative_clipped_not_renormalized():
    c = validate_chain([[1.0 + 1e-12, -1e-12], [0.5, 0.5]])
    assert c.T[0, 1] == 0.0 and c.T[0, 0] == 1.0


def test_matrix_is_read_only():
    c = validate_chain(np.eye(2))
    with pytest.raises(ValueError):
        c.T[0, 0] = 0.5


def test_label_count_must_match():
    with pytest.raises(DimensionMismatch):
        validate_chain(np.eye(2), states=["a"])


def test_stationary_two_state():
    c = validate_chain([[0.9, 0.1], [0.3, 0.7]])
    np.testing.assert_allclose(stationary_distribution(c), [0.75, 0.25], atol=1e-12)


def test_stationary_periodic():
    c = validate_chain([[0, 1], [1, 0]])
    np.testing.assert_allclose(stationary_distribution(c), [0.5, 0.5], atol=1e-12)
    assert period(c) == 2


def test_stationary_reducible_raises():
    with pytest.raises(NonUniqueStationary):
        stationary_distribution(validate_chain(np.eye(3)))


def test_line_walk_uniform_and_reversible():
    spec = ex.line_walk(7)
    pi = stationary_distribution(spec.chain)
    np.testing.assert_allclose(pi, np.full(7, 1 / 7), atol=1e-12)
    assert check_detailed_balance(spec.chain, pi)
    assert check_irreducible(spec.chain)


def test_counterexample_invariant_not_reversible():
    old, new = ex.peskun_counterexample()
    for s in (old, new):
        assert check_invariant(s.chain, s.dist)
        assert not check_detailed_balance(s.chain, s.dist)
        np.testing.assert_allclose(stationary_distribution(s.chain), s.dist, atol=1e-12)


def test_irreducible_detects_absorbing():
    c = validate_chain([[1.0, 0.0], [0.5, 0.5]])
    assert not check_irreducible(c)


def test_metropolize_zero_target_raises():
    with pytest.raises(ZeroTargetProbability):
        metropolize(validate_chain(np.full((2, 2), 0.5)), [1.0, 0.0])


def test_as_distribution_rejects_bad_sum():
    with pytest.raises(ValueError):
        as_distribution([0.5, 0.6])


@st.composite
def positive_targets(draw, n=st.integers(2, 7)):
    k = draw(n)
    w = np.array(draw(st.lists(st.floats(0.05, 10.0), min_size=k, max_size=k)))
    return w / w.sum()


@settings(max_examples=60, deadline=None)
@given(pi=positive_targets(), seed=st.integers(0, 2**32))
def test_metropolize_reversible_for_target(pi, seed):
    rng = np.random.default_rng(seed)
    S = rng.random((len(pi), len(pi)))
    S /= S.sum(axis=1, keepdims=True)
    T = metropolize(validate_chain(S), pi)
    assert balance_defect(T, pi) <= 1e-12
    assert check_invariant(T, pi)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 10_000), density=st.floats(0.1, 1.0))
def test_random_reversible_properties(n, seed, density):
    spec = ex.random_reversible(n, density, seed=seed)
    assert check_irreducible(spec.chain)
    assert check_detailed_balance(spec.chain, spec.dist)
    np.testing.assert_allclose(stationary_distribution(spec.chain), spec.dist, atol=1e-10)
