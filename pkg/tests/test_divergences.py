import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from chi2tail.divergences import (
    PreconditionError,
    chi2,
    chi2_rows,
    chi2_terms,
    chi2_via_second_moment,
    f_loss,
    f_sandwich_check,
    hellinger_sq,
    kl,
    residual_split_bound,
    sandwich_violations,
    tv,
)
from chi2tail.simplex import ValidationError, dirac, make_distribution, uniform

from .strategies import weight_pairs, weights


def _brute_chi2(p, q):
    # independent loop oracle with the same conventions
    total = 0.0
    for a, b in zip(p, q):
        if b == 0:
            if a > 0:
                return math.inf
            continue
        total += (a - b) ** 2 / b
    return total


def test_chi2_examples():
    P = make_distribution([3, 1, 2])
    assert chi2(P, P) == 0.0
    for d in (2, 5, 17):
        assert chi2(dirac(0, d), uniform(d)) == pytest.approx(d - 1, rel=1e-12)
    assert chi2([1, 0], [0, 1]) == math.inf
    assert chi2([0, 1], [0, 1]) == 0.0
    with pytest.raises(ValidationError):
        chi2([1, 0], [1, 0, 0])


def test_second_moment_examples():
    assert chi2_via_second_moment(uniform(2), uniform(2)) == 0.0
    assert chi2_via_second_moment(dirac(0, 4), uniform(4)) == pytest.approx(3.0)
    assert chi2_via_second_moment([0.5, 0.5], [0.75, 0.25]) == pytest.approx(1 / 3, rel=1e-14)
    with pytest.raises(ValidationError):
        chi2_via_second_moment([0.5, 0.5], [1.0, 0.0])


def test_other_divergence_examples():
    P = make_distribution([1, 2, 3])
    assert kl(P, P) == hellinger_sq(P, P) == tv(P, P) == 0.0
    assert tv([1, 0], [0, 1]) == 1.0
    assert hellinger_sq([1, 0], [0, 1]) == 2.0
    assert kl([1, 0], [0, 1]) == math.inf
    assert kl([0.5, 0.5], [0.25, 0.75]) == pytest.approx(
        0.5 * math.log(2) + 0.5 * math.log(2 / 3))


def test_f_loss_examples():
    assert f_loss(0.3, 0.3) == 0.0
    assert f_loss(0.5, 0.25) == 0.25
    assert f_loss(1, 0.125) == 6.125
    with pytest.raises(ValidationError):
        f_loss(0.5, 0.0)


def test_sandwich_examples():
    r = f_sandwich_check(0.3, 0.3)
    assert r.lower_ok and r.upper_ok and r.loss == 0 and r.hellinger == 0
    r = f_sandwich_check(1.0, 0.125)
    assert r.loss == 6.125
    # 15 (1 - sqrt(1/8))^2 = 6.2684
    assert 15 * r.hellinger == pytest.approx(15 * (1 - math.sqrt(0.125)) ** 2, rel=1e-14)
    assert 15 * r.hellinger == pytest.approx(6.2684, abs=1e-4)
    assert r.upper_ok and r.upper_slack > 0
    with pytest.raises(PreconditionError):
        f_sandwich_check(0.4, 0.01)


def test_chi2_rows_matches_loop(rng):
    P = rng.dirichlet(np.ones(6))
    Q = rng.dirichlet(np.ones(6), size=20)
    Q[3, 2] = 0.0
    rows = chi2_rows(P, Q)
    for r, q in zip(rows, Q):
        assert r == pytest.approx(_brute_chi2(P, q), rel=1e-12) or r == _brute_chi2(P, q)


@given(weight_pairs(1, 100))
def test_chi2_nonneg_and_identity(pair):
    w1, w2 = pair
    P, Q = make_distribution(w1), make_distribution(w2)
    v = chi2(P, Q)
    assert v >= 0
    assert chi2(P, P) == 0.0
    if v == 0:
        assert np.array_equal(P.probs, Q.probs)


@given(st.integers(1, 100).flatmap(lambda d: st.tuples(st.just(d), st.integers(0, 2**32 - 1))))
def test_chi2_zero_iff_equal(args):
    d, seed = args
    rng = np.random.default_rng(seed)
    P = make_distribution(rng.dirichlet(np.ones(d)))
    Q = make_distribution(rng.dirichlet(np.ones(d)))
    assert (chi2(P, Q) == 0) == np.array_equal(P.probs, Q.probs)


@given(weights(1, 100), st.integers(0, 2**32 - 1))
def test_second_moment_agrees(w, seed):
    P = make_distribution(w)
    rng = np.random.default_rng(seed)
    Q = make_distribution(rng.dirichlet(np.ones(P.d)) + 1e-9)
    a, b = chi2(P, Q), chi2_via_second_moment(P, Q)
    assert abs(a - b) <= 1e-10 * (1 + a)


@given(weight_pairs(1, 60))
def test_hellinger_below_chi2(pair):
    w1, w2 = pair
    P, Q = make_distribution(w1), make_distribution(w2)
    c = chi2(P, Q)
    if math.isfinite(c):
        assert hellinger_sq(P, Q) <= c + 1e-12 * (1 + c)


@given(st.floats(1e-9, 1.0), st.floats(1e-9, 1.0))
def test_sandwich_property(p, q):
    assume(q >= p / 8)
    r = f_sandwich_check(p, q)
    assert r.lower_ok and r.upper_ok


def test_sandwich_vectorized(rng):
    p = np.exp(rng.uniform(np.log(1e-9), 0, 10**5))
    q = np.exp(rng.uniform(np.log(1e-9), 0, 10**5))
    keep = q >= p / 8
    assert sandwich_violations(p[keep], q[keep]) == (0, 0)
    with pytest.raises(PreconditionError):
        sandwich_violations(np.array([1.0]), np.array([0.01]))


def test_residual_split_with_unit_coefficient(rng):
    p = np.exp(rng.uniform(np.log(1e-9), 0, 10**5))
    q = np.exp(rng.uniform(np.log(1e-9), 0, 10**5))
    assert np.all((p - q) ** 2 / q <= residual_split_bound(p, q, 1.0) * (1 + 1e-12))


def test_residual_split_default_coefficient_counterexample():
    # q = p/100: F = 98.01 p, rhs = 15 * 0.81 p + 0.765625 * 100 p = 88.71 p
    p, q = 1.0, 0.01
    assert f_loss(p, q) > float(residual_split_bound(p, q))


def test_chi2_terms_broadcasts():
    t = chi2_terms([0.5, 0.5], np.array([[0.5, 0.5], [1.0, 0.0]]))
    assert t[0].tolist() == [0, 0]
    assert t[1, 1] == math.inf
