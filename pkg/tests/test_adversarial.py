import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chi2tail.adversarial import (
    DomainError,
    all_ones_value,
    build_family,
    convexity_gap,
    lemma1_certificate,
    lemma1_threshold,
    lemma2_certificate,
)
from chi2tail.divergences import chi2
from chi2tail.estimators import LAPLACE, ConfidenceDependent, Empirical
from chi2tail.simplex import Distribution, dirac, uniform


def test_family_example():
    fam = build_family(4, 3, math.exp(-2))
    assert fam.rho == pytest.approx(1 - math.exp(-0.5), rel=1e-15)
    assert fam.rho == pytest.approx(0.393469, abs=1e-6)
    assert fam.members[2].probs.tolist() == pytest.approx([0.606531, 0, 0.393469], abs=1e-6)
    assert fam.members[0] == dirac(0, 3)


@given(st.integers(2, 200), st.data())
def test_all_ones_probability_is_delta(n, data):
    d = data.draw(st.integers(2, n))
    L = data.draw(st.floats(1.0 + 1e-9, n - 1e-9))
    delta = math.exp(-L)
    fam = build_family(n, d, delta)
    assert 0 < fam.rho <= 1 - math.exp(-1) + 1e-15
    for j in range(1, d):
        P = fam.members[j]
        assert np.count_nonzero(P.probs) <= 2
        assert fam.all_ones_probability(j) == pytest.approx(delta, rel=1e-12)
        # independent route: product of n draws, each landing in class 0
        assert math.exp(n * math.log(P.probs[0])) == pytest.approx(delta, rel=1e-12)


def test_family_domain_errors():
    with pytest.raises(DomainError):
        build_family(5, 6, 0.1)
    with pytest.raises(DomainError):
        build_family(5, 3, 0.5)
    with pytest.raises(DomainError):
        build_family(5, 3, math.exp(-6))
    # the relaxed construction still works for any delta in (0, 1)
    fam = build_family(5, 3, 0.5, strict=False)
    assert fam.all_ones_probability(1) == pytest.approx(0.5, rel=1e-12)


def test_all_ones_value_examples():
    q = all_ones_value(LAPLACE, 1000, 10).probs
    assert q[0] == pytest.approx(1001 / 1010, rel=1e-15)
    assert np.allclose(q[1:], 1 / 1010, rtol=1e-15)
    assert all_ones_value(Empirical(), 1000, 10) == dirac(0, 10)
    q = all_ones_value(ConfidenceDependent(math.exp(-40)), 1000, 16).probs
    assert np.allclose(q[1:], 10 / 1160, rtol=1e-13)


def test_lemma2_example():
    delta = math.exp(-8)
    c = lemma2_certificate(LAPLACE, 1000, 10, delta, 1.0)
    assert c.event_prob == pytest.approx(delta, rel=1e-12)
    assert c.rho == pytest.approx(0.0079681, abs=1e-7)
    assert c.q_j == pytest.approx(1 / 1010, rel=1e-15)
    assert c.witness_j == 1
    assert c.witness_term == pytest.approx(0.0492, abs=5e-5)
    assert c.threshold == pytest.approx(0.00256, rel=1e-12)
    assert c.loss_on_event >= c.witness_term >= c.threshold
    assert c.relaxed_bound <= c.witness_term
    assert c.holds
    # the full divergence on the event, evaluated independently
    P = np.zeros(10)
    P[0], P[1] = math.exp(-8 / 1000), c.rho
    Q = np.full(10, 1 / 1010)
    Q[0] = 1001 / 1010
    assert c.loss_on_event == pytest.approx(chi2(P, Q), rel=1e-12)


def test_lemma2_empirical_and_domain():
    c = lemma2_certificate(Empirical(), 500, 8, math.exp(-10))
    assert c.loss_on_event == math.inf and c.holds
    with pytest.raises(DomainError):
        lemma2_certificate(LAPLACE, 1000, 10, math.exp(-6), 1.0)
    with pytest.raises(DomainError):
        lemma2_certificate(LAPLACE, 1000, 10, math.exp(-10), 2.0)


def test_lemma2_tie_break_smallest_index():
    def est(counts):
        q = np.array([0.5, 0.2, 0.1, 0.1, 0.1])
        return Distribution(q)
    assert lemma2_certificate(est, 100, 5, math.exp(-10)).witness_j == 2


def test_lemma1_examples():
    c = lemma1_certificate(LAPLACE, 10**4, 100, math.exp(-10))
    # alpha = 99/101 >= 10/70: the point mass is the witness, surely
    assert c.regime == "large_alpha" and c.event_prob == 1.0
    assert c.alpha == pytest.approx(99 / 101)
    assert c.holds
    assert c.threshold == pytest.approx(lemma1_threshold(10**4, 100, math.exp(-10)))

    d = 8
    c = lemma1_certificate(lambda counts: uniform(d), 50, d, math.exp(-30))
    assert c.regime == "large_deviation"
    assert c.alpha == pytest.approx((d - 1) / d)
    assert c.holds

    c = lemma1_certificate(lambda counts: dirac(0, 6), 100, 6, math.exp(-3))
    assert c.witness_j >= 1 and c.loss_on_event == math.inf and c.holds


def test_lemma1_large_alpha_branch():
    # leaking a lot of mass in the moderate regime makes the point mass the witness
    d, n = 16, 1000
    c = lemma1_certificate(lambda counts: uniform(d), n, d, math.exp(-3))
    assert c.regime == "large_alpha" and c.witness_j == 0
    assert c.event_prob == 1.0
    assert c.loss_on_event == pytest.approx(d - 1)
    assert c.holds


GRID = [(n, d, L) for n in (100, 10**3, 10**4) for d in (4, 16, 64) for L in (2, 8, 32)]


@pytest.mark.parametrize("n,d,L", GRID)
def test_certificates_hold_on_grid(n, d, L):
    delta = math.exp(-L)
    for rule in (LAPLACE, ConfidenceDependent(delta)):
        if n >= d and L < n:
            c = lemma1_certificate(rule, n, d, delta)
            assert c.holds, (n, d, L, rule, c)
            assert c.event_prob == pytest.approx(delta if c.witness_j else 1.0, rel=1e-12)
        if n >= d and 6.32 < L < n:
            assert lemma2_certificate(rule, n, d, delta).holds


def test_convexity_inequality():
    x = np.linspace(0, 1, 10**4)
    assert np.all(convexity_gap(x) >= -1e-15)
    assert convexity_gap(np.array([0.0, 1.0])) == pytest.approx([0, 0], abs=1e-15)
    assert convexity_gap(np.array([2.0]))[0] < 0
