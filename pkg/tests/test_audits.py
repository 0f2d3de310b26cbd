import pytest

from chi2tail import audits as au
from chi2tail.simplex import RngSeed, ValidationError

FAST = 20_000


@pytest.mark.parametrize("name", ["sandwich", "residual_split_c1", "lemma3_laplace",
                                  "lemma3_confidence", "lemma5", "remark"])
def test_asserting_audits_clean(name):
    r = au.run_audit(name, FAST, RngSeed(1))
    assert r.trials == FAST and r.violations == 0 and r.passed and r.worst_slack >= 0


def test_residual_split_finds_counterexamples():
    r = au.run_audit("residual_split", FAST, RngSeed(1))
    assert r.violations > 0 and not r.passed
    p, q, lhs, rhs = r.table[0]
    assert q < p / 8 and lhs > rhs


def test_exploratory_lemma5_reports_without_failing():
    r = au.run_audit("lemma5_exploratory", FAST, RngSeed(1))
    assert not r.asserting and r.passed
    for d, n, lam, lhs, rhs in r.table:
        assert lam * d < n and lhs > rhs


def test_remark_search_reaches_extremal_value():
    # the largest possible loss is n + d - 1, i.e. slack 2 at n = d
    r = au.run_audit("remark", 100_000, RngSeed(8))
    assert r.worst_slack >= 2.0 - 1e-9


def test_domination_grid():
    r = au.audit_domination()
    assert r.trials == 3 * 50 * 101 and r.violations == 0


def test_fixed_grid_audits():
    for name in ("moment_closed_form", "convexity", "laplace_bound"):
        assert au.run_audit(name, 200, RngSeed(3)).passed


def test_enumeration_grid_shape():
    g = au.enumeration_grid()
    assert (16, 2) in g and (10, 3) in g and (2, 316) in g and (1, 1000) in g
    assert (1, 100_000) in g and (2, 317) not in g
    assert all(d**n <= 100_000 for n, d in g)


@pytest.mark.parametrize("workers", [4, 16])
def test_audits_worker_invariant(workers):
    for name in ("lemma3_laplace", "lemma5_exploratory"):
        a = au.run_audit(name, 10_000, RngSeed(5), 1)
        b = au.run_audit(name, 10_000, RngSeed(5), workers)
        assert a == b


def test_unknown_audit():
    with pytest.raises(ValidationError, match="valid names"):
        au.run_audit("lemma9", 10, RngSeed(1))
