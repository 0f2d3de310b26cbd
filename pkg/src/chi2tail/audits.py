"""Randomized searches for counterexamples to the pointwise inequalities.

Each audit draws its trials in seeded blocks (see :mod:`chi2tail.montecarlo`)
and returns an :class:`AuditResult`. ``worst_slack`` is the smallest observed
``rhs - lhs``; a negative value means a violation was found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import montecarlo as mc
from scipy import stats

from .adversarial import convexity_gap
from .divergences import SANDWICH_CONSTANT, chi2_rows, residual_split_bound
from .exact import (
    EnvelopeW,
    envelope_lp_norm,
    envelope_moment_bound,
    envelope_tail,
    exact_laplace_chi2_expectation,
    expected_inverse_count_plus_one,
    poisson_tail_bounds,
)
from .simplex import Distribution, RngSeed, ValidationError, make_distribution

RTOL = 1e-12


@dataclass
class AuditResult:
    name: str
    trials: int
    violations: int
    worst_slack: float
    asserting: bool = True
    table: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 or not self.asserting


def _merge(name, parts, trials, asserting=True, table_limit=50) -> AuditResult:
    viol = sum(p[0] for p in parts)
    worst = min(p[1] for p in parts)
    table = [row for p in parts for row in p[2]][:table_limit]
    return AuditResult(name, trials, viol, worst, asserting, table)


def _log_uniform(rng, size, lo=1e-9, hi=1.0):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _sandwich_block(rng, size):
    # rejection: keep pairs with q >= p/8 until the block is full
    p_acc, q_acc, have = [], [], 0
    while have < size:
        p = _log_uniform(rng, 2 * size)
        q = _log_uniform(rng, 2 * size)
        ok = q >= p / 8.0
        p_acc.append(p[ok])
        q_acc.append(q[ok])
        have += int(ok.sum())
    p = np.concatenate(p_acc)[:size]
    q = np.concatenate(q_acc)[:size]
    loss = (p - q) ** 2 / q
    h = (np.sqrt(p) - np.sqrt(q)) ** 2
    tol = RTOL * np.maximum(loss, h)
    lower = loss - h
    upper = SANDWICH_CONSTANT * h - loss
    bad = (lower < -tol) | (upper < -tol)
    rows = [(float(a), float(b)) for a, b in zip(p[bad][:5], q[bad][:5])]
    return int(bad.sum()), float(min(lower.min(), upper.min())), rows


def audit_sandwich(trials: int, seed: RngSeed, workers: int = 1) -> AuditResult:
    """``(sqrt p - sqrt q)^2 <= F(p, q) <= 15 (sqrt p - sqrt q)^2`` on ``q >= p/8``."""
    parts = mc.run_blocks(_sandwich_block, trials, seed, (), workers)
    return _merge("sandwich", parts, trials)


def _split_block(rng, size, coefficient):
    p = _log_uniform(rng, size)
    q = _log_uniform(rng, size)
    loss = (p - q) ** 2 / q
    rhs = residual_split_bound(p, q, coefficient)
    slack = rhs - loss
    bad = slack < -RTOL * loss
    rows = [(float(a), float(b), float(c), float(e))
            for a, b, c, e in zip(p[bad][:5], q[bad][:5], loss[bad][:5], rhs[bad][:5])]
    return int(bad.sum()), float(slack.min()), rows


def audit_residual_split(trials: int, seed: RngSeed, coefficient: float = (7 / 8) ** 2,
                         workers: int = 1) -> AuditResult:
    """``F(p,q) <= 15 (sqrt p - sqrt q)^2 + c p^2/q 1(q <= p/8)`` over all pairs."""
    parts = mc.run_blocks(_split_block, trials, seed, (coefficient,), workers)
    name = "residual_split" if coefficient == (7 / 8) ** 2 else f"residual_split_c{coefficient:g}"
    return _merge(name, parts, trials)


def _random_simplex_rows(rng, size, d):
    """Rows spread from near-uniform to very sparse (Dirichlet with random concentration)."""
    conc = np.exp(rng.uniform(math.log(0.02), math.log(20.0), size))[:, None]
    g = rng.standard_gamma(np.broadcast_to(conc, (size, d)))
    s = g.sum(axis=1, keepdims=True)
    # a Dirichlet row can underflow to all zeros at tiny concentration
    dead = s[:, 0] == 0
    if dead.any():
        g[dead, rng.integers(0, d, int(dead.sum()))] = 1.0
        s = g.sum(axis=1, keepdims=True)
    return g / s


def _lemma3_block(rng, size, which):
    d = int(rng.integers(2, 51))
    n = rng.integers(d, 50 * d + 1, size)
    # sqrt(d) log(1/delta) / n <= 1
    L = rng.uniform(0.0, 1.0, size) * n / math.sqrt(d)
    L = np.maximum(L, 1e-9)
    if which == "laplace":
        lam = np.ones(size)
    else:
        lam = np.maximum(1.0, L / math.sqrt(d))
    lam = np.minimum(lam, n / d)
    P = _random_simplex_rows(rng, size, d)
    counts = rng.multinomial(n, P)
    lhs, rhs = mc.lemma3_rows(counts, P, lam)
    slack = rhs - lhs
    bad = slack < -mc.AUDIT_ATOL
    rows = [(d, int(a), float(b)) for a, b in zip(n[bad][:5], lam[bad][:5])]
    return int(bad.sum()), float(slack.min()), rows


def audit_lemma3(trials: int, seed: RngSeed, which: str = "laplace",
                 workers: int = 1) -> AuditResult:
    """First decomposition over random ``(P, sample)`` pairs in its stated domain.

    ``which`` selects ``lam = 1`` (``"laplace"``) or the confidence-tuned
    ``lam = max(1, log(1/delta)/sqrt d)`` (``"confidence"``).
    """
    parts = mc.run_blocks(_lemma3_block, trials, seed, (which,), workers)
    return _merge(f"lemma3_{which}", parts, trials)


def _lemma5_block(rng, size, exploratory):
    d = int(rng.integers(2, 51))
    n = rng.integers(d, 50 * d + 1, size)
    if exploratory:
        # stated domain (0, n/d]
        lam = rng.uniform(0.0, 1.0, size) * (n / d)
        lam = np.maximum(lam, 1e-6)
    else:
        lam = (n / d) * np.exp(rng.uniform(0.0, math.log(50.0), size))
    P = _random_simplex_rows(rng, size, d)
    counts = rng.multinomial(n, P)
    lhs, rhs = mc.lemma5_rows(counts, P, lam)
    slack = rhs - lhs
    bad = slack < -mc.AUDIT_ATOL
    rows = [(d, int(a), float(b), float(c), float(e))
            for a, b, c, e in zip(n[bad][:5], lam[bad][:5], lhs[bad][:5], rhs[bad][:5])]
    return int(bad.sum()), float(slack.min()), rows


def audit_lemma5(trials: int, seed: RngSeed, exploratory: bool = False,
                 workers: int = 1) -> AuditResult:
    """Second decomposition; asserting on ``lam d >= n``, reporting-only on ``(0, n/d]``."""
    parts = mc.run_blocks(_lemma5_block, trials, seed, (exploratory,), workers)
    name = "lemma5_exploratory" if exploratory else "lemma5"
    return _merge(name, parts, trials, asserting=not exploratory)


def _remark_block(rng, size):
    d = int(rng.integers(2, 51))
    n = rng.integers(d, 10 * d + 1, size)
    P = _random_simplex_rows(rng, size, d)
    # half the count vectors are unrelated to P: the bound is claimed for every one
    other = _random_simplex_rows(rng, size, d)
    use_p = rng.random(size) < 0.5
    counts = rng.multinomial(n, np.where(use_p[:, None], P, other))
    q = (counts + 1.0) / (n + d)[:, None]
    loss = chi2_rows(P, q)
    slack = 2.0 * n + 1.0 - loss
    bad = slack < 0
    rows = [(d, int(a), float(b)) for a, b in zip(n[bad][:5], loss[bad][:5])]
    return int(bad.sum()), float(slack.min()), rows


def audit_remark(trials: int, seed: RngSeed, workers: int = 1) -> AuditResult:
    """Laplace loss never exceeds ``2n + 1`` once ``n >= d``."""
    parts = mc.run_blocks(_remark_block, trials, seed, (), workers)
    return _merge("remark", parts, trials)


DOMINATION_LAMBDAS = (1.0, 2.0, 5.0)


def domination_w_grid(lam: float, lam_j: float, per: int = 100) -> np.ndarray:
    """``per`` log-spaced points on ``[1e-3, 10 lam_j^2 / lam]`` plus the jump point itself."""
    top = lam_j * lam_j / lam
    return np.append(np.geomspace(min(1e-3, top), 10.0 * top, per), top)


def audit_domination(lams=DOMINATION_LAMBDAS, points: int = 50, per: int = 100) -> AuditResult:
    """Exact Poisson tails against the envelope on a deterministic grid.

    ``lam_j`` runs over ``points`` log-spaced values in ``[0.5, 200]``.
    """
    viol, worst, table, trials = 0, math.inf, [], 0
    for lam in lams:
        env = EnvelopeW(lam)
        for lj in np.geomspace(0.5, 200.0, points):
            w_grid = domination_w_grid(lam, float(lj), per)
            found = mc.domination_audit(lam, float(lj), w_grid)
            trials += w_grid.size
            viol += len(found)
            table.extend((lam, float(lj), v.w, v.exact, v.envelope) for v in found[:2])
            # the tightest point is the jump at w = lam_j^2 / lam
            exact = poisson_tail_bounds(float(lj)).exact
            worst = min(worst, envelope_tail(env, lj * lj / lam) - exact)
    return AuditResult("domination", trials, viol, worst, True, table[:50])


# -- exact-formula checks ---------------------------------------------------


def audit_reciprocal_moment(n_max: int = 200) -> AuditResult:
    """``E[1/(N+1)]`` against the direct binomial sum on ``n <= n_max``, ``p = 0.01..0.99``."""
    ps = np.round(np.arange(1, 100) / 100.0, 2)
    worst, viol, table = math.inf, 0, []
    for n in range(1, n_max + 1):
        k = np.arange(n + 1)
        for p in ps:
            direct = math.fsum(stats.binom.pmf(k, n, p) / (k + 1))
            err = abs(expected_inverse_count_plus_one(n, float(p)) - direct)
            worst = min(worst, 1e-10 - err)
            if err > 1e-10:
                viol += 1
                table.append((n, float(p), err))
    return AuditResult("reciprocal_moment", n_max * ps.size, viol, worst, True, table[:50])


def _sequence_expectation(probs: np.ndarray, n: int) -> float:
    """Laplace chi-square risk by summing over every one of the ``d^n`` sequences.

    For a sequence ``x`` with counts ``N``, ``chi2 = (n+d) sum_j p_j^2/(N_j+1) - 1``
    and ``sum_j p_j^2 N_j/(N_j+1) = sum_i p_{x_i}^2 / (N_{x_i}+1)``, so only the
    observed classes are touched.
    """
    d = probs.size
    m = d ** n
    s = math.fsum(probs * probs)
    out = []
    chunk = max(1, 200_000 // max(n * n, 1))
    for start in range(0, m, chunk):
        idx = np.arange(start, min(m, start + chunk))
        seq = np.stack(np.unravel_index(idx, (d,) * n), axis=1)
        mult = (seq[:, :, None] == seq[:, None, :]).sum(axis=2)
        pv = probs[seq]
        seen = np.sum(pv * pv / (mult + 1.0), axis=1)
        loss = (n + d) * (s - seen) - 1.0
        out.append(np.prod(pv, axis=1) * loss)
    return math.fsum(np.concatenate(out))


ENUMERATION_LIMIT = 100_000
ENUMERATION_DMAX = 1000
ENUMERATION_SPARSE_D = (2000, 5000, 10_000, 30_000, 100_000)


def enumeration_grid(limit: int = ENUMERATION_LIMIT, d_max: int = ENUMERATION_DMAX):
    """All ``(n, d)`` with ``d^n <= limit`` and ``d <= d_max``, plus a few larger ``d`` at ``n = 1``."""
    grid = []
    for n in range(1, int(math.log2(limit)) + 1):
        d = 2
        while d <= d_max and d ** n <= limit:
            grid.append((n, d))
            d += 1
    grid.extend((1, d) for d in ENUMERATION_SPARSE_D if d > d_max and d <= limit)
    return grid


def audit_laplace_enumeration(seed: RngSeed, limit: int = ENUMERATION_LIMIT,
                              d_max: int = ENUMERATION_DMAX) -> AuditResult:
    """Closed-form Laplace risk against brute-force enumeration, relative error ``<= 1e-10``.

    Each grid point uses a fresh Dirichlet(1) distribution; the uniform
    ``d = 2, n = 1`` case must give exactly ``1/8``.
    """
    rng = seed.generator()
    worst, viol, table, trials = math.inf, 0, [], 0
    for n, d in enumeration_grid(limit, d_max):
        P = make_distribution(rng.dirichlet(np.ones(d)))
        brute = _sequence_expectation(np.asarray(P.probs), n)
        closed = exact_laplace_chi2_expectation(P, n)
        rel = abs(closed - brute) / max(abs(brute), 1e-300)
        trials += 1
        worst = min(worst, 1e-10 - rel)
        if rel > 1e-10:
            viol += 1
            table.append((n, d, closed, brute, rel))
    half = exact_laplace_chi2_expectation(Distribution(np.array([0.5, 0.5])), 1)
    trials += 1
    if half != 0.125:
        viol += 1
        table.append((1, 2, half, 0.125, abs(half - 0.125) / 0.125))
    return AuditResult("laplace_enumeration", trials, viol, worst, True, table[:50])


def audit_laplace_bound(trials: int, seed: RngSeed) -> AuditResult:
    """``closed form <= (d-1)/(n+1) <= d/n`` on random ``(P, n, d)``."""
    rng = seed.generator()
    worst, viol, table = math.inf, 0, []
    for _ in range(trials):
        d = int(rng.integers(2, 201))
        n = int(rng.integers(1, 5001))
        conc = math.exp(rng.uniform(math.log(0.02), math.log(20.0)))
        P = make_distribution(rng.dirichlet(np.full(d, conc)) + 0.0)
        val = exact_laplace_chi2_expectation(P, n)
        mid = (d - 1) / (n + 1)
        slack = min(mid - val, d / n - mid)
        worst = min(worst, slack)
        if slack < -1e-15:
            viol += 1
            table.append((n, d, val, mid, d / n))
    return AuditResult("laplace_bound", trials, viol, worst, True, table[:50])


def audit_moment_closed_form(orders=range(1, 9)) -> AuditResult:
    """``E[W^p]^(1/p) <= 2270 p^2`` from the Gamma-function moment."""
    worst, viol, table = math.inf, 0, []
    for p in orders:
        lp, bound = envelope_lp_norm(p), envelope_moment_bound(p)
        worst = min(worst, bound - lp)
        if lp > bound:
            viol += 1
            table.append((p, lp, bound))
    return AuditResult("moment_closed_form", len(list(orders)), viol, worst, True, table)


MOMENT_CASES = tuple((d, p) for d in (1, 4, 16) for p in (1.0, 2.0))


def audit_envelope_moments(replications: int, seed: RngSeed, cases=MOMENT_CASES,
                           workers: int = 1) -> AuditResult:
    """Monte Carlo ``L^p`` norms of envelope sums against both stated moment bounds.

    Every case is checked with ``lam = 1`` against the ``33550 (d + p^2)``
    bound; cases with ``p >= sqrt d`` are also checked with ``lam = p/sqrt d``
    against ``91190 sqrt(d) p``. ``slack`` is relative: ``1 - empirical/bound``.
    """
    worst, viol, table, trials = math.inf, 0, [], 0
    for i, (d, p) in enumerate(cases):
        checks = [mc.envelope_sum_moment_check(d, 1.0, p, replications, seed.child(2 * i),
                                               "laplace", workers)]
        if p >= math.sqrt(d):
            checks.append(mc.envelope_sum_moment_check(d, p / math.sqrt(d), p, replications,
                                                       seed.child(2 * i + 1), "confidence",
                                                       workers))
        for c in checks:
            trials += replications
            worst = min(worst, 1.0 - c.empirical_lp / c.stated_bound)
            table.append((c.kind, d, p, c.empirical_lp, c.stated_bound))
            if not c.holds:
                viol += 1
    return AuditResult("envelope_moments", trials, viol, worst, True, table)


def audit_poissonization(replications: int, seed: RngSeed, n: int = 60, d: int = 10,
                         workers: int = 1) -> AuditResult:
    """``P(N <= n) >= 1 - e^{-n/6}`` up to the interval margin, plus the thinning coupling.

    ``worst_slack`` is ``ci_high - (1 - e^{-n/6})``; each replication where the
    coupling breaks counts as a violation.
    """
    P = make_distribution(np.arange(1, d + 1, dtype=np.float64) ** -1.0)
    rep = mc.poissonization_check(P, n, replications, seed, workers)
    viol = rep.coupling_violations + (0 if rep.event.ci_high >= rep.lower_bound else 1)
    table = [(n, rep.event.point, rep.event.ci_low, rep.event.ci_high, rep.lower_bound)]
    return AuditResult("poissonization", replications, viol,
                       rep.event.ci_high - rep.lower_bound, True, table)


def audit_convexity(points: int = 10_000) -> AuditResult:
    """``1 - e^{-x} >= (1 - e^{-1}) x`` on a uniform grid of ``[0, 1]``."""
    gap = convexity_gap(np.linspace(0.0, 1.0, points))
    bad = gap < -1e-15
    return AuditResult("convexity", points, int(bad.sum()), float(gap.min()), True, [])


# -- registry ---------------------------------------------------------------

AUDIT_COLUMNS = {
    "sandwich": ("p", "q"),
    "residual_split": ("p", "q", "lhs", "rhs"),
    "residual_split_c1": ("p", "q", "lhs", "rhs"),
    "lemma3_laplace": ("d[count]", "n[count]", "lambda"),
    "lemma3_confidence": ("d[count]", "n[count]", "lambda"),
    "lemma5": ("d[count]", "n[count]", "lambda", "lhs", "rhs"),
    "lemma5_exploratory": ("d[count]", "n[count]", "lambda", "lhs", "rhs"),
    "remark": ("d[count]", "n[count]", "loss"),
    "domination": ("lambda", "lambda_j", "w", "exact[prob]", "envelope[prob]"),
    "reciprocal_moment": ("n[count]", "p", "abs_err"),
    "laplace_enumeration": ("n[count]", "d[count]", "closed_form", "enumerated", "rel_err"),
    "laplace_bound": ("n[count]", "d[count]", "closed_form", "bound_d_minus_1", "bound_d_over_n"),
    "moment_closed_form": ("p", "lp_norm", "bound"),
    "envelope_moments": ("kind", "d[count]", "p", "empirical_lp", "bound"),
    "poissonization": ("n[count]", "point[prob]", "ci_low[prob]", "ci_high[prob]", "lower_bound[prob]"),
    "convexity": (),
}

AUDIT_NAMES = tuple(AUDIT_COLUMNS)

DEFAULT_SUITE = ("sandwich", "residual_split", "lemma3_laplace", "lemma3_confidence",
                 "lemma5", "lemma5_exploratory", "remark", "domination")


def run_audit(name: str, trials: int, seed: RngSeed, workers: int = 1) -> AuditResult:
    """Dispatch one audit by name. ``trials`` is ignored by the fixed-grid audits."""
    if name == "sandwich":
        return audit_sandwich(trials, seed, workers)
    if name == "residual_split":
        return audit_residual_split(trials, seed, workers=workers)
    if name == "residual_split_c1":
        return audit_residual_split(trials, seed, 1.0, workers)
    if name in ("lemma3_laplace", "lemma3_confidence"):
        return audit_lemma3(trials, seed, name.split("_", 1)[1], workers)
    if name in ("lemma5", "lemma5_exploratory"):
        return audit_lemma5(trials, seed, name == "lemma5_exploratory", workers)
    if name == "remark":
        return audit_remark(trials, seed, workers)
    if name == "domination":
        return audit_domination()
    if name == "reciprocal_moment":
        return audit_reciprocal_moment()
    if name == "laplace_enumeration":
        return audit_laplace_enumeration(seed)
    if name == "laplace_bound":
        return audit_laplace_bound(trials, seed)
    if name == "moment_closed_form":
        return audit_moment_closed_form()
    if name == "envelope_moments":
        return audit_envelope_moments(trials, seed, workers=workers)
    if name == "poissonization":
        return audit_poissonization(trials, seed, workers=workers)
    if name == "convexity":
        return audit_convexity()
    raise ValidationError(f"unknown audit {name!r}; valid names: {', '.join(AUDIT_NAMES)}")
