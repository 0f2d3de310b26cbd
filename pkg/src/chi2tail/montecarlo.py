"""Seeded Monte Carlo: tail probabilities, Poissonization and residual audits.

Replications are cut into fixed-size blocks; block ``b`` of an experiment
seeded with ``RngSeed(m, s)`` draws from the sub-stream ``(m, s, b)``. Block
boundaries never depend on the worker count and partial results are merged
in block order, so output is bit-identical for any number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .bounds import Family, ThresholdSpec, threshold
from .divergences import PreconditionError, chi2, chi2_rows
from .estimators import Fixed, SmoothingRule, estimate, estimate_rows
from .exact import EnvelopeW, envelope_tail, poisson_lower_tail, sample_envelope
from .simplex import CountVector, Distribution, RngSeed, ValidationError, draw_classes

BLOCK_SIZE = 4096
CI_LEVEL = 0.99


def _blocks(replications: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    full, rest = divmod(replications, block_size)
    out = [(b, block_size) for b in range(full)]
    if rest:
        out.append((full, rest))
    return out


def _run_task(task):
    fn, seed, block, size, args = task
    return fn(seed.generator(block), size, *args)


def run_blocks(fn: Callable, replications: int, seed: RngSeed, args: tuple = (),
               workers: int = 1) -> list:
    """Evaluate ``fn(rng, size, *args)`` on every block, in block order."""
    if replications < 1:
        raise ValidationError("replications must be at least 1")
    tasks = [(fn, seed, b, size, args) for b, size in _blocks(replications)]
    if workers <= 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_task, tasks))


def default_workers() -> int:
    return max(1, int(os.environ.get("CHI2_WORKERS", "1")))


def clopper_pearson(k: int, m: int, level: float = CI_LEVEL) -> tuple[float, float]:
    """Exact two-sided binomial interval for ``k`` successes in ``m`` trials."""
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, m - k + 1))
    hi = 1.0 if k == m else float(stats.beta.ppf(1 - a / 2, k + 1, m - k))
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    exceed_count: int
    replications: int
    point: float
    ci_low: float
    ci_high: float
    infinite_count: int = 0
    level: float = CI_LEVEL

    @classmethod
    def from_counts(cls, exceed: int, replications: int, infinite: int = 0,
                    level: float = CI_LEVEL) -> "TailEstimate":
        lo, hi = clopper_pearson(exceed, replications, level)
        point = exceed / replications
        return cls(exceed, replications, point, min(lo, point), max(hi, point), infinite, level)

    def consistent_with_at_most(self, bound: float) -> bool:
        """True unless the data reject ``P(event) <= bound`` at the interval's level."""
        return self.ci_low <= bound


@dataclass(frozen=True)
class TailExperiment:
    P: Distribution
    rule: SmoothingRule
    n: int
    threshold: float
    replications: int
    seed: RngSeed

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError("replications must be at least 1")
        if self.n < 1:
            raise ValidationError("n must be at least 1")


def _loss_block(rng, size, probs, rule, n):
    counts = rng.multinomial(n, probs, size=size)
    return chi2_rows(probs, estimate_rows(counts, rule))


def simulate_losses(P: Distribution, rule: SmoothingRule, n: int, replications: int,
                    seed: RngSeed, workers: int = 1) -> np.ndarray:
    """Chi-square loss of ``rule`` on ``replications`` independent samples of size ``n``."""
    parts = run_blocks(_loss_block, replications, seed, (P.probs, rule, n), workers)
    return np.concatenate(parts)


def tail_from_losses(losses: np.ndarray, thr: float) -> TailEstimate:
    exceed = int(np.count_nonzero(losses >= thr))
    infinite = int(np.count_nonzero(np.isinf(losses)))
    return TailEstimate.from_counts(exceed, losses.size, infinite)


def run_tail_experiment(exp: TailExperiment, workers: int = 1) -> TailEstimate:
    losses = simulate_losses(exp.P, exp.rule, exp.n, exp.replications, exp.seed, workers)
    return tail_from_losses(losses, exp.threshold)


# -- Poissonization ---------------------------------------------------------


@dataclass(frozen=True)
class PoissonizedCounts:
    tilde_counts: np.ndarray
    n_total: int | np.ndarray


def poissonized_counts(P: Distribution, n: int, seed: RngSeed | np.random.Generator,
                       size: int | None = None) -> PoissonizedCounts:
    """Independent ``Poisson(n p_j / 2)`` counts and their total.

    With ``size`` the result holds ``size`` independent rows and a vector of totals.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = seed.generator() if isinstance(seed, RngSeed) else seed
    means = n * np.asarray(P.probs) / 2.0
    if size is None:
        tilde = rng.poisson(means)
        return PoissonizedCounts(tilde, int(tilde.sum()))
    tilde = rng.poisson(means, size=(size, means.size))
    return PoissonizedCounts(tilde, tilde.sum(axis=1))


@dataclass(frozen=True)
class PoissonCoupling:
    counts: np.ndarray
    tilde_counts: np.ndarray
    n_total: int

    @property
    def dominated(self) -> bool:
        return bool(np.all(self.tilde_counts <= self.counts))


def poisson_coupling(P: Distribution, n: int, seed: RngSeed | np.random.Generator
                     ) -> PoissonCoupling:
    """Couple the multinomial counts with their Poissonized surrogate.

    One i.i.d. sequence is drawn; ``counts`` tallies its first ``n`` entries and
    ``tilde_counts`` its first ``N ~ Poisson(n/2)`` entries. On ``N <= n`` the
    surrogate is dominated coordinatewise.
    """
    rng = seed.generator() if isinstance(seed, RngSeed) else seed
    N = int(rng.poisson(n / 2.0))
    x = draw_classes(np.asarray(P.probs), max(n, N), rng)
    d = P.d
    return PoissonCoupling(np.bincount(x[:n], minlength=d), np.bincount(x[:N], minlength=d), N)


def _coupling_block(rng, size, probs, n):
    d = probs.size
    N = rng.poisson(n / 2.0, size=size)
    width = max(n, int(N.max()))
    x = draw_classes(probs, (size, width), rng)
    cols = np.arange(width)
    offs = (np.arange(size) * d)[:, None]
    full = np.bincount((x[:, :n] + offs[:, :]).ravel(), minlength=size * d).reshape(size, d)
    keep = cols[None, :] < N[:, None]
    tilde = np.bincount((x + offs)[keep], minlength=size * d).reshape(size, d)
    on_event = N <= n
    broken = np.any(tilde > full, axis=1) & on_event
    return int(on_event.sum()), int(broken.sum()), tilde


@dataclass(frozen=True)
class PoissonizationReport:
    event: TailEstimate
    lower_bound: float
    coupling_violations: int
    holds: bool
    tilde_counts: np.ndarray = field(repr=False)


def poissonization_check(P: Distribution, n: int, replications: int, seed: RngSeed,
                         workers: int = 1) -> PoissonizationReport:
    """Empirical ``P(N <= n)`` against ``1 - e^{-n/6}`` and the domination check."""
    parts = run_blocks(_coupling_block, replications, seed, (np.asarray(P.probs), n), workers)
    on = sum(p[0] for p in parts)
    broken = sum(p[1] for p in parts)
    tilde = np.concatenate([p[2] for p in parts])
    est = TailEstimate.from_counts(on, replications)
    lb = -math.expm1(-n / 6.0)
    return PoissonizationReport(est, lb, broken, est.ci_high >= lb and broken == 0, tilde)


# -- residual term ----------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    r_lambda: float
    contributing_classes: list[int]
    lam: float


def residual(counts: CountVector, P: Distribution, lam: float) -> ResidualReport:
    """``sum_j (2 n p_j^2 / lam) 1(N_j <= n p_j / 4)`` and the classes that contribute."""
    if counts.d != P.d:
        raise ValidationError("dimension mismatch")
    if not lam > 0:
        raise ValidationError("lambda must be positive")
    n = counts.n
    p = np.asarray(P.probs)
    under = (counts.counts <= n * p / 4.0) & (p > 0)
    idx = np.flatnonzero(under)
    r = float(np.sum(2.0 * n * p[idx] ** 2)) / lam
    return ResidualReport(r, idx.tolist(), float(lam))


def residual_rows(counts: np.ndarray, probs: np.ndarray, n, lam) -> np.ndarray:
    counts = np.asarray(counts)
    n = np.asarray(n, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    nn = n[..., None] if n.ndim else n
    under = (counts <= nn * probs / 4.0) & (probs > 0)
    return np.sum(np.where(under, 2.0 * nn * probs ** 2, 0.0), axis=-1) / lam


def poissonized_residual(tilde_counts: np.ndarray, probs: np.ndarray, n: int, lam: float):
    """Unscaled surrogate ``sum_j (2 lam_j^2 / lam) 1(tilde N_j <= lam_j / 4)``, ``lam_j = n p_j``."""
    lj = n * np.asarray(probs)
    under = (np.asarray(tilde_counts) <= lj / 4.0) & (lj > 0)
    return np.sum(np.where(under, 2.0 * lj ** 2, 0.0), axis=-1) / lam


def _residual_block(rng, size, probs, n, lam):
    counts = rng.multinomial(n, probs, size=size)
    return residual_rows(counts, probs, n, lam)


@dataclass(frozen=True)
class ResidualTailResult:
    estimate: TailEstimate
    threshold: float
    lam: float
    in_domain: bool
    delta: float
    multiplier: float = 2.0
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def holds(self) -> bool:
        return self.estimate.consistent_with_at_most(self.multiplier * self.delta)

    def quantile(self, level: float) -> float:
        """Empirical ``level``-quantile of ``R_lam`` (``inf`` for the infinite-threshold shortcut)."""
        if self.samples is None:
            return math.inf
        return float(np.quantile(self.samples, level, method="higher"))


def residual_tail_check(P: Distribution, n: int, variant: str, delta: float,
                        replications: int, seed: RngSeed, workers: int = 1,
                        thr: float | None = None) -> ResidualTailResult:
    """Empirical ``P(R_lam >= threshold)`` for ``lam = 1`` or ``lam = log(1/delta)/sqrt(d)``.

    ``variant`` is ``"laplace"`` or ``"confidence"``. The threshold defaults
    to the matching residual bound; out-of-domain ``delta`` is flagged, not
    rejected.
    """
    d = P.d
    if variant == "laplace":
        lam = 1.0
        spec = ThresholdSpec(Family.LEM6_RESIDUAL_LAPLACE, n, d, delta)
    elif variant == "confidence":
        lam = math.log(1.0 / delta) / math.sqrt(d)
        spec = ThresholdSpec(Family.LEM6_RESIDUAL_CONF, n, d, delta)
    else:
        raise ValidationError(f"unknown residual variant {variant!r}")
    tv = threshold(spec)
    t = tv.value if thr is None else thr
    if math.isinf(t):
        return ResidualTailResult(TailEstimate.from_counts(0, replications), t, lam,
                                  tv.in_domain, delta)
    parts = run_blocks(_residual_block, replications, seed, (np.asarray(P.probs), n, lam), workers)
    r = np.concatenate(parts)
    est = TailEstimate.from_counts(int(np.count_nonzero(r >= t)), replications)
    return ResidualTailResult(est, t, lam, tv.in_domain, delta, samples=r)


# -- decomposition audits ---------------------------------------------------


@dataclass(frozen=True)
class Lemma3Audit:
    lhs: float
    rhs: float
    holds: bool
    hellinger_term: float
    lambda_term: float
    residual_term: float


AUDIT_ATOL = 1e-12


def decomposition_audit_lemma3(P: Distribution, counts: CountVector, lam: float,
                               delta: float) -> Lemma3Audit:
    """Check ``chi2(P, add-lam) <= 30 H(empirical, P) + 100 lam d / (3n) + (7/8)^2 R_lam``.

    ``H`` is the unnormalized squared Hellinger sum. The preconditions
    ``0 < lam <= n/d`` and ``sqrt(d) log(1/delta) / n <= 1`` are enforced as
    stated, even though the right-hand side does not involve ``delta``.
    """
    n, d = counts.n, counts.d
    if not 0 < lam <= n / d * (1 + 1e-12):
        raise PreconditionError(f"lambda={lam!r} outside (0, n/d] with n={n}, d={d}")
    if not 0 < delta < 1 or math.sqrt(d) * math.log(1 / delta) / n > 1:
        raise PreconditionError("need sqrt(d) log(1/delta) / n <= 1")
    p = np.asarray(P.probs)
    lhs = chi2(p, estimate(counts, Fixed(lam)))
    pbar = counts.counts / n
    hell = 30.0 * float(np.sum((np.sqrt(pbar) - np.sqrt(p)) ** 2))
    lam_term = 100.0 * lam * d / (3.0 * n)
    res = (7.0 / 8.0) ** 2 * residual(counts, P, lam).r_lambda
    rhs = hell + lam_term + res
    return Lemma3Audit(lhs, rhs, lhs <= rhs + AUDIT_ATOL, hell, lam_term, res)


def lemma3_rows(counts: np.ndarray, probs: np.ndarray, lam: np.ndarray):
    """Vectorized sides of the first decomposition for a batch; returns ``(lhs, rhs)``."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum(axis=1)
    d = counts.shape[1]
    q = (counts + lam[:, None]) / (n + lam * d)[:, None]
    lhs = chi2_rows(probs, q)
    pbar = counts / n[:, None]
    hell = 30.0 * np.sum((np.sqrt(pbar) - np.sqrt(probs)) ** 2, axis=1)
    rhs = hell + 100.0 * lam * d / (3.0 * n) + (7.0 / 8.0) ** 2 * residual_rows(counts, probs, n, lam)
    return lhs, rhs


@dataclass(frozen=True)
class Lemma5Audit:
    lhs: float
    rhs: float
    holds: bool
    in_proof_regime: bool


def decomposition_audit_lemma5(P: Distribution, counts: CountVector, lam: float,
                               exploratory: bool = False) -> Lemma5Audit:
    """Check ``chi2 <= 1 + 8 lam d / n + (lam d / n) R_lam``.

    The argument behind this bound needs ``lam d >= n``. In asserting mode that
    is a precondition; ``exploratory=True`` evaluates any ``lam > 0`` and just
    reports.
    """
    n, d = counts.n, counts.d
    if not lam > 0:
        raise PreconditionError("lambda must be positive")
    regime = lam * d >= n
    if not regime and not exploratory:
        raise PreconditionError(f"asserting audit needs lam*d >= n, got {lam * d} < {n}")
    lhs = chi2(P, estimate(counts, Fixed(lam)))
    r = residual(counts, P, lam).r_lambda
    rhs = 1.0 + 8.0 * lam * d / n + lam * d / n * r
    return Lemma5Audit(lhs, rhs, lhs <= rhs + AUDIT_ATOL, regime)


def lemma5_rows(counts: np.ndarray, probs: np.ndarray, lam: np.ndarray):
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum(axis=1)
    d = counts.shape[1]
    q = (counts + lam[:, None]) / (n + lam * d)[:, None]
    lhs = chi2_rows(probs, q)
    rhs = 1.0 + 8.0 * lam * d / n + lam * d / n * residual_rows(counts, probs, n, lam)
    return lhs, rhs


# -- stochastic domination and envelope moments ------------------------------


@dataclass(frozen=True)
class DominationViolation:
    w: float
    exact: float
    envelope: float


def domination_audit(lam: float, lam_j: float, w_grid: Sequence[float],
                     atol: float = 1e-12) -> list[DominationViolation]:
    """Grid points where ``P(V_j >= w)`` exceeds the envelope tail.

    ``V_j = (lam_j^2 / lam) 1(tilde N_j <= lam_j / 4)`` with
    ``tilde N_j ~ Poisson(lam_j / 2)``; the exact tail for ``w > 0`` is the
    Poisson CDF at ``floor(lam_j / 4)`` when ``w <= lam_j^2 / lam``, else 0.
    """
    env = EnvelopeW(lam)
    cdf = poisson_lower_tail(lam_j / 2.0, math.floor(lam_j / 4.0))
    top = lam_j * lam_j / lam
    out = []
    for w in w_grid:
        w = float(w)
        exact = 1.0 if w <= 0 else (cdf if w <= top else 0.0)
        env_tail = envelope_tail(env, w)
        if exact > env_tail + atol:
            out.append(DominationViolation(w, exact, env_tail))
    return out


def _moment_block(rng, size, d, lam, p):
    env = EnvelopeW(lam)
    s = sample_envelope(env, rng, (size, d)).sum(axis=1)
    return float(np.sum(s ** p))


@dataclass(frozen=True)
class MomentCheck:
    empirical_lp: float
    stated_bound: float
    holds: bool
    in_domain: bool
    kind: str


MOMENT_LAPLACE = 33550.0
MOMENT_CONF = 91190.0


def envelope_sum_moment_check(d: int, lam: float, p: float, replications: int,
                              seed: RngSeed, kind: str = "laplace",
                              workers: int = 1) -> MomentCheck:
    """Monte Carlo ``L^p`` norm of ``sum_{j<d} W_j / lam`` against its stated bound.

    ``kind="laplace"`` compares with ``33550 d + 33550 p^2`` (claimed for
    ``lam = 1``); ``kind="confidence"`` with ``91190 sqrt(d) p`` (claimed for
    ``p >= sqrt d`` and ``lam = p / sqrt d``).
    """
    if not 1.0 <= p <= 4.0:
        raise ValidationError("moment order must lie in [1, 4]")
    if kind == "laplace":
        bound = MOMENT_LAPLACE * d + MOMENT_LAPLACE * p * p
        in_domain = lam == 1.0
    elif kind == "confidence":
        bound = MOMENT_CONF * math.sqrt(d) * p
        in_domain = p >= math.sqrt(d) and math.isclose(lam, p / math.sqrt(d))
    else:
        raise ValidationError(f"unknown moment bound {kind!r}")
    parts = run_blocks(_moment_block, replications, seed, (d, lam, p), workers)
    lp = (math.fsum(parts) / replications) ** (1.0 / p)
    return MomentCheck(lp, bound, lp <= bound, in_domain, kind)
