"""Closed-form quantities: reciprocal binomial moments, the Laplace chi-square
risk, Poisson lower tails, and the heavy-tailed envelope ``W``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simplex import Distribution, RngSeed, ValidationError

ENVELOPE_SCALE = 14.0
MOMENT_CONSTANT = 2270.0


def _one_minus_p_pow(p: float, m: int) -> float:
    # log1p path keeps (1-p)^m accurate for small p and large m
    if p < 0.5:
        return math.exp(m * math.log1p(-p))
    return (1.0 - p) ** m


def expected_inverse_count_plus_one(n: int, p: float) -> float:
    """``E[1/(N+1)]`` for ``N ~ Bin(n, p)``, equal to ``(1-(1-p)^(n+1)) / ((n+1) p)``."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValidationError("p must lie in [0, 1]")
    if p == 0.0:
        return 1.0
    m = n + 1
    if p < 0.5:
        # -expm1 avoids cancellation in 1 - (1-p)^m
        num = -math.expm1(m * math.log1p(-p))
    else:
        num = 1.0 - (1.0 - p) ** m
    return num / (m * p)


def exact_laplace_chi2_expectation(P: Distribution, n: int) -> float:
    """Exact ``E[chi2(P, Laplace estimate)]`` from a sample of size ``n``."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    p = np.asarray(P, dtype=np.float64)
    d = p.size
    tail = math.fsum(float(pj) * _one_minus_p_pow(float(pj), n + 1) for pj in p)
    return (d - 1) / (n + 1) - (n + d) / (n + 1) * tail


def poisson_lower_tail(mean: float, k: int) -> float:
    """Exact ``P(Poisson(mean) <= k)`` by pmf recurrence.

    Terms are accumulated away from the mode so each recurrence step shrinks;
    the anchor term is taken in log space so large means do not underflow.
    """
    if not mean > 0:
        raise ValidationError("Poisson mean must be positive")
    if k < 0:
        return 0.0
    k = int(k)
    if k < mean:
        # sum pmf(k), pmf(k-1), ..., pmf(0) relative to pmf(k)
        rel, term, i = 1.0, 1.0, k
        while i > 0:
            term *= i / mean
            rel += term
            i -= 1
            if term < 1e-17 * rel:
                break
        return min(1.0, math.exp(-mean + k * math.log(mean) - math.lgamma(k + 1)) * rel)
    # upper tail from k+1 onward, relative to pmf(k+1)
    j = k + 1
    log_anchor = -mean + j * math.log(mean) - math.lgamma(j + 1)
    if log_anchor < -745.0:
        return 1.0
    rel, term = 1.0, 1.0
    while True:
        j += 1
        term *= mean / j
        rel += term
        if term < 1e-17 * rel:
            break
    return max(0.0, 1.0 - math.exp(log_anchor) * rel)


@dataclass(frozen=True)
class PoissonTailBounds:
    lam_j: float
    exact: float
    chernoff: float
    simple: float


def poisson_tail_bounds(lam_j: float) -> PoissonTailBounds:
    """Exact ``P(Poisson(lam_j/2) <= floor(lam_j/4))`` next to its two analytic bounds.

    ``chernoff`` is ``exp(-(1 - log 2) lam_j / 4)`` and ``simple`` is
    ``exp(-lam_j / 14)``.
    """
    exact = poisson_lower_tail(lam_j / 2.0, math.floor(lam_j / 4.0))
    return PoissonTailBounds(
        lam_j,
        exact,
        math.exp(-(1.0 - math.log(2.0)) * lam_j / 4.0),
        math.exp(-lam_j / ENVELOPE_SCALE),
    )


@dataclass(frozen=True)
class EnvelopeW:
    """``W / lam`` where ``P(W >= t^2) = exp(-t/14)``."""

    lam: float
    rate: float = 1.0 / ENVELOPE_SCALE

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError("envelope scaling must be positive")


def envelope_tail(env: EnvelopeW, w: float) -> float:
    if w <= 0:
        return 1.0
    return math.exp(-math.sqrt(env.lam * w) * env.rate)


def sample_envelope(env: EnvelopeW, seed: RngSeed | np.random.Generator, size=None):
    """Draw ``(E / rate)^2 / lam`` with ``E`` unit exponential."""
    rng = seed.generator() if isinstance(seed, RngSeed) else seed
    e = rng.standard_exponential(size)
    return (e / env.rate) ** 2 / env.lam


def envelope_moment_exact(p: float) -> float:
    """``E[W^p] = 2p * 14^(2p) * Gamma(2p)``."""
    if p < 1:
        raise ValidationError("moment order must be at least 1")
    return math.exp(math.log(2 * p) + 2 * p * math.log(ENVELOPE_SCALE) + math.lgamma(2 * p))


def envelope_lp_norm(p: float, lam: float = 1.0) -> float:
    """``||W / lam||_p`` from the exact moment."""
    log_m = math.log(2 * p) + 2 * p * math.log(ENVELOPE_SCALE) + math.lgamma(2 * p)
    return math.exp(log_m / p) / lam


def envelope_moment_bound(p: float, lam: float = 1.0) -> float:
    """Stated control ``2270 p^2 / lam`` on ``||W / lam||_p``."""
    if p < 1:
        raise ValidationError("moment order must be at least 1")
    return MOMENT_CONSTANT * p * p / lam


def envelope_moment_display(p: float) -> float:
    """The cruder closed form ``2p * 14^(2p) * (2p)^(2p)``, an upper bound on ``E[W^p]``."""
    return 2 * p * ENVELOPE_SCALE ** (2 * p) * (2 * p) ** (2 * p)


@dataclass(frozen=True)
class HellingerThreshold:
    base: float
    scaled: float


HELLINGER_SCALE = 30.0


def hellinger_sq_tail_threshold(n: int, d: int, delta: float) -> HellingerThreshold:
    """``(4d + 7 log(1/delta)) / n`` and its 30x multiple."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValidationError("delta must lie in (0, 1)")
    base = (4 * d + 7 * math.log(1.0 / delta)) / n
    return HellingerThreshold(base, HELLINGER_SCALE * base)
