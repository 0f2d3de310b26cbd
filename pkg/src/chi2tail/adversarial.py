"""Two-point lower-bound families and deterministic certificates.

Every member ``P^(j)`` of the family puts mass ``delta^(1/n)`` on class 0, so
the sample in which only the first class is observed (the "all-ones" sample
in 1-based numbering) has probability exactly ``delta``. On that event any
estimator returns the same distribution ``Q``, which lets the lower-bound
arguments be replayed without sampling.

An estimator is either a smoothing rule or any callable mapping a
:class:`CountVector` to a :class:`Distribution`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .divergences import chi2
from .estimators import SmoothingRule, estimate
from .simplex import CountVector, Distribution, ValidationError, dirac

Estimator = Union[SmoothingRule, Callable[[CountVector], Distribution]]

LEMMA1_CONSTANT = 0.15
LEMMA2_CONSTANT = 0.04
LEMMA2_KAPPA_EXPONENT = 6.32


class DomainError(ValidationError):
    """Parameters fall outside the range where a certificate is claimed."""


@dataclass(frozen=True)
class TwoPointFamily:
    n: int
    d: int
    delta: float
    rho: float
    members: tuple[Distribution, ...]

    def all_ones_probability(self, j: int) -> float:
        """Probability that every draw lands in class 0 under member ``j``."""
        p0 = float(self.members[j][0])
        if p0 == 1.0:
            return 1.0
        return math.exp(self.n * math.log(p0))


def _check_nd(n: int, d: int) -> None:
    if d < 2 or n < d:
        raise DomainError(f"need n >= d >= 2, got n={n}, d={d}")


def family_in_domain(n: int, d: int, delta: float) -> bool:
    return n >= d >= 2 and math.exp(-n) < delta < math.exp(-1)


def lemma2_in_domain(n: int, d: int, delta: float, kappa: float = 1.0) -> bool:
    L = math.log(1.0 / delta)
    return n >= d >= 2 and kappa >= 1 and LEMMA2_KAPPA_EXPONENT * kappa < L < n


def build_family(n: int, d: int, delta: float, strict: bool = True) -> TwoPointFamily:
    """Two-point family for ``(n, d, delta)``.

    With ``strict=False`` any ``d >= 2`` and ``delta`` in ``(0, 1)`` is accepted;
    the construction still makes the first-class-only event have probability
    ``delta``, only the lower-bound claims lapse.
    """
    if strict:
        _check_nd(n, d)
        if not math.exp(-n) < delta < math.exp(-1):
            raise DomainError(f"delta={delta!r} outside (e^-n, e^-1) for n={n}")
    elif d < 2 or n < 1 or not 0.0 < delta < 1.0:
        raise DomainError(f"need n >= 1, d >= 2 and delta in (0, 1); got n={n}, d={d}, delta={delta!r}")
    log_keep = math.log(delta) / n  # log(delta^(1/n))
    rho = -math.expm1(log_keep)
    keep = math.exp(log_keep)
    members = [dirac(0, d)]
    for j in range(1, d):
        p = np.zeros(d)
        p[0] = keep
        p[j] = rho
        members.append(Distribution(p))
    return TwoPointFamily(n, d, delta, rho, tuple(members))


def _apply(estimator: Estimator, counts: CountVector) -> Distribution:
    if isinstance(estimator, SmoothingRule.__args__):
        return estimate(counts, estimator)
    return estimator(counts)


def all_ones_value(estimator: Estimator, n: int, d: int) -> Distribution:
    """The estimate ``Q`` returned when all ``n`` draws are class 0."""
    c = np.zeros(d, dtype=np.int64)
    c[0] = n
    return _apply(estimator, CountVector(c, n))


def _argmin_tail(q: np.ndarray) -> int:
    # smallest index among j >= 1 attaining the minimum
    return 1 + int(np.argmin(q[1:]))


@dataclass(frozen=True)
class Lemma2Certificate:
    event_prob: float
    loss_on_event: float
    witness_term: float
    relaxed_bound: float
    threshold: float
    holds: bool
    witness_j: int
    rho: float
    q_j: float


def lemma2_certificate(estimator: Estimator, n: int, d: int, delta: float,
                       kappa: float = 1.0, strict: bool = True) -> Lemma2Certificate:
    """Certificate for the confidence-independent lower bound.

    ``loss_on_event`` is the full divergence on the first-class-only event;
    ``witness_term`` is the single coordinate ``(rho - q_j)^2 / q_j`` the
    argument keeps, and ``relaxed_bound`` its ``rho^2 / (4 q_j)`` relaxation.
    ``strict=False`` evaluates outside the claimed domain instead of raising.
    """
    if kappa < 1:
        raise DomainError("kappa must be at least 1")
    if strict:
        _check_nd(n, d)
        if not lemma2_in_domain(n, d, delta, kappa):
            raise DomainError(
                f"delta={delta!r} outside (e^-n, e^-{LEMMA2_KAPPA_EXPONENT}*kappa) for n={n}, kappa={kappa}"
            )
    L = math.log(1.0 / delta)
    q = np.asarray(all_ones_value(estimator, n, d), dtype=np.float64)
    fam = build_family(n, d, delta, strict=False)
    j = _argmin_tail(q)
    P = fam.members[j]
    loss = chi2(P, q)
    qj = float(q[j])
    rho = fam.rho
    term = math.inf if qj == 0 else (rho - qj) ** 2 / qj
    relaxed = math.inf if qj == 0 else rho * rho / (4 * qj)
    thr = LEMMA2_CONSTANT * L * L / (kappa * n)
    return Lemma2Certificate(
        event_prob=fam.all_ones_probability(j),
        loss_on_event=loss,
        witness_term=term,
        relaxed_bound=relaxed,
        threshold=thr,
        holds=loss >= thr,
        witness_j=j,
        rho=rho,
        q_j=qj,
    )


@dataclass(frozen=True)
class Lemma1Certificate:
    regime: str
    alpha: float
    witness_j: int
    event_prob: float
    loss_on_event: float
    witness_term: float
    relaxed_bound: float
    threshold: float
    holds: bool
    family_best: float


def lemma1_threshold(n: int, d: int, delta: float) -> float:
    L = math.log(1.0 / delta)
    return LEMMA1_CONSTANT * (math.sqrt(d) * L / n + d * L * L / (n * n))


def lemma1_certificate(estimator: Estimator, n: int, d: int, delta: float,
                       strict: bool = True) -> Lemma1Certificate:
    """Replay the case analysis of the minimax lower bound for one estimator.

    Regimes:

    * ``large_alpha``: ``sqrt(d) log(1/delta) / n <= 1`` and the estimator
      leaks at least ``alpha d / n`` mass off class 0 with
      ``alpha >= log(1/delta) / (7 sqrt d)``. Witness is the point mass,
      whose loss is certain (event probability 1).
    * ``small_alpha``: same moderate regime but less leaked mass. Witness is
      the member ``P^(j)`` with the smallest ``q_j``.
    * ``large_deviation``: ``sqrt(d) log(1/delta) / n > 1``; same witness.

    ``family_best`` is the largest loss on the first-class-only event over
    the whole family, for reference.
    """
    fam = build_family(n, d, delta, strict)
    L = math.log(1.0 / delta)
    q = np.asarray(all_ones_value(estimator, n, d), dtype=np.float64)
    leak = 1.0 - float(q[0])
    moderate = math.sqrt(d) * L / n <= 1.0
    if moderate:
        alpha = leak * n / d
        regime = "large_alpha" if alpha >= L / (7 * math.sqrt(d)) else "small_alpha"
    else:
        alpha = leak
        regime = "large_deviation"

    losses = [chi2(P, q) for P in fam.members]
    if regime == "large_alpha":
        j = 0
        loss = losses[0]
        term = leak
        relaxed = alpha * d / n
    else:
        j = _argmin_tail(q)
        loss = losses[j]
        qj = float(q[j])
        term = math.inf if qj == 0 else (fam.rho - qj) ** 2 / qj
        relaxed = math.inf if qj == 0 else fam.rho ** 2 / (4 * qj)
    thr = lemma1_threshold(n, d, delta)
    return Lemma1Certificate(
        regime=regime,
        alpha=alpha,
        witness_j=j,
        event_prob=fam.all_ones_probability(j),
        loss_on_event=loss,
        witness_term=term,
        relaxed_bound=relaxed,
        threshold=thr,
        holds=loss >= thr,
        family_best=max(losses),
    )


def convexity_gap(x: np.ndarray) -> np.ndarray:
    """``(1 - e^{-x}) - (1 - e^{-1}) x``; nonnegative on ``[0, 1]``."""
    x = np.asarray(x, dtype=np.float64)
    return -np.expm1(-x) - (-math.expm1(-1.0)) * x
