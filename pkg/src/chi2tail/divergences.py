"""Divergences between distributions and the per-coordinate chi-square loss.

All functions accept :class:`~chi2tail.simplex.Distribution` objects or plain
arrays. Infinite divergences are returned as ``math.inf`` rather than raised,
since experiments need to count infinite-loss replications. Sums go through
``numpy.sum``, which uses pairwise summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simplex import ValidationError


class PreconditionError(ValueError):
    """An inequality was queried outside the range where it is claimed."""


def _pair(P, Q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(P, dtype=np.float64)
    q = np.asarray(Q, dtype=np.float64)
    if p.shape[-1] != q.shape[-1]:
        raise ValidationError(f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]}")
    return p, q


def chi2_terms(P, Q) -> np.ndarray:
    """Coordinatewise ``(p - q)^2 / q`` with the 0/0 = 0 and p/0 = inf conventions.

    Broadcasts, so ``P`` or ``Q`` may be a matrix with one distribution per row.
    """
    p, q = _pair(P, Q)
    p, q = np.broadcast_arrays(p, q)
    pos = q > 0
    out = np.zeros(p.shape)
    with np.errstate(over="ignore"):  # subnormal q: inf is the right answer
        out[pos] = (p[pos] - q[pos]) ** 2 / q[pos]
    out[~pos & (p > 0)] = np.inf
    return out


def chi2(P, Q) -> float:
    """Chi-square divergence ``sum_j (p_j - q_j)^2 / q_j``.

    >>> chi2([1.0, 0.0], [0.0, 1.0])
    inf
    """
    return float(np.sum(chi2_terms(P, Q)))


def chi2_rows(P, Q) -> np.ndarray:
    """Row-wise chi-square divergence for a batch of estimates."""
    return np.sum(chi2_terms(P, Q), axis=-1)


def chi2_via_second_moment(P, Q) -> float:
    """``sum_j p_j^2 / q_j - 1``; requires a strictly positive ``Q``."""
    p, q = _pair(P, Q)
    if np.any(q <= 0):
        raise ValidationError("second-moment form needs every q_j > 0")
    return max(float(np.sum(p * p / q)) - 1.0, 0.0)


def kl(P, Q) -> float:
    p, q = _pair(P, Q)
    m = p > 0
    if np.any(q[m] <= 0):
        return math.inf
    return max(float(np.sum(p[m] * np.log(p[m] / q[m]))), 0.0)


def hellinger_sq(P, Q) -> float:
    """Squared Hellinger distance without the 1/2 factor: ``sum (sqrt p - sqrt q)^2``."""
    p, q = _pair(P, Q)
    return float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))


def tv(P, Q) -> float:
    p, q = _pair(P, Q)
    return 0.5 * float(np.sum(np.abs(p - q)))


def f_loss(p: float, q: float) -> float:
    """Per-coordinate loss ``(p - q)^2 / q``."""
    if q <= 0:
        raise ValidationError("f_loss needs q > 0")
    if p < 0:
        raise ValidationError("f_loss needs p >= 0")
    return (p - q) ** 2 / q


@dataclass(frozen=True)
class SandwichReport:
    lower_ok: bool
    upper_ok: bool
    lower_slack: float
    upper_slack: float
    loss: float
    hellinger: float


SANDWICH_RATIO = 1.0 / 8.0
SANDWICH_CONSTANT = 15.0


def f_sandwich_check(p: float, q: float, rtol: float = 1e-12) -> SandwichReport:
    """Check ``(sqrt p - sqrt q)^2 <= F(p, q) <= 15 (sqrt p - sqrt q)^2``.

    The upper half is only claimed for ``q >= p / 8``; outside that range a
    :class:`PreconditionError` is raised. Slacks are ``F - H`` and ``15 H - F``.
    """
    if q <= 0 or p < 0:
        raise ValidationError("need p >= 0 and q > 0")
    if q < p * SANDWICH_RATIO:
        raise PreconditionError(f"q={q!r} < p/8 with p={p!r}: upper bound not claimed")
    loss = f_loss(p, q)
    h = (math.sqrt(p) - math.sqrt(q)) ** 2
    lo = loss - h
    hi = SANDWICH_CONSTANT * h - loss
    tol = rtol * max(loss, h, 1e-300)
    return SandwichReport(lo >= -tol, hi >= -tol, lo, hi, loss, h)


def sandwich_violations(p: np.ndarray, q: np.ndarray, rtol: float = 1e-12) -> tuple[int, int]:
    """Vectorized sandwich check over pairs satisfying ``q >= p/8``.

    Returns ``(lower_violations, upper_violations)``.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < p * SANDWICH_RATIO):
        raise PreconditionError("some pairs have q < p/8")
    loss = (p - q) ** 2 / q
    h = (np.sqrt(p) - np.sqrt(q)) ** 2
    tol = rtol * np.maximum(loss, h)
    return int(np.sum(h > loss + tol)), int(np.sum(loss > SANDWICH_CONSTANT * h + tol))


def residual_split_bound(p, q, coefficient: float = (7.0 / 8.0) ** 2) -> np.ndarray:
    """Right-hand side ``15 (sqrt p - sqrt q)^2 + c * p^2/q * 1(q <= p/8)``.

    ``coefficient`` defaults to ``(7/8)^2``. With that value the bound is
    violated whenever ``q`` is much smaller than ``p``; ``coefficient=1`` is
    always valid since ``(p - q)^2 <= p^2`` when ``0 < q <= p``.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    h = (np.sqrt(p) - np.sqrt(q)) ** 2
    res = np.where(q <= p * SANDWICH_RATIO, p * p / q, 0.0)
    return SANDWICH_CONSTANT * h + coefficient * res
