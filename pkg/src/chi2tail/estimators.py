"""Empirical and add-lambda estimators, including the confidence-tuned variant."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .simplex import CountVector, Distribution, ValidationError


@dataclass(frozen=True)
class Empirical:
    """Maximum-likelihood frequencies ``N_j / n``."""

    def __str__(self) -> str:
        return "empirical"


@dataclass(frozen=True)
class Fixed:
    """Add-``lam`` smoothing with a constant pseudo-count."""

    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValidationError(f"pseudo-count must be positive, got {self.lam!r}")

    def __str__(self) -> str:
        return "laplace" if self.lam == 1.0 else f"fixed({self.lam:g})"


@dataclass(frozen=True)
class ConfidenceDependent:
    """Add-``lam`` smoothing with ``lam = max(1, log(1/delta) / sqrt(d))``."""

    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta!r}")

    def __str__(self) -> str:
        return f"confidence({self.delta:.6g})"


SmoothingRule = Union[Empirical, Fixed, ConfidenceDependent]

LAPLACE = Fixed(1.0)
KRICHEVSKY_TROFIMOV = Fixed(0.5)


def resolve_lambda(rule: SmoothingRule, d: int) -> float:
    if isinstance(rule, Fixed):
        return float(rule.lam)
    if isinstance(rule, ConfidenceDependent):
        return max(1.0, math.log(1.0 / rule.delta) / math.sqrt(d))
    raise ValidationError(f"{rule!s} has no smoothing parameter")


def estimate(counts: CountVector, rule: SmoothingRule) -> Distribution:
    """Estimate a distribution from counts under ``rule``.

    >>> estimate(CountVector([2, 1]), LAPLACE).probs.tolist()
    [0.6, 0.4]
    """
    n, d = counts.n, counts.d
    c = counts.counts.astype(np.float64)
    if isinstance(rule, Empirical):
        if n == 0:
            raise ValidationError("empirical estimate of an empty sample is undefined")
        return Distribution(c / n)
    lam = resolve_lambda(rule, d)
    return Distribution((c + lam) / (n + lam * d))


def estimate_rows(counts: np.ndarray, rule: SmoothingRule) -> np.ndarray:
    """Batch version of :func:`estimate` for a ``(replications, d)`` count matrix."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum(axis=-1, keepdims=True)
    d = counts.shape[-1]
    if isinstance(rule, Empirical):
        if np.any(n == 0):
            raise ValidationError("empirical estimate of an empty sample is undefined")
        return counts / n
    lam = resolve_lambda(rule, d)
    return (counts + lam) / (n + lam * d)


def min_mass(rule: SmoothingRule, n: int, d: int) -> float:
    """Guaranteed lower bound on every estimated coordinate."""
    if isinstance(rule, Empirical):
        return 0.0
    lam = resolve_lambda(rule, d)
    return lam / (n + lam * d)


def parse_rule(spec, delta: float | None = None) -> SmoothingRule:
    """Build a rule from a config token.

    Accepts ``"laplace"``, ``"kt"``, ``"empirical"``, ``"confidence"`` (needs
    ``delta``), a number (fixed pseudo-count) or ``{"fixed": lam}``.
    """
    if isinstance(spec, SmoothingRule.__args__):
        return spec
    if isinstance(spec, dict):
        if "fixed" in spec:
            return Fixed(float(spec["fixed"]))
        if "confidence" in spec:
            return ConfidenceDependent(float(spec["confidence"]))
        raise ValidationError(f"unknown estimator spec {spec!r}")
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return Fixed(float(spec))
    key = str(spec).strip().lower()
    if key in ("laplace", "add-one"):
        return LAPLACE
    if key in ("kt", "krichevsky-trofimov"):
        return KRICHEVSKY_TROFIMOV
    if key in ("empirical", "mle"):
        return Empirical()
    if key in ("confidence", "confidence-dependent"):
        if delta is None:
            raise ValidationError("confidence-dependent estimator needs delta")
        return ConfidenceDependent(delta)
    raise ValidationError(
        f"unknown estimator {spec!r}; expected laplace, kt, empirical, confidence or a number"
    )
