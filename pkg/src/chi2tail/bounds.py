"""Numeric thresholds for every high-probability guarantee under comparison.

Out-of-domain parameters still produce a value; ``in_domain`` records whether
the guarantee is actually claimed there. Logarithms are natural.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .simplex import ValidationError

C1 = 25900.0
C3 = 91190.0
C4 = 1.0 / 5000.0
RESIDUAL_LAPLACE = 33550.0
RESIDUAL_CONF = 91190.0


def c2(kappa: float) -> float:
    return 1.0 / (10000.0 * kappa)


class Family(str, enum.Enum):
    ASYMPTOTIC_BENCHMARK = "AsymptoticBenchmark"
    MARKOV_BASELINE = "MarkovBaseline"
    PRIOR_ART = "PriorArt"
    THM1_UPPER_LAPLACE = "Thm1UpperLaplace"
    THM2_LOWER_CONF_INDEP = "Thm2LowerConfIndep"
    THM3_UPPER_CONF_DEP = "Thm3UpperConfDep"
    THM4_LOWER_MINIMAX = "Thm4LowerMinimax"
    LEM6_RESIDUAL_LAPLACE = "Lem6ResidualLaplace"
    LEM6_RESIDUAL_CONF = "Lem6ResidualConf"
    REMARK_DETERMINISTIC = "RemarkDeterministic"

    @classmethod
    def parse(cls, name: str) -> "Family":
        key = name.strip().lower().replace("-", "").replace("_", "")
        for fam in cls:
            if fam.value.lower() == key or fam.name.lower().replace("_", "") == key:
                return fam
        aliases = {
            "thm1": cls.THM1_UPPER_LAPLACE,
            "thm2": cls.THM2_LOWER_CONF_INDEP,
            "thm3": cls.THM3_UPPER_CONF_DEP,
            "thm4": cls.THM4_LOWER_MINIMAX,
            "asymptotic": cls.ASYMPTOTIC_BENCHMARK,
            "markov": cls.MARKOV_BASELINE,
            "priorart": cls.PRIOR_ART,
            "lem6laplace": cls.LEM6_RESIDUAL_LAPLACE,
            "lem6conf": cls.LEM6_RESIDUAL_CONF,
            "remark": cls.REMARK_DETERMINISTIC,
        }
        if key in aliases:
            return aliases[key]
        raise ValidationError(
            f"unknown threshold family {name!r}; expected one of {[f.value for f in cls]}"
        )


class Side(str, enum.Enum):
    UPPER = "upper"  # P(loss >= value) <= multiplier * delta
    LOWER = "lower"  # P(loss >= value) >= delta


@dataclass(frozen=True)
class ThresholdSpec:
    family: Family
    n: int
    d: int
    delta: float
    kappa: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.n < 1:
            raise ValidationError(f"n must be at least 1, got {self.n}")
        if self.d < 2:
            raise ValidationError(f"d must be at least 2, got {self.d}")
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not self.kappa >= 1.0:
            raise ValidationError(f"kappa must be at least 1, got {self.kappa!r}")


@dataclass(frozen=True)
class ThresholdValue:
    family: Family
    value: float
    in_domain: bool
    side: Side
    multiplier: float


def _in_open(x: float, lo: float, hi: float) -> bool:
    return lo < x < hi


def _upper_domain(n: int, d: int, L: float) -> bool:
    # delta in (e^{-n/6}, e^{-2})  <=>  2 < log(1/delta) < n/6
    return n >= 12 and d >= 2 and _in_open(L, 2.0, n / 6.0)


def threshold(spec: ThresholdSpec) -> ThresholdValue:
    n, d, kappa = spec.n, spec.d, spec.kappa
    L = math.log(1.0 / spec.delta)
    fam = spec.family
    sd = math.sqrt(d)
    if fam is Family.ASYMPTOTIC_BENCHMARK:
        return ThresholdValue(fam, (2 * d + 2 * L) / n, True, Side.UPPER, 1.0)
    if fam is Family.MARKOV_BASELINE:
        return ThresholdValue(fam, d / (n * spec.delta), True, Side.UPPER, 1.0)
    if fam is Family.PRIOR_ART:
        return ThresholdValue(fam, d * math.log(d / spec.delta) / n, True, Side.UPPER, 1.0)
    if fam is Family.THM1_UPPER_LAPLACE:
        value = C1 * (d + L * L) / n
        return ThresholdValue(fam, value, _upper_domain(n, d, L), Side.UPPER, 4.0)
    if fam is Family.THM3_UPPER_CONF_DEP:
        value = C3 * (d / n + sd * L / n + d * L * L / (n * n))
        return ThresholdValue(fam, value, _upper_domain(n, d, L), Side.UPPER, 4.0)
    if fam is Family.THM2_LOWER_CONF_INDEP:
        value = c2(kappa) * (d + L * L) / n
        ok = n >= d >= 4000 and _in_open(L, 6.32 * kappa, float(n))
        return ThresholdValue(fam, value, ok, Side.LOWER, 1.0)
    if fam is Family.THM4_LOWER_MINIMAX:
        value = C4 * ((d + sd * L) / n + d * L * L / (n * n))
        ok = n >= d >= 5000 and _in_open(L, 1.0, float(n))
        return ThresholdValue(fam, value, ok, Side.LOWER, 1.0)
    if fam is Family.LEM6_RESIDUAL_LAPLACE:
        value = (RESIDUAL_LAPLACE * d + RESIDUAL_LAPLACE * L * L) / n
        return ThresholdValue(fam, value, _in_open(L, 2.0, n / 6.0), Side.UPPER, 2.0)
    if fam is Family.LEM6_RESIDUAL_CONF:
        value = RESIDUAL_CONF * sd * L / n
        ok = sd <= L < n / 6.0
        return ThresholdValue(fam, value, ok, Side.UPPER, 2.0)
    if fam is Family.REMARK_DETERMINISTIC:
        # holds surely, so the exceedance probability is bounded by 0 * delta
        return ThresholdValue(fam, 2.0 * n + 1.0, n >= d, Side.UPPER, 0.0)
    raise ValidationError(f"unhandled family {fam!r}")


def threshold_value(family, n: int, d: int, delta: float, kappa: float = 1.0) -> float:
    return threshold(ThresholdSpec(Family.parse(family) if isinstance(family, str) else family,
                                   n, d, delta, kappa)).value


def compare_thresholds(n: int, d: int, delta: float, kappa: float = 1.0) -> list[ThresholdValue]:
    """All families at ``(n, d, delta, kappa)``, sorted by value."""
    rows = [threshold(ThresholdSpec(f, n, d, delta, kappa)) for f in Family]
    return sorted(rows, key=lambda r: (r.value, r.family.value))
