"""Distributions on the simplex, count vectors, samples and seeded streams.

Class indices are 0-based throughout: a distribution of dimension ``d``
lives on ``{0, ..., d-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SIMPLEX_ATOL = 1e-12
_U64 = 2**64


class ValidationError(ValueError):
    """Raised when a value does not satisfy a structural invariant."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Distribution:
    """A point of the probability simplex.

    Construct through :func:`make_distribution` to normalize raw weights;
    direct construction validates but does not renormalize.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise ValidationError("a distribution needs a non-empty 1-d probability vector")
        if not np.all(np.isfinite(p)):
            raise ValidationError("probabilities must be finite")
        if np.any(p < 0):
            raise ValidationError("probabilities must be nonnegative")
        total = float(np.sum(p))
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def d(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.d

    def __getitem__(self, j):
        return self.probs[j]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.probs, other.probs))

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        return f"Distribution({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False)
class CountVector:
    """Per-class occurrence counts of a sample of size ``n``."""

    counts: np.ndarray
    n: int = field(default=-1)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1 or c.size < 1:
            raise ValidationError("counts must be a non-empty 1-d vector")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(np.equal(np.mod(c, 1), 0)):
                raise ValidationError("counts must be integers")
        c = c.astype(np.int64)
        if np.any(c < 0):
            raise ValidationError("counts must be nonnegative")
        total = int(c.sum())
        n = total if self.n == -1 else int(self.n)
        if n != total:
            raise ValidationError(f"counts sum to {total}, expected n={n}")
        object.__setattr__(self, "counts", _frozen(c))
        object.__setattr__(self, "n", n)

    @property
    def d(self) -> int:
        return int(self.counts.size)

    def __len__(self) -> int:
        return self.d

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountVector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.counts, other.counts))

    def __hash__(self) -> int:
        return hash((self.n, self.counts.tobytes()))

    def __repr__(self) -> str:
        return f"CountVector({self.counts.tolist()}, n={self.n})"


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered sample of class indices in ``{0, ..., d-1}``."""

    classes: np.ndarray
    d: int

    def __post_init__(self):
        s = np.asarray(self.classes, dtype=np.int64).reshape(-1)
        if self.d < 1:
            raise ValidationError("dimension must be at least 1")
        if s.size and (s.min() < 0 or s.max() >= self.d):
            raise ValidationError(f"class index out of range for d={self.d}")
        object.__setattr__(self, "classes", _frozen(s))

    @property
    def n(self) -> int:
        return int(self.classes.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.classes, other.classes))

    def __hash__(self) -> int:
        return hash((self.d, self.classes.tobytes()))


@dataclass(frozen=True)
class RngSeed:
    """Identifies one reproducible random stream.

    The pair ``(master_seed, stream_id)`` fully determines the draws, so
    independent replications can be scheduled on any worker.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise ValidationError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self, *substream: int) -> np.random.Generator:
        """Generator for this stream, or for a numbered sub-stream of it."""
        key = (int(self.stream_id), *(int(s) for s in substream))
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id: int) -> "RngSeed":
        return RngSeed(self.master_seed, stream_id)


def make_distribution(raw: Sequence[float]) -> Distribution:
    """Normalize nonnegative weights onto the simplex.

    >>> make_distribution([1, 1, 1, 1]).probs.tolist()
    [0.25, 0.25, 0.25, 0.25]
    """
    w = np.asarray(raw, dtype=np.float64).reshape(-1)
    if w.size < 1:
        raise ValidationError("need at least one weight")
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    if np.any(w < 0):
        raise ValidationError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValidationError("weights must not all be zero")
    p = w / total
    # absorb the last ulp of rounding so the sum check is never borderline
    p[np.argmax(p)] += 1.0 - p.sum()
    return Distribution(np.clip(p, 0.0, None))


def dirac(j: int, d: int) -> Distribution:
    """Point mass at class ``j``."""
    if d < 1 or not 0 <= j < d:
        raise ValidationError(f"class index {j} out of range for d={d}")
    p = np.zeros(d)
    p[j] = 1.0
    return Distribution(p)


def uniform(d: int) -> Distribution:
    if d < 1:
        raise ValidationError("dimension must be at least 1")
    return Distribution(np.full(d, 1.0 / d))


def power_law(d: int, exponent: float) -> Distribution:
    """``p_j`` proportional to ``(j+1)^(-exponent)``."""
    return make_distribution(np.arange(1, d + 1, dtype=np.float64) ** (-float(exponent)))


def two_point(d: int, rho: float, j: int = 1) -> Distribution:
    """``(1 - rho) * dirac(0) + rho * dirac(j)``."""
    if not 0.0 <= rho <= 1.0:
        raise ValidationError("rho must lie in [0, 1]")
    if not 1 <= j < d:
        raise ValidationError(f"second atom {j} must be in [1, {d - 1}]")
    p = np.zeros(d)
    p[0] = 1.0 - rho
    p[j] = rho
    return Distribution(p)


def sample_iid(P: Distribution, n: int, seed: RngSeed) -> Sample:
    """Draw ``n`` i.i.d. classes from ``P`` by inverse-CDF binary search."""
    if n < 0:
        raise ValidationError("sample size must be nonnegative")
    rng = seed.generator()
    return Sample(draw_classes(P.probs, n, rng), P.d)


def draw_classes(probs: np.ndarray, size, rng: np.random.Generator) -> np.ndarray:
    """Categorical draws via cumulative sums and ``searchsorted``."""
    cdf = np.cumsum(probs)
    last = int(np.flatnonzero(probs > 0)[-1])
    u = rng.random(size) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, last)


def count_classes(s: Sample, d: int | None = None) -> CountVector:
    d = s.d if d is None else d
    if s.n and s.classes.max() >= d:
        raise ValidationError(f"class index out of range for d={d}")
    return CountVector(np.bincount(s.classes, minlength=d), s.n)
