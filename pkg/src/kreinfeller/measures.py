"""Probability measures on [0,1] with piecewise-constant density.

The measures of interest are the Cantor-construction approximants: at
refinement level n the unit mass sits on the 2^n surviving ternary
intervals of length 3^-n, weighted by a product of two branch weights.
Level 0 is Lebesgue measure.  Densities are constant per piece, so
cumulative distribution functions are piecewise linear and everything
here can be kept exact in rational arithmetic.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, ResourceError

Rat = Union[int, float, str, Fraction]

MASS_TOL = 1e-12
DEFAULT_PIECE_CAP = 200_000


def _frac(x: Rat) -> Fraction:
    # Fraction(float) is exact (binary expansion), which is what we want:
    # no hidden decimal re-rounding.
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class WeightVector:
    """Two branch weights with w1 + w2 = 1 exactly and w1 <= w2.

    Construction canonicalizes the order (the construction is symmetric
    under reflecting [0,1], so the spectrum does not depend on it) and
    records whether a swap happened.
    """

    w1: Fraction
    w2: Fraction
    swapped: bool = False

    def __post_init__(self):
        if not (0 < self.w1 < 1 and 0 < self.w2 < 1):
            raise DomainError(f"weights must lie in (0,1), got ({self.w1}, {self.w2})")
        if self.w1 + self.w2 != 1:
            raise DomainError("weights must sum to 1 exactly")
        if self.w1 > self.w2:
            raise DomainError("weights must be canonicalized w1 <= w2; use WeightVector.of")

    @classmethod
    def of(cls, first: Rat, second: Rat | None = None) -> "WeightVector":
        a = _frac(first)
        b = _frac(second) if second is not None else 1 - a
        if a + b != 1:
            raise DomainError(f"weights {a} + {b} != 1 exactly")
        if a <= b:
            return cls(a, b, swapped=False)
        return cls(b, a, swapped=True)

    def as_floats(self) -> tuple[float, float]:
        return float(self.w1), float(self.w2)

    def __str__(self) -> str:
        return f"({self.w1}, {self.w2})"


@dataclass(frozen=True)
class Measure:
    """Borel probability measure on [0,1] given by a piecewise-constant density.

    breakpoints: 0 = t_0 < t_1 < ... < t_K = 1, exact rationals.
    densities:   d_1 ... d_K >= 0, one per interval, exact rationals.

    Instances are immutable; float views of the grid, densities and CDF
    are cached at construction for fast evaluation.
    """

    breakpoints: tuple[Fraction, ...]
    densities: tuple[Fraction, ...]
    # cached float views, excluded from equality/repr
    _bp: np.ndarray = field(compare=False, repr=False, default=None)
    _dens: np.ndarray = field(compare=False, repr=False, default=None)
    _cdf_at_bp: tuple[Fraction, ...] = field(compare=False, repr=False, default=None)
    _cdf_float: np.ndarray = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        bp, dens = self.breakpoints, self.densities
        if len(bp) < 2 or len(dens) != len(bp) - 1:
            raise DomainError("need K+1 breakpoints for K densities, K >= 1")
        if bp[0] != 0 or bp[-1] != 1:
            raise DomainError("measure must live on [0,1]: breakpoints must start at 0, end at 1")
        if any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)):
            raise DomainError("breakpoints must be strictly increasing")
        if any(d < 0 for d in dens):
            raise DomainError("densities must be nonnegative")
        cum = [Fraction(0)]
        for i, d in enumerate(dens):
            cum.append(cum[-1] + d * (bp[i + 1] - bp[i]))
        if abs(float(cum[-1]) - 1.0) > MASS_TOL:
            raise DomainError(f"total mass {float(cum[-1])} differs from 1 beyond {MASS_TOL}")
        object.__setattr__(self, "_bp", np.array([float(t) for t in bp]))
        object.__setattr__(self, "_dens", np.array([float(d) for d in dens]))
        object.__setattr__(self, "_cdf_at_bp", tuple(cum))
        object.__setattr__(self, "_cdf_float", np.array([float(c) for c in cum]))

    # -- constructors -------------------------------------------------

    @classmethod
    def from_pieces(cls, breakpoints: Sequence[Rat], densities: Sequence[Rat]) -> "Measure":
        return cls(tuple(_frac(t) for t in breakpoints), tuple(_frac(d) for d in densities))

    @classmethod
    def lebesgue(cls) -> "Measure":
        return cls((Fraction(0), Fraction(1)), (Fraction(1),))

    # -- queries -------------------------------------------------------

    @property
    def piece_count(self) -> int:
        return len(self.densities)

    def support_pieces(self) -> list[int]:
        """Indices of pieces with strictly positive density."""
        return [i for i, d in enumerate(self.densities) if d > 0]

    def cdf_exact(self, t: Rat) -> Fraction:
        tt = _frac(t)
        if tt < 0 or tt > 1:
            raise DomainError(f"cdf argument {t} outside [0,1]")
        i = bisect.bisect_right(self.breakpoints, tt) - 1
        i = min(i, len(self.densities) - 1)
        return self._cdf_at_bp[i] + self.densities[i] * (tt - self.breakpoints[i])

    def cdf(self, t: float) -> float:
        if isinstance(t, Fraction):
            return float(self.cdf_exact(t))
        if not (0.0 <= t <= 1.0):
            raise DomainError(f"cdf argument {t} outside [0,1]")
        i = int(np.searchsorted(self._bp, t, side="right")) - 1
        i = min(i, len(self.densities) - 1)
        return self._cdf_float[i] + float(self._dens[i]) * (t - self._bp[i])

    def cdf_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < 0.0 or ts.max() > 1.0):
            raise DomainError("cdf arguments outside [0,1]")
        idx = np.clip(np.searchsorted(self._bp, ts, side="right") - 1, 0, len(self.densities) - 1)
        return self._cdf_float[idx] + self._dens[idx] * (ts - self._bp[idx])

    # -- serialization --------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "breakpoints": [float(t) for t in self.breakpoints],
            "densities": [float(d) for d in self.densities],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Measure":
        doc = json.loads(text)
        return cls.from_pieces(doc["breakpoints"], doc["densities"])


@dataclass(frozen=True)
class CantorLevel:
    """Construction request: branch weights plus refinement level n >= 0."""

    weights: WeightVector
    level: int

    def __post_init__(self):
        if self.level < 0 or int(self.level) != self.level:
            raise DomainError(f"level must be a nonnegative integer, got {self.level}")


def cantor_approximant(spec: CantorLevel, piece_cap: int = DEFAULT_PIECE_CAP) -> Measure:
    """Level-n approximant of the weighted-Cantor measure.

    Mass sits on the 2^n surviving ternary intervals of length 3^-n;
    the interval reached by branch choices x_1..x_n carries density
    3^n * prod(w_{x_i}).  Removed middle thirds keep explicit zero
    density so the breakpoint grid is exactly the level-n construction.
    """
    n = spec.level
    if n > 60 or (3 * 2**n) > piece_cap:
        raise ResourceError(f"level {n} needs ~{3 * 2**n if n <= 60 else '2^n'} pieces, cap is {piece_cap}")
    w1, w2 = spec.weights.w1, spec.weights.w2
    length = Fraction(1, 3**n)
    # (left endpoint, weight product), kept in ascending order
    intervals: list[tuple[Fraction, Fraction]] = [(Fraction(0), Fraction(1))]
    for step in range(1, n + 1):
        child_len = Fraction(1, 3**step)
        nxt: list[tuple[Fraction, Fraction]] = []
        for left, wprod in intervals:
            nxt.append((left, wprod * w1))
            nxt.append((left + 2 * child_len, wprod * w2))
        intervals = nxt
    scale = 3**n
    breakpoints: list[Fraction] = [Fraction(0)]
    densities: list[Fraction] = []
    cursor = Fraction(0)
    for left, wprod in intervals:
        if left > cursor:
            breakpoints.append(left)
            densities.append(Fraction(0))
        breakpoints.append(left + length)
        densities.append(wprod * scale)
        cursor = left + length
    return Measure(tuple(breakpoints), tuple(densities))


def cdf_sup_distance_exact(a: Measure, b: Measure) -> Fraction:
    """Exact sup-norm distance between two piecewise-linear CDFs.

    |F_a - F_b| is piecewise linear, so its maximum over [0,1] is
    attained at a breakpoint of the merged grid; it suffices to scan
    those points in exact arithmetic.
    """
    merged = sorted(set(a.breakpoints) | set(b.breakpoints))
    return max(abs(a.cdf_exact(t) - b.cdf_exact(t)) for t in merged)


def cdf_sup_distance(a: Measure, b: Measure) -> float:
    return float(cdf_sup_distance_exact(a, b))


def verify_refinement_identity(spec: CantorLevel, samples: Sequence[float]) -> float:
    """Max defect of the one-step self-similarity of the CDFs.

    For level n >= 1 the construction satisfies
        F_n(y) = w1 * F_{n-1}(3y) + w2 * F_{n-1}(3y - 2)
    with the convention F(s) = 0 for s <= 0 and F(s) = 1 for s >= 1.
    Returns the maximum absolute defect over the sample grid.
    """
    if spec.level < 1:
        raise DomainError("refinement identity needs level >= 1")
    mu_n = cantor_approximant(spec)
    mu_prev = cantor_approximant(CantorLevel(spec.weights, spec.level - 1))
    w1, w2 = spec.weights.as_floats()

    def clamped_cdf(m: Measure, s: float) -> float:
        if s <= 0.0:
            return 0.0
        if s >= 1.0:
            return 1.0
        return m.cdf(s)

    worst = 0.0
    for y in samples:
        lhs = clamped_cdf(mu_n, float(y))
        rhs = w1 * clamped_cdf(mu_prev, 3.0 * float(y)) + w2 * clamped_cdf(mu_prev, 3.0 * float(y) - 2.0)
        worst = max(worst, abs(lhs - rhs))
    return worst
