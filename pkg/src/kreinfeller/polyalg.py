"""Piecewise-polynomial arithmetic for the iterated-integral recursions.

Polynomials live on the same rational breakpoint grid as a Measure and
store per-piece coefficient vectors in the local variable s = x - t_{i-1}.
The local representation keeps short deep-level pieces well conditioned.
Coefficients are plain floats; every coefficient produced by the
recursions here is nonnegative, so the integral operators below involve
no cancellation and rounding stays at the ulp level.

The two operators of interest map f to x -> integral_0^x f dt and
x -> integral_0^x f dmu; alternating them builds the coefficient
functions of the measure trigonometric series.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, ResourceError
from .measures import Measure

DEFAULT_DEGREE_CAP = 64
CONTINUITY_RTOL = 1e-13
GRID_CAP = 1_000_000


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Continuous piecewise polynomial on a rational grid over [0,1].

    pieces[i] holds ascending coefficients (c0, c1, ...) of the local
    polynomial sum_j c_j * (x - grid[i])**j valid on [grid[i], grid[i+1]].
    """

    grid: tuple[Fraction, ...]
    pieces: tuple[tuple[float, ...], ...]
    degree_cap: int = DEFAULT_DEGREE_CAP
    _grid_f: np.ndarray = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if len(self.grid) < 2 or len(self.pieces) != len(self.grid) - 1:
            raise DomainError("piece count must equal grid interval count")
        if self.grid[0] != 0 or self.grid[-1] != 1:
            raise DomainError("grid must span [0,1]")
        if any(self.grid[i] >= self.grid[i + 1] for i in range(len(self.grid) - 1)):
            raise DomainError("grid must be strictly increasing")
        if any(len(c) - 1 > self.degree_cap for c in self.pieces):
            raise ConfigError(f"piece degree exceeds cap {self.degree_cap}")
        object.__setattr__(self, "_grid_f", np.array([float(t) for t in self.grid]))

    def continuity_defect(self) -> float:
        """Largest relative jump across interior breakpoints.

        Integral outputs are continuous by construction (chained
        accumulation constants), so their defect stays at rounding level;
        raw inputs such as densities may be genuinely discontinuous.
        """
        worst = 0.0
        for i in range(len(self.pieces) - 1):
            ell = float(self.grid[i + 1] - self.grid[i])
            left = _horner(self.pieces[i], ell)
            right = self.pieces[i + 1][0] if self.pieces[i + 1] else 0.0
            worst = max(worst, abs(left - right) / max(1.0, abs(left), abs(right)))
        return worst

    def is_continuous(self, rtol: float = CONTINUITY_RTOL) -> bool:
        return self.continuity_defect() <= rtol

    # -- constructors ---------------------------------------------------

    @classmethod
    def constant(cls, value: float, grid: Sequence[Fraction], degree_cap: int = DEFAULT_DEGREE_CAP):
        g = tuple(grid)
        return cls(g, tuple((float(value),) for _ in range(len(g) - 1)), degree_cap)

    # -- queries ----------------------------------------------------------

    @property
    def degree(self) -> int:
        return max(len(c) - 1 for c in self.pieces)

    def _piece_index(self, x: float) -> int:
        i = int(np.searchsorted(self._grid_f, x, side="right")) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def eval(self, x: float) -> float:
        if not (0.0 <= x <= 1.0):
            raise DomainError(f"evaluation point {x} outside [0,1]")
        i = self._piece_index(x)
        return _horner(self.pieces[i], x - self._grid_f[i])

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
            raise DomainError("evaluation points outside [0,1]")
        idx = np.clip(np.searchsorted(self._grid_f, xs, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.zeros_like(xs)
        for i in np.unique(idx):
            sel = idx == i
            s = xs[sel] - self._grid_f[i]
            acc = np.zeros_like(s)
            for c in reversed(self.pieces[i]):
                acc = acc * s + c
            out[sel] = acc
        return out

    def value_at_one(self) -> float:
        ell = float(self.grid[-1] - self.grid[-2])
        return _horner(self.pieces[-1], ell)

    # -- linear structure (test plumbing) ---------------------------------

    def scale(self, a: float) -> "PiecewisePolynomial":
        return PiecewisePolynomial(
            self.grid, tuple(tuple(a * c for c in p) for p in self.pieces), self.degree_cap
        )

    def add(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        grid = merge_grids(self.grid, other.grid)
        f, g = self.refine_to(grid), other.refine_to(grid)
        pieces = []
        for pa, pb in zip(f.pieces, g.pieces):
            n = max(len(pa), len(pb))
            pieces.append(tuple((pa[j] if j < len(pa) else 0.0) + (pb[j] if j < len(pb) else 0.0)
                                for j in range(n)))
        return PiecewisePolynomial(grid, tuple(pieces), max(self.degree_cap, other.degree_cap))

    def refine_to(self, grid: tuple[Fraction, ...]) -> "PiecewisePolynomial":
        """Re-express on a finer grid (which must contain this one's)."""
        if grid == self.grid:
            return self
        own = set(self.grid)
        if not own.issubset(set(grid)):
            raise DomainError("refinement grid must contain the original breakpoints")
        pieces = []
        for k in range(len(grid) - 1):
            i = bisect.bisect_right(self.grid, grid[k]) - 1
            i = min(i, len(self.pieces) - 1)
            shift = float(grid[k] - self.grid[i])
            pieces.append(_shift_poly(self.pieces[i], shift))
        return PiecewisePolynomial(grid, tuple(pieces), self.degree_cap)


def _horner(coeffs: Sequence[float], s: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


def _shift_poly(coeffs: Sequence[float], h: float) -> tuple[float, ...]:
    """Coefficients of p(s + h) given those of p(s) (Taylor shift)."""
    if h == 0.0:
        return tuple(coeffs)
    out = list(coeffs)
    n = len(out)
    # synthetic division applied repeatedly: exact Taylor shift in O(n^2)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] += h * out[j + 1]
    return tuple(out)


def merge_grids(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[Fraction, ...]:
    merged = sorted(set(a) | set(b))
    if len(merged) > GRID_CAP:
        raise ResourceError(f"merged grid of {len(merged)} breakpoints exceeds cap {GRID_CAP}")
    return tuple(merged)


def _piece_integral(coeffs: Sequence[float], ell: float) -> float:
    # integral over the full piece of sum c_j s^j = sum c_j ell^{j+1}/(j+1)
    return math.fsum(c * ell ** (j + 1) / (j + 1) for j, c in enumerate(coeffs))


def integrate_dt(f: PiecewisePolynomial) -> PiecewisePolynomial:
    """Antiderivative x -> integral_0^x f(t) dt, zero at x = 0.

    Degree rises by one per piece; accumulation constants are chained
    left to right so the result is continuous by construction.
    """
    if f.degree + 1 > f.degree_cap:
        raise ConfigError(f"integration would exceed degree cap {f.degree_cap}; raise the cap")
    pieces = []
    acc = 0.0
    for i, coeffs in enumerate(f.pieces):
        ell = float(f.grid[i + 1] - f.grid[i])
        pieces.append((acc,) + tuple(c / (j + 1) for j, c in enumerate(coeffs)))
        acc += _piece_integral(coeffs, ell)
    return PiecewisePolynomial(f.grid, tuple(pieces), f.degree_cap)


def integrate_dmu(f: PiecewisePolynomial, mu: Measure) -> PiecewisePolynomial:
    """Measure antiderivative x -> integral_0^x f dmu for piecewise-constant dmu.

    On each common-refinement piece the integrand contributes density * f,
    so this is integrate_dt with per-piece density weights; the result is
    constant across zero-density pieces.
    """
    if f.degree + 1 > f.degree_cap:
        raise ConfigError(f"integration would exceed degree cap {f.degree_cap}; raise the cap")
    grid = merge_grids(f.grid, mu.breakpoints)
    g = f.refine_to(grid)
    dens = [float(mu.densities[min(bisect.bisect_right(mu.breakpoints, grid[k]) - 1,
                                   len(mu.densities) - 1)])
            for k in range(len(grid) - 1)]
    pieces = []
    acc = 0.0
    for i, coeffs in enumerate(g.pieces):
        d = dens[i]
        ell = float(grid[i + 1] - grid[i])
        if d == 0.0:
            pieces.append((acc,))
        else:
            pieces.append((acc,) + tuple(d * c / (j + 1) for j, c in enumerate(coeffs)))
            acc += d * _piece_integral(coeffs, ell)
    return PiecewisePolynomial(grid, tuple(pieces), g.degree_cap)
