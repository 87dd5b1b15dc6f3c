"""Shared fixtures and hypothesis strategies."""

from fractions import Fraction

import pytest
from hypothesis import strategies as st

from kreinfeller.measures import CantorLevel, Measure, WeightVector, cantor_approximant


# Weight vectors used throughout: symmetric, the classic asymmetric pair,
# and one less round choice.
STANDARD_WEIGHTS = [
    WeightVector.of(Fraction(1, 2)),
    WeightVector.of(Fraction(1, 3)),
    WeightVector.of(Fraction(2, 5)),
]


@pytest.fixture(params=STANDARD_WEIGHTS, ids=lambda w: f"w={w}")
def weights(request):
    return request.param


@pytest.fixture
def lebesgue():
    return Measure.lebesgue()


def cantor(w: WeightVector, n: int) -> Measure:
    return cantor_approximant(CantorLevel(w, n))


@st.composite
def weight_vectors(draw):
    num = draw(st.integers(min_value=1, max_value=49))
    den = draw(st.integers(min_value=max(2, num + 1), max_value=100))
    w1 = Fraction(num, den)
    if w1 > Fraction(1, 2):
        w1 = 1 - w1
    if w1 == 0:
        w1 = Fraction(1, den)
    return WeightVector.of(w1)


@st.composite
def piecewise_measures(draw):
    """Random measure: rational breakpoints, nonnegative rational densities, mass exactly 1."""
    k = draw(st.integers(min_value=1, max_value=6))
    cuts = draw(
        st.lists(
            st.fractions(min_value=Fraction(1, 50), max_value=Fraction(49, 50), max_denominator=64),
            min_size=k - 1,
            max_size=k - 1,
            unique=True,
        )
    )
    bps = [Fraction(0)] + sorted(cuts) + [Fraction(1)]
    raw = draw(
        st.lists(
            st.fractions(min_value=0, max_value=5, max_denominator=16),
            min_size=k,
            max_size=k,
        )
    )
    mass = sum(r * (bps[i + 1] - bps[i]) for i, r in enumerate(raw))
    if mass == 0:
        raw[0] = Fraction(1)
        mass = bps[1] - bps[0]
    dens = tuple(r / mass for r in raw)
    return Measure(tuple(bps), dens)
