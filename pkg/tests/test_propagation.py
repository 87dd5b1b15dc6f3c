"""Closed-form piece propagation vs series, closed forms, finite differences."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kreinfeller.errors import DomainError
from kreinfeller.measures import Measure, WeightVector
from kreinfeller.propagation import boundary_values, eval_on_grid
from kreinfeller import series as se

from conftest import cantor, piecewise_measures

HALF = WeightVector.of(Fraction(1, 2))
THIRD = WeightVector.of(Fraction(1, 3))


class TestLebesgueClosedForm:
    @pytest.mark.parametrize("z", [0.0, 0.3, 2.0, 10.0, 31.4])
    def test_reduces_to_sin_cos(self, z):
        r = boundary_values(Measure.lebesgue(), z)
        assert r.sp == pytest.approx(math.sin(z), abs=1e-13)
        assert r.cp == pytest.approx(math.cos(z), abs=1e-13)
        assert r.sq == pytest.approx(math.sin(z), abs=1e-13)
        assert r.cq == pytest.approx(math.cos(z), abs=1e-13)
        assert r.sp_prime == pytest.approx(math.cos(z), abs=1e-12)
        assert r.sq_prime == pytest.approx(math.cos(z), abs=1e-12)
        assert r.cp_prime == pytest.approx(-math.sin(z), abs=1e-12)
        assert r.cq_prime == pytest.approx(-math.sin(z), abs=1e-12)

    def test_grid_eval_is_cos_sin(self):
        xs = np.linspace(0, 1, 257)
        z = 7.7
        leb = Measure.lebesgue()
        np.testing.assert_allclose(eval_on_grid(leb, z, xs, "cp"), np.cos(z * xs), atol=1e-13)
        np.testing.assert_allclose(eval_on_grid(leb, z, xs, "sq"), np.sin(z * xs), atol=1e-13)


@pytest.fixture(scope="module")
def table():
    return se.build_table(cantor(THIRD, 2), 50)


class TestAgainstSeries:
    """Dual-route check: the truncated series and the piece propagation
    must agree wherever the series is numerically trustworthy."""

    @pytest.mark.parametrize("z", [0.25, 1.0, 2.5, 5.0])
    def test_boundary_values_agree(self, table, z):
        mu = table.measure
        r = boundary_values(mu, z)
        for got, series_fun in ((r.sp, se.sinp), (r.sq, se.sinq), (r.cp, se.cosp), (r.cq, se.cosq)):
            val, cert = series_fun(table, z)
            assert abs(got - val) <= 1e-12 + cert.tail_bound

    @pytest.mark.parametrize("z", [0.25, 1.0, 2.5, 5.0])
    def test_derivatives_agree(self, table, z):
        mu = table.measure
        r = boundary_values(mu, z)
        for got, series_fun in ((r.sp_prime, se.sinp_prime), (r.sq_prime, se.sinq_prime),
                                (r.cp_prime, se.cosp_prime), (r.cq_prime, se.cosq_prime)):
            val, cert = series_fun(table, z)
            assert abs(got - val) <= 1e-12 + cert.tail_bound

    def test_grid_eval_agrees(self, table):
        mu = table.measure
        z = 3.0
        xs = np.linspace(0, 1, 23)
        cp = eval_on_grid(mu, z, xs, "cp")
        sq = eval_on_grid(mu, z, xs, "sq")
        for i, x in enumerate(xs):
            assert cp[i] == pytest.approx(se.cp_eval(table, z, float(x))[0], abs=1e-12)
            assert sq[i] == pytest.approx(se.sq_eval(table, z, float(x))[0], abs=1e-12)

    @given(mu=piecewise_measures(), z=st.floats(min_value=0.0, max_value=6.0))
    @settings(max_examples=25, deadline=None)
    def test_random_measures_agree(self, mu, z):
        table = se.build_table(mu, 30)
        r = boundary_values(mu, z)
        val, cert = se.sinp(table, z)
        assert abs(r.sp - val) <= 1e-10 + cert.tail_bound
        val, cert = se.cosq(table, z)
        assert abs(r.cq - val) <= 1e-10 + cert.tail_bound


class TestDerivativeFiniteDifference:
    def test_large_z_deep_level(self):
        mu = cantor(HALF, 5)
        z, h = 25.0, 1e-5
        r = boundary_values(mu, z)
        for field, pick in (("sp_prime", lambda t: t.sp), ("cp_prime", lambda t: t.cp),
                            ("sq_prime", lambda t: t.sq), ("cq_prime", lambda t: t.cq)):
            fd = (pick(boundary_values(mu, z + h)) - pick(boundary_values(mu, z - h))) / (2 * h)
            assert getattr(r, field) == pytest.approx(fd, abs=5e-5)


class TestGridEvaluation:
    def test_unsorted_input_preserved(self):
        mu = cantor(HALF, 2)
        xs = np.array([0.9, 0.1, 0.5, 0.0, 1.0, 0.33])
        got = eval_on_grid(mu, 4.0, xs, "cp")
        ref = eval_on_grid(mu, 4.0, np.sort(xs), "cp")
        assert sorted(got) == sorted(ref)
        one_by_one = [eval_on_grid(mu, 4.0, np.array([x]), "cp")[0] for x in xs]
        np.testing.assert_allclose(got, one_by_one, atol=1e-14)

    def test_initial_conditions(self):
        mu = cantor(THIRD, 3)
        z = 9.0
        assert eval_on_grid(mu, z, np.array([0.0]), "cp")[0] == 1.0
        assert eval_on_grid(mu, z, np.array([0.0]), "sq")[0] == 0.0
        assert eval_on_grid(mu, z, np.array([0.0]), "sp")[0] == 0.0
        assert eval_on_grid(mu, z, np.array([0.0]), "cq")[0] == 1.0

    def test_constant_on_gaps(self):
        # sp and cq are measure antiderivatives: flat across zero-density gaps
        mu = cantor(HALF, 1)
        z = 5.0
        xs = np.linspace(1.0 / 3.0, 2.0 / 3.0, 9)
        sp = eval_on_grid(mu, z, xs, "sp")
        cq = eval_on_grid(mu, z, xs, "cq")
        assert np.ptp(sp) <= 1e-14
        assert np.ptp(cq) <= 1e-14

    def test_rejects_out_of_domain(self):
        with pytest.raises(DomainError):
            eval_on_grid(Measure.lebesgue(), 1.0, np.array([1.2]), "cp")
        with pytest.raises(DomainError):
            eval_on_grid(Measure.lebesgue(), 1.0, np.array([0.5]), "nope")


class TestConservationLaw:
    """cp*cq + sp*sq = 1 identically: its x-derivative cancels piecewise
    ((-z sp)cq + cp(-z d sq) + (z d cp)sq + sp(z cq) = 0) and the value at
    x = 0 is 1.  The measure analogue of cos^2 + sin^2 = 1, and a sharp
    cross-check of all four propagation maps at once."""

    @given(z=st.floats(min_value=0.0, max_value=40.0),
           level=st.integers(min_value=0, max_value=5))
    @settings(max_examples=50, deadline=None)
    def test_boundary_invariant(self, z, level):
        mu = cantor(THIRD, level)
        r = boundary_values(mu, z)
        amp = max(1.0, abs(r.cp), abs(r.sp), abs(r.cq), abs(r.sq))
        assert abs(r.cp * r.cq + r.sp * r.sq - 1.0) <= 4.0 * amp * r.err_est + 1e-13

    @given(z=st.floats(min_value=0.0, max_value=40.0))
    @settings(max_examples=40, deadline=None)
    def test_z_derivative_of_invariant_vanishes(self, z):
        mu = cantor(HALF, 3)
        r = boundary_values(mu, z)
        amp = max(1.0, abs(r.cp), abs(r.sp), abs(r.cq), abs(r.sq),
                  abs(r.cp_prime), abs(r.sp_prime), abs(r.cq_prime), abs(r.sq_prime))
        d_inv = (r.cp_prime * r.cq + r.cp * r.cq_prime
                 + r.sp_prime * r.sq + r.sp * r.sq_prime)
        assert abs(d_inv) <= 8.0 * amp * r.err_est + 1e-13

    def test_invariant_on_grid(self):
        mu = cantor(HALF, 4)
        z = 40.0
        xs = np.linspace(0, 1, 301)
        total = (eval_on_grid(mu, z, xs, "cp") * eval_on_grid(mu, z, xs, "cq")
                 + eval_on_grid(mu, z, xs, "sp") * eval_on_grid(mu, z, xs, "sq"))
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    @given(z=st.floats(min_value=0.0, max_value=40.0))
    @settings(max_examples=40, deadline=None)
    def test_values_finite_and_error_estimate_small(self, z):
        mu = cantor(HALF, 4)
        r = boundary_values(mu, z)
        amp = max(1.0, abs(r.cp), abs(r.sp), abs(r.cq), abs(r.sq))
        # rounding estimate tracks the running amplitude, which can peak
        # above the final boundary value; allow that headroom
        assert r.err_est <= 1e-11 * amp
        assert all(map(math.isfinite, (r.sp, r.cp, r.sq, r.cq,
                                       r.sp_prime, r.cp_prime, r.sq_prime, r.cq_prime)))
