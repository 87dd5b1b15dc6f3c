"""Eigenvalue search, eigenfunctions, zero counts, and the finite-element oracle.

Oracle routes kept deliberately separate:

* Lebesgue closed forms (roots at multiples of pi, norms sqrt(1/2));
* frozen spectral values for the level-1 symmetric measure, confirmed by
  doubly Richardson-extrapolated finite elements to ~1e-12 relative;
* Gauss-Legendre quadrature for norms, against the boundary-product identity;
* the series route's vanishing sums at found eigenvalues.
"""

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import weight_vectors
from kreinfeller.errors import BracketError, ConfigError, DomainError, PrecisionError
from kreinfeller.measures import CantorLevel, Measure, WeightVector, cantor_approximant
from kreinfeller.series import build_table, null_sum_plain, null_sum_weighted
from kreinfeller.spectrum import (
    CSV_HEADER,
    count_zeros,
    eigenfunction,
    eigenfunction_eval,
    eigenfunction_l2_norm,
    fem_oracle,
    find_eigenvalues,
    records_to_rows,
)

LEBESGUE = Measure(breakpoints=(F(0), F(1)), densities=(F(1),))

# Level-1 symmetric measure, both routes agreeing to ~1e-12:
# doubly Richardson-extrapolated FEM gave 14.804406601631 / 6.957945494369.
HALF_LEVEL1_DIRICHLET_1 = 14.804406601634041
HALF_LEVEL1_NEUMANN_1 = 6.9579454943704491


def cantor(w1, w2, level):
    return cantor_approximant(CantorLevel(WeightVector.of(F(w1), F(w2)), level))


@pytest.fixture(scope="module")
def leb_table():
    return build_table(LEBESGUE, 8)


class TestLebesgueRoots:
    def test_neumann_roots_are_multiples_of_pi(self, leb_table):
        recs = find_eigenvalues(leb_table, "neumann", 11, tol=1e-14)
        assert [r.index for r in recs] == list(range(11))
        for r in recs:
            expect = r.index * math.pi
            assert abs(r.z - expect) <= 5e-14 * max(1.0, expect)
            assert abs(r.lam - expect**2) <= 1e-12 * max(1.0, expect**2)

    def test_dirichlet_roots_are_positive_multiples_of_pi(self, leb_table):
        recs = find_eigenvalues(leb_table, "dirichlet", 10, tol=1e-14)
        assert [r.index for r in recs] == list(range(1, 11))
        for r in recs:
            expect = r.index * math.pi
            assert abs(r.z - expect) <= 5e-14 * expect

    def test_records_are_certified(self, leb_table):
        for boundary in ("neumann", "dirichlet"):
            recs = find_eigenvalues(leb_table, boundary, 6)
            zs = [r.z for r in recs]
            assert zs == sorted(zs)
            assert all(b > a for a, b in zip(zs, zs[1:]))
            for r in recs:
                if r.index == 0 and boundary == "neumann":
                    assert r.lam == 0.0 and r.error_bound == 0.0
                    continue
                assert r.bracket_lo < r.z < r.bracket_hi
                assert r.residual <= 1e-12
                assert 0.0 < r.error_bound < 1e-9

    def test_neumann_prefix_only_when_requested(self, leb_table):
        assert len(find_eigenvalues(leb_table, "neumann", 1)) == 1
        only = find_eigenvalues(leb_table, "neumann", 1)[0]
        assert only.lam == 0.0


@pytest.fixture(scope="module")
def half_level1_table():
    return build_table(cantor(F(1, 2), F(1, 2), 1), 4)


class TestFrozenLevelOne:
    @pytest.fixture
    def table(self, half_level1_table):
        return half_level1_table

    def test_first_dirichlet(self, table):
        rec = find_eigenvalues(table, "dirichlet", 1, tol=1e-14)[0]
        assert rec.lam == pytest.approx(HALF_LEVEL1_DIRICHLET_1, rel=1e-12)

    def test_first_positive_neumann(self, table):
        rec = find_eigenvalues(table, "neumann", 2, tol=1e-14)[1]
        assert rec.lam == pytest.approx(HALF_LEVEL1_NEUMANN_1, rel=1e-12)

    def test_symmetric_measure_halving(self, table):
        # With a measure symmetric about 1/2, the second positive Neumann root
        # is an even reflection of the first Dirichlet one: z_{N,2} = 2 z_{D,1}.
        rn = find_eigenvalues(table, "neumann", 3, tol=1e-14)
        rd = find_eigenvalues(table, "dirichlet", 1, tol=1e-14)
        assert rn[2].z == pytest.approx(2.0 * rd[0].z, rel=1e-13)


class TestSeriesCrossChecks:
    def test_found_roots_annihilate_vanishing_sums(self):
        mu = cantor(F(1, 3), F(2, 3), 2)
        table = build_table(mu, 40)
        recs = find_eigenvalues(table, "neumann", 3, tol=1e-14)
        for rec in recs[1:]:
            if rec.z > 5.0:
                continue  # combinatorial growth defeats float certification
            for fn in (null_sum_plain, null_sum_weighted):
                val, tail = fn(table, rec.lam)
                assert abs(val) <= 1e-10 + tail

    def test_interlacing_for_samples(self):
        # min-max sandwich: the m-th Dirichlet root sits between the (m-1)-th
        # and (m+1)-th Neumann roots (coincidence allowed; Lebesgue hits it)
        for mu in (LEBESGUE, cantor(F(1, 3), F(2, 3), 2), cantor(F(1, 4), F(3, 4), 1)):
            table = build_table(mu, 4)
            rn = find_eigenvalues(table, "neumann", 6)
            rd = find_eigenvalues(table, "dirichlet", 4)
            for m in range(1, 5):
                assert rn[m - 1].z <= rd[m - 1].z + 1e-10
                assert rd[m - 1].z <= rn[m + 1].z + 1e-10


@pytest.fixture(scope="module")
def third_level2():
    mu = cantor(F(1, 3), F(2, 3), 2)
    return mu, build_table(mu, 4)


class TestEigenfunctions:
    @pytest.fixture
    def mu(self, third_level2):
        return third_level2[0]

    @pytest.fixture
    def table(self, third_level2):
        return third_level2[1]

    def test_boundary_conditions(self, mu, table):
        for rec in find_eigenvalues(table, "neumann", 4):
            ef = eigenfunction(mu, rec)
            v0, v1 = eigenfunction_eval(ef, [0.0, 1.0])
            assert v0 == 1.0
            # Neumann: derivative vanishes at both ends, value does not
            assert abs(v1) > 1e-3 or rec.index == 0
        for rec in find_eigenvalues(table, "dirichlet", 4):
            ef = eigenfunction(mu, rec)
            v0, v1 = eigenfunction_eval(ef, [0.0, 1.0])
            assert v0 == 0.0
            assert abs(v1) <= 1e-11

    def test_index_zero_is_constant_one(self, mu, table):
        rec = find_eigenvalues(table, "neumann", 1)[0]
        ef = eigenfunction(mu, rec)
        xs = np.linspace(0.0, 1.0, 37)
        assert np.all(eigenfunction_eval(ef, xs) == 1.0)
        assert eigenfunction_l2_norm(ef) == 1.0
        assert count_zeros(ef) == 0

    def test_lebesgue_norms(self, leb_table):
        for boundary in ("neumann", "dirichlet"):
            for rec in find_eigenvalues(leb_table, boundary, 4):
                ef = eigenfunction(LEBESGUE, rec)
                expect = 1.0 if rec.index == 0 and boundary == "neumann" else math.sqrt(0.5)
                assert eigenfunction_l2_norm(ef) == pytest.approx(expect, rel=1e-12)

    def test_norm_identity_matches_quadrature(self, mu, table):
        for boundary in ("neumann", "dirichlet"):
            for rec in find_eigenvalues(table, boundary, 5, tol=1e-14):
                if boundary == "neumann" and rec.index == 0:
                    continue
                ef = eigenfunction(mu, rec)
                identity = eigenfunction_l2_norm(ef)
                quad = _l2_norm_quadrature(ef, mu)
                assert identity == pytest.approx(quad, rel=1e-9)

    def test_normalized_eval(self, mu, table):
        rec = find_eigenvalues(table, "dirichlet", 1)[0]
        ef = eigenfunction(mu, rec)
        xs = np.linspace(0.0, 1.0, 101)
        raw = eigenfunction_eval(ef, xs)
        unit = eigenfunction_eval(ef, xs, normalized=True)
        scale = eigenfunction_l2_norm(ef)
        assert np.allclose(raw, unit * scale, rtol=1e-13, atol=0.0)

    def test_zero_counts(self, mu, table):
        for rec in find_eigenvalues(table, "neumann", 6):
            assert count_zeros(eigenfunction(mu, rec)) == rec.index
        for rec in find_eigenvalues(table, "dirichlet", 5):
            assert count_zeros(eigenfunction(mu, rec)) == rec.index + 1

    def test_zero_counts_lebesgue(self, leb_table):
        for rec in find_eigenvalues(leb_table, "neumann", 7):
            assert count_zeros(eigenfunction(LEBESGUE, rec)) == rec.index
        for rec in find_eigenvalues(leb_table, "dirichlet", 6):
            assert count_zeros(eigenfunction(LEBESGUE, rec)) == rec.index + 1


def _l2_norm_quadrature(ef, mu, npts=40):
    nodes, wts = np.polynomial.legendre.leggauss(npts)
    total = 0.0
    bps = [float(b) for b in mu.breakpoints]
    dens = [float(d) for d in mu.densities]
    for a, b, d in zip(bps, bps[1:], dens):
        if d == 0.0:
            continue
        xs = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        vals = eigenfunction_eval(ef, xs)
        total += d * 0.5 * (b - a) * float(np.dot(wts, vals * vals))
    return math.sqrt(total)


class TestFemOracle:
    def test_lebesgue_agreement(self):
        fem = fem_oracle(LEBESGUE, 1.0 / 729, 4, "neumann")
        assert abs(fem[0]) <= 1e-10
        for m in range(1, 4):
            assert fem[m] == pytest.approx((m * math.pi) ** 2, rel=3e-5)
        fem = fem_oracle(LEBESGUE, 1.0 / 729, 3, "dirichlet")
        for m in range(1, 4):
            assert fem[m - 1] == pytest.approx((m * math.pi) ** 2, rel=3e-5)

    def test_neumann_zero_mode_any_measure(self):
        for mu in (cantor(F(1, 3), F(2, 3), 2), cantor(F(1, 4), F(3, 4), 3)):
            fem = fem_oracle(mu, 3.0 ** -5, 1, "neumann")
            assert abs(fem[0]) <= 1e-10

    def test_cantor_agreement_and_h_refinement(self):
        mu = cantor(F(1, 3), F(2, 3), 2)
        table = build_table(mu, 2)
        recs = find_eigenvalues(table, "dirichlet", 4)
        errs = []
        for k in (4, 5, 6):
            fem = fem_oracle(mu, 3.0 ** -k, 4, "dirichlet")
            errs.append(max(abs(f - r.lam) / r.lam for f, r in zip(fem, recs)))
        assert errs[0] < 5e-3
        assert errs[0] > errs[1] > errs[2]
        # O(h^2) convergence: each refinement divides the error by ~9
        assert errs[1] < errs[0] / 5 and errs[2] < errs[1] / 5

    def test_condensation_handles_gap_nodes(self):
        # level-3 measure at mesh 3^-5: 8 support pieces, gap interiors massless
        mu = cantor(F(1, 2), F(1, 2), 3)
        fem = fem_oracle(mu, 3.0 ** -5, 3, "neumann")
        table = build_table(mu, 2)
        recs = find_eigenvalues(table, "neumann", 3)
        for f, r in zip(fem[1:], recs[1:]):
            assert f == pytest.approx(r.lam, rel=2e-3)

    def test_misaligned_mesh_rejected(self):
        mu = cantor(F(1, 2), F(1, 2), 1)
        with pytest.raises(ConfigError):
            fem_oracle(mu, 1.0 / 100, 2, "neumann")
        with pytest.raises(ConfigError):
            fem_oracle(mu, 0.31, 2, "neumann")

    def test_count_exceeding_dofs_rejected(self):
        with pytest.raises(ConfigError):
            fem_oracle(LEBESGUE, 1.0 / 3, 10, "dirichlet")


class TestErrorPaths:
    def test_scan_ceiling_reports_found(self, leb_table):
        with pytest.raises(BracketError) as exc:
            find_eigenvalues(leb_table, "dirichlet", 5, scan_ceiling=7.0)
        assert exc.value.found == 2  # pi and 2*pi lie below 7

    def test_bad_boundary(self, leb_table):
        with pytest.raises(DomainError):
            find_eigenvalues(leb_table, "periodic", 2)

    def test_bad_count_and_tol(self, leb_table):
        with pytest.raises(ConfigError):
            find_eigenvalues(leb_table, "neumann", 0)
        with pytest.raises(ConfigError):
            find_eigenvalues(leb_table, "neumann", 2, tol=1.0)
        with pytest.raises(ConfigError):
            find_eigenvalues(leb_table, "neumann", 2, tol=0.0)

    def test_norm_identity_rejects_non_roots(self, leb_table):
        rec = find_eigenvalues(leb_table, "neumann", 2)[1]
        # on the gapped measure the boundary product dips clearly negative
        mu = cantor(F(1, 2), F(1, 2), 1)
        fake = type(rec)(
            index=1,
            boundary="neumann",
            z=5.0,
            lam=25.0,
            bracket_lo=4.9,
            bracket_hi=5.1,
            residual=0.0,
            error_bound=0.1,
        )
        ef = eigenfunction(mu, fake)
        with pytest.raises(PrecisionError):
            eigenfunction_l2_norm(ef)


class TestCsvRows:
    def test_rows_round_trip(self, leb_table):
        recs = find_eigenvalues(leb_table, "neumann", 3)
        rows = records_to_rows(recs)
        assert rows[0] == CSV_HEADER
        assert len(rows) == 4
        for row, rec in zip(rows[1:], recs):
            assert row[0] == "neumann"
            assert int(row[1]) == rec.index
            assert float(row[2]) == rec.z
            assert float(row[3]) == rec.lam
            assert float(row[6]) == rec.residual
            assert float(row[7]) == rec.error_bound


@settings(max_examples=12, deadline=None)
@given(weight_vectors())
def test_random_weights_certified_roots(w):
    mu = cantor_approximant(CantorLevel(w, 1))
    table = build_table(mu, 4)
    for boundary in ("neumann", "dirichlet"):
        recs = find_eigenvalues(table, boundary, 3)
        zs = [r.z for r in recs]
        assert all(b > a for a, b in zip(zs, zs[1:]))
        for rec in recs:
            if rec.index == 0 and boundary == "neumann":
                continue
            assert rec.residual <= rec.error_bound + 1e-12
            ef = eigenfunction(mu, rec)
            assert eigenfunction_l2_norm(ef) > 0.0
