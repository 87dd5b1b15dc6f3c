"""Measure trigonometric series: coefficient tables and certified evaluation.

For a measure mu the coefficient functions are iterated integrals

    p_0 = 1,  p_n = integral of p_{n-1} against dmu (n odd) or dt (n even)
    q_0 = 1,  q_n = integral of q_{n-1} against dt  (n odd) or dmu (n even)

and the four trig-like functions are the alternating power series

    sp_z(x) = sum (-1)^n z^(2n+1) p_{2n+1}(x)     cp_z(x) = sum (-1)^n z^(2n) p_{2n}(x)
    sq_z(x) = sum (-1)^n z^(2n+1) q_{2n+1}(x)     cq_z(x) = sum (-1)^n z^(2n) q_{2n}(x)

For Lebesgue measure p_n(1) = q_n(1) = 1/n! and the series collapse to
sin and cos.  Coefficients obey the factorial bounds

    p_{2n+1}(x) <= q_2(x)^n/n!,   p_{2n}(x) <= p_2(x)^n/n!,
    q_{2n+1}(x) <= p_2(x)^n/n!,   q_{2n}(x) <= q_2(x)^n/n!,

which give every truncated evaluation a certified tail bound.  Partial
sums are accumulated with math.fsum in fixed ascending order, so the
only float error is per-term representation noise; certificates cover
truncation only.  All coefficients are nonnegative, so table builds
involve no cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, OrderError
from .measures import Measure
from .polyalg import PiecewisePolynomial, integrate_dmu, integrate_dt

TAIL_TARGET = 1e-15
_LOG_HUGE = 700.0


@dataclass(frozen=True)
class TruncationCertificate:
    """Certified bound on the dropped tail of a truncated series evaluation."""

    z: float
    order: int
    tail_bound: float


@dataclass(frozen=True)
class TrigTable:
    """Coefficient functions p_0..p_{2N+1}, q_0..q_{2N+1} for one measure."""

    measure: Measure
    order: int
    p_fun: tuple[PiecewisePolynomial, ...]
    q_fun: tuple[PiecewisePolynomial, ...]
    p_one: tuple[float, ...]
    q_one: tuple[float, ...]

    @property
    def p2_at_one(self) -> float:
        return self.p_one[2]

    @property
    def q2_at_one(self) -> float:
        return self.q_one[2]


def build_table(mu: Measure, order: int) -> TrigTable:
    """Build coefficient tables up to index 2*order + 1."""
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    cap = 2 * order + 2
    one = PiecewisePolynomial.constant(1.0, mu.breakpoints, degree_cap=cap)
    p = [one]
    q = [one]
    for n in range(1, 2 * order + 2):
        if n % 2 == 1:
            p.append(integrate_dmu(p[-1], mu))
            q.append(integrate_dt(q[-1]))
        else:
            p.append(integrate_dt(p[-1]))
            q.append(integrate_dmu(q[-1], mu))
    return TrigTable(
        measure=mu,
        order=order,
        p_fun=tuple(p),
        q_fun=tuple(q),
        p_one=tuple(f.value_at_one() for f in p),
        q_one=tuple(f.value_at_one() for f in q),
    )


def default_order(z_max: float) -> int:
    """Smallest N with z_max^(2N+3)/(N+1)! below 1e-15 (worst case q_2 <= 1)."""
    za = abs(z_max)
    if za <= 1.0:
        return 1
    lz = math.log(za)
    n = 1
    while (2 * n + 3) * lz - math.lgamma(n + 2) >= math.log(TAIL_TARGET):
        n += 1
        if n > 1_000_000:
            raise OrderError("no feasible truncation order for this z range", n)
    return n


# ---------------------------------------------------------------------------
# tail bounds


def _factorial_tail(r: float, start: int, deriv_weight: int = 0) -> float:
    """Upper bound on sum_{n >= start} w(n) * r^n / n!.

    w(n) = 1, or (2n+1) for odd-family derivatives (deriv_weight=1), or
    2n for even-family derivatives (deriv_weight=2).  Walks terms in log
    space and closes with a geometric majorant once the term ratio drops
    below 1/2.
    """
    if r <= 0.0:
        return 0.0
    log_r = math.log(r)
    total = 0.0
    n = start
    while True:
        log_t = n * log_r - math.lgamma(n + 1)
        if deriv_weight == 1:
            log_t += math.log(2 * n + 1)
        elif deriv_weight == 2 and n > 0:
            log_t += math.log(2 * n)
        if log_t > _LOG_HUGE:
            return math.inf
        term = math.exp(log_t)
        # ratio of consecutive terms, including the polynomial weight
        ratio = r / (n + 1)
        if deriv_weight:
            ratio *= (2 * n + 3) / max(2 * n + 1, 1)
        if ratio < 0.5:
            return total + term * (1.0 + ratio / (1.0 - ratio))
        total += term
        n += 1
        if n > start + 100_000:
            return math.inf


def _require_tol(tail: float, tol: float | None, z: float, r_unit: float,
                 order: int, prefactor: float, deriv_weight: int) -> None:
    if tol is None or tail <= tol:
        return
    n = order + 1
    while n < order + 200_000:
        t = prefactor * _factorial_tail(r_unit, n + 1, deriv_weight)
        if t <= tol:
            # minimal sufficient order, found by the ascending walk
            raise OrderError(
                f"tail bound {tail:.3e} exceeds tolerance {tol:.3e} at order {order}; "
                f"increase order to {n}", n)
        n += 1
    raise OrderError(
        f"tolerance {tol:.3e} unreachable in float range for z={z}", n)


def _sum_terms(one_vals, z: float, odd: bool, order: int) -> float:
    """Partial sum of the alternating series, fixed ascending order.

    Terms are z^(2n+odd) * coeff; the power is taken through math.pow
    while it stays in range and through a scaled mantissa/exponent
    product beyond that (where genuine terms are already negligible).
    """
    terms = []
    z2 = z * z
    abs_z = abs(z)
    log_z = math.log(abs_z) if abs_z > 0 else -math.inf
    m, e = (z if odd else 1.0), 0
    for n in range(order + 1):
        k = 2 * n + 1 if odd else 2 * n
        coeff = one_vals[k]
        exponent_log = k * log_z if abs_z > 0 else (0.0 if k == 0 else -math.inf)
        if exponent_log < _LOG_HUGE:
            power = abs_z**k if abs_z > 0 else (0.0 if k else 1.0)
            if odd and z < 0:
                power = -power
            term = power * coeff
        else:
            term = math.ldexp(m * coeff, e)
        terms.append(term if n % 2 == 0 else -term)
        m *= z2
        m, de = math.frexp(m)
        e += de
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# the four functions and their z-derivatives


def _eval(table: TrigTable, z: float, odd: bool, one_vals, bound_base: float,
          tol: float | None) -> tuple[float, TruncationCertificate]:
    r = z * z * bound_base
    prefactor = abs(z) if odd else 1.0
    tail = prefactor * _factorial_tail(r, table.order + 1)
    _require_tol(tail, tol, z, r, table.order, prefactor, 0)
    value = _sum_terms(one_vals, z, odd, table.order)
    return value, TruncationCertificate(z, table.order, tail)


def sinp(table: TrigTable, z: float, tol: float | None = None):
    return _eval(table, z, True, table.p_one, table.q2_at_one, tol)


def sinq(table: TrigTable, z: float, tol: float | None = None):
    return _eval(table, z, True, table.q_one, table.p2_at_one, tol)


def cosp(table: TrigTable, z: float, tol: float | None = None):
    return _eval(table, z, False, table.p_one, table.p2_at_one, tol)


def cosq(table: TrigTable, z: float, tol: float | None = None):
    return _eval(table, z, False, table.q_one, table.q2_at_one, tol)


def _pow(z: float, k: int) -> float | None:
    """z**k, or None when it would overflow (terms there are negligible)."""
    if k == 0:
        return 1.0
    if z == 0.0:
        return 0.0
    if k * math.log(abs(z)) >= _LOG_HUGE:
        return None
    return z**k


def _eval_prime(table: TrigTable, z: float, odd: bool, one_vals, bound_base: float,
                tol: float | None) -> tuple[float, TruncationCertificate]:
    """Termwise z-derivative of the truncated series.

    Odd family: sum (-1)^n (2n+1) z^(2n) coeff_{2n+1}; valid everywhere,
    not only at zeros (the k=0 term does not drop).
    Even family: sum (-1)^n (2n) z^(2n-1) coeff_{2n}.
    """
    N = table.order
    terms = []
    if odd:
        for n in range(N + 1):
            p = _pow(z, 2 * n)
            t = (2 * n + 1) * p * one_vals[2 * n + 1] if p is not None else 0.0
            terms.append(t if n % 2 == 0 else -t)
        r = z * z * bound_base
        tail = _factorial_tail(r, N + 1, deriv_weight=1)
        _require_tol(tail, tol, z, r, N, 1.0, 1)
    else:
        for n in range(1, N + 1):
            p = _pow(z, 2 * n - 1)
            t = (2 * n) * p * one_vals[2 * n] if p is not None else 0.0
            terms.append(-t if n % 2 == 1 else t)
        r = z * z * bound_base
        tail = (_factorial_tail(r, N + 1, deriv_weight=2) / abs(z)) if z != 0.0 else 0.0
        _require_tol(tail, tol, z, r, N, 1.0 / abs(z) if z else 1.0, 2)
    return math.fsum(terms), TruncationCertificate(z, N, tail)


def sinp_prime(table: TrigTable, z: float, tol: float | None = None):
    return _eval_prime(table, z, True, table.p_one, table.q2_at_one, tol)


def sinq_prime(table: TrigTable, z: float, tol: float | None = None):
    return _eval_prime(table, z, True, table.q_one, table.p2_at_one, tol)


def cosp_prime(table: TrigTable, z: float, tol: float | None = None):
    return _eval_prime(table, z, False, table.p_one, table.p2_at_one, tol)


def cosq_prime(table: TrigTable, z: float, tol: float | None = None):
    return _eval_prime(table, z, False, table.q_one, table.q2_at_one, tol)


def sinp_prime_at_zero_form(table: TrigTable, z: float) -> float:
    """The reduced derivative expression valid only where sinp(z) = 0.

    At a zero of sinp, sum (-1)^n z^(2n+1) p_{2n+1}(1) = 0 allows dropping
    the n=0 part of each term weight: sum (-1)^n 2n z^(2n) p_{2n+1}(1).
    Kept for cross-checking against the full derivative at eigenvalues.
    """
    terms = []
    for n in range(table.order + 1):
        p = _pow(z, 2 * n)
        t = (2 * n) * p * table.p_one[2 * n + 1] if p is not None else 0.0
        terms.append(t if n % 2 == 0 else -t)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# x-dependent evaluation


def _eval_at_x(table: TrigTable, z: float, x: float, odd: bool, funs,
               bound_fun: PiecewisePolynomial, tol: float | None):
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"evaluation point {x} outside [0,1]")
    N = table.order
    terms = []
    for n in range(N + 1):
        k = 2 * n + 1 if odd else 2 * n
        p = _pow(z, k)
        t = p * funs[k].eval(x) if p is not None else 0.0
        terms.append(t if n % 2 == 0 else -t)
    r = z * z * bound_fun.eval(x)
    prefactor = abs(z) if odd else 1.0
    tail = prefactor * _factorial_tail(r, N + 1)
    _require_tol(tail, tol, z, r, N, prefactor, 0)
    return math.fsum(terms), TruncationCertificate(z, N, tail)


def cp_eval(table: TrigTable, z: float, x: float, tol: float | None = None):
    """cp_z(x): the Neumann eigenfunction series when z^2 is an eigenvalue."""
    return _eval_at_x(table, z, x, False, table.p_fun, table.p_fun[2], tol)


def sq_eval(table: TrigTable, z: float, x: float, tol: float | None = None):
    """sq_z(x): the Dirichlet eigenfunction series when z^2 is an eigenvalue."""
    return _eval_at_x(table, z, x, True, table.q_fun, table.p_fun[2], tol)


def sp_eval(table: TrigTable, z: float, x: float, tol: float | None = None):
    return _eval_at_x(table, z, x, True, table.p_fun, table.q_fun[2], tol)


def cq_eval(table: TrigTable, z: float, x: float, tol: float | None = None):
    return _eval_at_x(table, z, x, False, table.q_fun, table.q_fun[2], tol)


# ---------------------------------------------------------------------------
# Cauchy-product null sums
#
# If lam = z^2 is a zero of sinp then  cp_z(1) * sp_z(1) = 0, and expanding
# the product of the two series gives alternating null sums over the
# convolution coefficients sum_k p_{2k} p_{2(n-k)+1}; the same holds with
# the extra 2k weight (from differentiating the product).  Truncations of
# both must vanish up to a certified tail.


def null_sum_plain(table: TrigTable, lam: float) -> tuple[float, float]:
    return _null_sum(table, lam, weighted=False)


def null_sum_weighted(table: TrigTable, lam: float) -> tuple[float, float]:
    return _null_sum(table, lam, weighted=True)


def _null_sum(table: TrigTable, lam: float, weighted: bool) -> tuple[float, float]:
    """Returns (truncated sum, certified tail bound).

    The inner Cauchy coefficient sum_k w(k) p_{2k}(1) p_{2(n-k)+1}(1) is
    bounded by w_max(n) (p_2 + q_2)^n / n! via the binomial theorem, so
    the dropped terms carry a factorial tail in lam * (p_2 + q_2).
    """
    N = table.order
    p1 = table.p_one
    log_lam = math.log(lam) if lam > 0 else -math.inf
    terms = []
    for n in range(N + 1):
        inner = math.fsum(
            (2 * k if weighted else 1.0) * p1[2 * k] * p1[2 * (n - k) + 1]
            for k in range(n + 1)
        )
        t = lam**n * inner if (n == 0 or n * log_lam < _LOG_HUGE) else 0.0
        terms.append(t if n % 2 == 0 else -t)
    r = lam * (table.p2_at_one + table.q2_at_one)
    tail = _factorial_tail(r, N + 1, deriv_weight=2 if weighted else 0)
    return math.fsum(terms), tail
