"""Eigenvalues and eigenfunctions of the second-order operator attached to a measure.

Neumann eigenvalues are squares of the zeros of the boundary value of the odd
cosine-family solution's companion (``sinp``); Dirichlet eigenvalues are squares
of the positive zeros of ``sinq``.  Both boundary values are evaluated through
the exact piecewise closed form in :mod:`kreinfeller.propagation`, so the only
evaluation error is accumulated rounding, reported per point.

The scan-and-refine strategy:

* march upward in ``z`` with step ``(pi/4) / max(1, q2(1) * z)``,
* halve the step whenever the boundary value dips under ten times its rounding
  estimate without a sign change (guards against stepping over a close pair,
  which cannot happen for simple zeros but costs little to rule out),
* refine each certified sign change with Brent's method,
* re-certify a tight bracket around the refined root whose endpoint values
  exceed their rounding estimates with opposite signs.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BracketError, ConfigError, DomainError, InconsistencyError, PrecisionError
from .measures import Measure
from .propagation import boundary_values, eval_on_grid
from .series import TrigTable

NEUMANN = "neumann"
DIRICHLET = "dirichlet"
_BOUNDARIES = (NEUMANN, DIRICHLET)

CSV_HEADER = (
    "boundary",
    "m",
    "z",
    "lambda",
    "bracket_lo",
    "bracket_hi",
    "residual",
    "error_bound",
)

_DEFAULT_CEILING = 500.0


def _check_boundary(boundary: str) -> str:
    if boundary not in _BOUNDARIES:
        raise DomainError(f"boundary must be one of {_BOUNDARIES}, got {boundary!r}")
    return boundary


@dataclass(frozen=True)
class EigenvalueRecord:
    """One certified eigenvalue.

    ``error_bound`` is the certified bracket width plus the evaluation error
    estimate at the root — an honest interval radius for ``z``, not a formal
    proof of ``lambda``'s last digit.
    """

    index: int
    boundary: str
    z: float
    lam: float
    bracket_lo: float
    bracket_hi: float
    residual: float
    error_bound: float

    def csv_row(self) -> tuple[str, ...]:
        return (
            self.boundary,
            str(self.index),
            _fmt(self.z),
            _fmt(self.lam),
            _fmt(self.bracket_lo),
            _fmt(self.bracket_hi),
            _fmt(self.residual),
            _fmt(self.error_bound),
        )


def _fmt(x: float) -> str:
    return format(x, ".17g")


def records_to_rows(records: Iterable[EigenvalueRecord]) -> list[tuple[str, ...]]:
    """Header row plus one row per record, every float at 17 significant digits."""
    return [CSV_HEADER] + [r.csv_row() for r in records]


@dataclass(frozen=True)
class Eigenfunction:
    """Eigenfunction attached to a certified eigenvalue record.

    Neumann eigenfunctions take the value 1 at x=0 (derivative 0 there);
    Dirichlet eigenfunctions vanish at x=0 and x=1.  Values come from the same
    closed-form propagation used for the root search, so evaluating the
    eigenfunction and locating its eigenvalue cannot silently disagree.
    """

    measure: Measure
    record: EigenvalueRecord

    @property
    def boundary(self) -> str:
        return self.record.boundary

    @property
    def index(self) -> int:
        return self.record.index

    def family(self) -> str:
        return "cp" if self.record.boundary == NEUMANN else "sq"


def _boundary_value_fn(mu: Measure, boundary: str) -> Callable[[float], tuple[float, float, float]]:
    """Return z -> (boundary value, rounding estimate, z-derivative of the value)."""

    if boundary == NEUMANN:
        def fn(z: float) -> tuple[float, float, float]:
            r = boundary_values(mu, z)
            return r.sp, r.err_est, r.sp_prime
    else:
        def fn(z: float) -> tuple[float, float, float]:
            r = boundary_values(mu, z)
            return r.sq, r.err_est, r.sq_prime
    return fn


def _scan_step(z: float, q2_one: float) -> float:
    return (math.pi / 4.0) / max(1.0, q2_one * z)


def _certify_bracket(
    fn: Callable[[float], tuple[float, float, float]],
    z_root: float,
    lo0: float,
    hi0: float,
) -> tuple[float, float]:
    """Shrink (lo0, hi0) around z_root keeping a certified sign change.

    Certified means each endpoint value exceeds its own rounding estimate, so
    the sign is unambiguous even after widening the value by that estimate.
    """
    delta = max(1e-14 * max(1.0, z_root), 4.0 * math.ulp(z_root))
    best = (lo0, hi0)
    while delta < (hi0 - lo0) / 2.0:
        lo = max(lo0, z_root - delta)
        hi = min(hi0, z_root + delta)
        v_lo, e_lo, _ = fn(lo)
        v_hi, e_hi, _ = fn(hi)
        if v_lo * v_hi < 0.0 and abs(v_lo) > e_lo and abs(v_hi) > e_hi:
            return lo, hi
        delta *= 4.0
    # fall back to the scan bracket, which already carried a raw sign change
    return best


def find_eigenvalues(
    table: TrigTable,
    boundary: str,
    count: int,
    tol: float = 1e-12,
    scan_ceiling: float = _DEFAULT_CEILING,
) -> list[EigenvalueRecord]:
    """First ``count`` eigenvalue records, sorted increasingly.

    For Neumann the list starts with the exact record (index 0, lambda 0);
    positive roots then fill indices 1..count-1.  For Dirichlet indices run
    1..count.  Raises :class:`BracketError` carrying the number of roots found
    if the scan hits ``scan_ceiling`` first.
    """
    _check_boundary(boundary)
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if not (0.0 < tol <= 1e-2):
        raise ConfigError(f"tol must lie in (0, 1e-2], got {tol}")

    mu = table.measure
    q2_one = float(table.q2_at_one)
    fn = _boundary_value_fn(mu, boundary)

    records: list[EigenvalueRecord] = []
    if boundary == NEUMANN:
        records.append(EigenvalueRecord(0, NEUMANN, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    needed = count - len(records)
    if needed <= 0:
        return records[:count]

    roots = _scan_positive_roots(fn, q2_one, needed, tol, scan_ceiling)
    start_index = 1
    for k, (z_root, lo, hi, residual, err_est) in enumerate(roots):
        records.append(
            EigenvalueRecord(
                index=start_index + k,
                boundary=boundary,
                z=z_root,
                lam=z_root * z_root,
                bracket_lo=lo,
                bracket_hi=hi,
                residual=residual,
                error_bound=(hi - lo) + err_est,
            )
        )
    zs = [r.z for r in records]
    if any(b <= a for a, b in zip(zs, zs[1:])):
        raise InconsistencyError("root sequence is not strictly increasing")
    return records


def _scan_positive_roots(
    fn: Callable[[float], tuple[float, float, PropagationResult]],
    q2_one: float,
    needed: int,
    tol: float,
    scan_ceiling: float,
) -> list[tuple[float, float, float, float, float]]:
    from scipy.optimize import brentq

    roots: list[tuple[float, float, float, float, float]] = []

    # Establish a strictly positive anchor just right of the trivial zero at 0.
    z_lo = min(0.25 * _scan_step(0.0, q2_one), 0.1)
    v_lo, e_lo, _ = fn(z_lo)
    shrink = 0
    while v_lo <= 10.0 * e_lo and shrink < 60:
        z_lo *= 0.5
        v_lo, e_lo, _ = fn(z_lo)
        shrink += 1
    if v_lo <= 0.0:
        raise PrecisionError("could not certify a positive boundary value near z=0")

    step = _scan_step(z_lo, q2_one)
    halvings = 0
    while len(roots) < needed:
        if z_lo >= scan_ceiling:
            raise BracketError(
                f"scan ceiling {scan_ceiling:g} reached with {len(roots)} of "
                f"{needed} positive roots bracketed",
                found=len(roots),
            )
        z_hi = min(z_lo + step, scan_ceiling)
        v_hi, e_hi, _ = fn(z_hi)

        if v_lo * v_hi < 0.0:
            if abs(v_hi) <= e_hi:
                # sign uncertain at the far end: tighten before accepting
                step *= 0.5
                halvings += 1
                if step < 1e-13 * max(1.0, z_lo):
                    raise PrecisionError(
                        f"cannot certify endpoint sign near z={z_hi:.6g}"
                    )
                continue
            roots.append(_refine_root(fn, brentq, z_lo, z_hi, tol))
            z_lo, v_lo, e_lo = z_hi, v_hi, e_hi
            step = _scan_step(z_lo, q2_one)
            halvings = 0
            continue

        if abs(v_hi) < 10.0 * e_hi:
            # grazing pass near a root without an observed crossing
            step *= 0.5
            halvings += 1
            if halvings > 80:
                raise PrecisionError(
                    f"boundary value stays below 10x its rounding estimate near "
                    f"z={z_hi:.6g} without a sign change; root multiplicity "
                    "cannot be resolved at this precision"
                )
            continue

        z_lo, v_lo, e_lo = z_hi, v_hi, e_hi
        step = _scan_step(z_lo, q2_one)
        halvings = 0

    return roots


def _refine_root(fn, brentq, lo, hi, tol):
    z_root = brentq(
        lambda z: fn(z)[0],
        lo,
        hi,
        xtol=max(tol, 1e-15),
        rtol=8.9e-16,
        maxiter=200,
    )
    v_root, e_root, deriv = fn(z_root)
    # Newton polish: brentq stops at xtol, the derivative is available for free
    for _ in range(3):
        if deriv == 0.0 or not (abs(v_root) > e_root):
            break
        z_try = z_root - v_root / deriv
        if not (lo < z_try < hi):
            break
        v_try, e_try, d_try = fn(z_try)
        if abs(v_try) >= abs(v_root):
            break
        z_root, v_root, e_root, deriv = z_try, v_try, e_try, d_try
    residual = abs(v_root)
    c_lo, c_hi = _certify_bracket(fn, z_root, lo, hi)
    # simple-zero check: the z-derivative must clear the rounding noise floor
    if abs(deriv) <= 10.0 * e_root:
        raise PrecisionError(
            f"z-derivative {deriv:.3e} at root z={z_root:.6g} is not separated "
            "from rounding noise; simple-zero certification failed"
        )
    return z_root, c_lo, c_hi, residual, e_root


def eigenfunction(measure: Measure, record: EigenvalueRecord) -> Eigenfunction:
    if record.boundary not in _BOUNDARIES:
        raise DomainError(f"record has unknown boundary {record.boundary!r}")
    return Eigenfunction(measure=measure, record=record)


def eigenfunction_eval(
    ef: Eigenfunction,
    xs: Sequence[float] | np.ndarray,
    normalized: bool = False,
) -> np.ndarray:
    """Eigenfunction values on ``xs`` (each in [0,1]).

    ``normalized=True`` rescales so the L2 norm against the measure equals 1;
    the sign convention keeps the value (Neumann) or slope (Dirichlet) at x=0
    positive.
    """
    vals = eval_on_grid(ef.measure, ef.record.z, xs, ef.family())
    if normalized:
        vals = vals / eigenfunction_l2_norm(ef)
    return vals


def eigenfunction_l2_norm(ef: Eigenfunction) -> float:
    """L2(measure) norm via the closed-form boundary identity.

    The squared norm equals half the product of the companion boundary value
    and the z-derivative of the vanishing boundary value:

    * Neumann, index >= 1:  0.5 * cp(z, 1) * d/dz sp(z, 1)
    * Dirichlet:            0.5 * cq(z, 1) * d/dz sq(z, 1)

    Neumann index 0 is the constant function 1, whose norm is 1 for a
    probability measure.  A nonpositive product beyond rounding tolerance means
    z is not actually a root and is reported as an inconsistency.
    """
    rec = ef.record
    if rec.boundary == NEUMANN and rec.index == 0:
        return 1.0
    r = boundary_values(ef.measure, rec.z)
    if rec.boundary == NEUMANN:
        product = r.cp * r.sp_prime
    else:
        product = r.cq * r.sq_prime
    noise = 10.0 * r.err_est * (1.0 + abs(rec.z))
    if product <= 0.0:
        if abs(product) > noise:
            raise InconsistencyError(
                f"norm identity product {product:.3e} is negative beyond the "
                f"rounding allowance {noise:.3e}; z={rec.z!r} is not a certified root"
            )
        raise PrecisionError(
            f"norm identity product {product:.3e} is indistinguishable from zero"
        )
    return math.sqrt(0.5 * product)


def count_zeros(ef: Eigenfunction, min_samples: int = 64) -> int:
    """Number of zeros: Neumann counts sign changes strictly inside (0,1);
    Dirichlet counts interior sign changes plus the two boundary zeros.

    Sampling is dense enough to resolve every crossing: on a piece with
    constant density d the function is a sinusoid of wavenumber z*sqrt(d), so
    spacing below a quarter of its half-period pins each crossing between two
    samples of opposite sign.  The count is accepted only after it is stable
    under one refinement; an unstable or sign-ambiguous count raises.
    """
    rec = ef.record
    if rec.boundary == NEUMANN and rec.index == 0:
        return 0
    z = rec.z
    factor = 1
    prev = None
    for _ in range(4):
        xs = _zero_count_grid(ef.measure, z, min_samples * factor)
        vals = eval_on_grid(ef.measure, z, xs, ef.family())
        n = _stable_sign_changes(ef, xs, vals)
        if n is not None and n == prev:
            return n + (2 if rec.boundary == DIRICHLET else 0)
        prev = n
        factor *= 2
    raise PrecisionError(
        f"zero count did not stabilize for index {rec.index} ({rec.boundary})"
    )


def _zero_count_grid(mu: Measure, z: float, min_samples: int) -> np.ndarray:
    pts = [0.0]
    bps = [float(b) for b in mu.breakpoints]
    dens = [float(d) for d in mu.densities]
    for a, b, d in zip(bps, bps[1:], dens):
        length = b - a
        if d > 0.0 and z > 0.0:
            k = z * math.sqrt(d)
            per = max(4, int(math.ceil(length * k / (math.pi / 4.0))) + 4)
        else:
            per = 4
        per = max(per, int(math.ceil(min_samples * length)) + 2)
        step = length / per
        pts.extend(a + j * step for j in range(1, per))
        pts.append(b)
    return np.asarray(pts)


def _stable_sign_changes(ef: Eigenfunction, xs: np.ndarray, vals: np.ndarray) -> int | None:
    # drop the exact endpoint zeros for Dirichlet; they are counted separately
    if ef.record.boundary == DIRICHLET:
        xs, vals = xs[1:-1], vals[1:-1]
    amp = float(np.max(np.abs(vals)))
    floor = 1e-11 * max(amp, 1.0)
    signs = np.sign(vals)
    ambiguous = np.abs(vals) < floor
    if ambiguous.any():
        # a sample sitting on a zero: neighbours must straddle it
        idx = np.nonzero(ambiguous)[0]
        for i in idx:
            if 0 < i < len(vals) - 1 and signs[i - 1] * signs[i + 1] > 0:
                return None
        keep = ~ambiguous
        signs = signs[keep]
    flips = int(np.sum(signs[1:] * signs[:-1] < 0))
    return flips


def fem_oracle(
    mu: Measure,
    mesh_size: float,
    count: int,
    boundary: str,
) -> list[float]:
    """Independent finite-element eigenvalues (piecewise-linear elements).

    The uniform mesh of width ``mesh_size`` must place a node on every
    breakpoint of the measure so element densities are constant and element
    mass integrals are exact.  Nodes whose adjacent elements all carry zero
    density contribute no mass; they are eliminated exactly by static
    condensation before the generalized symmetric solve.  Each eigenvalue is
    polished with one Rayleigh-quotient evaluation of its eigenvector.
    """
    _check_boundary(boundary)
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    n = int(round(1.0 / mesh_size))
    if n < 2 or abs(n * mesh_size - 1.0) > 1e-9:
        raise ConfigError(f"mesh_size {mesh_size!r} does not tile [0,1] evenly")
    for b in mu.breakpoints:
        node = float(b) * n
        if abs(node - round(node)) > 1e-9:
            raise ConfigError(
                f"breakpoint {float(b):.6g} is not a mesh node at mesh_size={mesh_size!r}; "
                "align the mesh with the measure's pieces"
            )

    import scipy.linalg

    h = 1.0 / n
    dens = _element_densities(mu, n)

    size = n + 1
    stiff = np.zeros((size, size))
    mass = np.zeros((size, size))
    for e in range(n):
        k_loc = (1.0 / h) * np.array([[1.0, -1.0], [-1.0, 1.0]])
        m_loc = dens[e] * h * np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
        sl = slice(e, e + 2)
        stiff[sl, sl] += k_loc
        mass[sl, sl] += m_loc

    if boundary == DIRICHLET:
        keep = np.arange(1, n)
    else:
        keep = np.arange(0, n + 1)
    stiff = stiff[np.ix_(keep, keep)]
    mass = mass[np.ix_(keep, keep)]

    massless = np.abs(np.diag(mass)) == 0.0
    if massless.any():
        stiff, mass = _condense(stiff, mass, massless)
    if np.any(np.diag(mass) <= 0.0):
        raise PrecisionError("mass matrix is singular on the support; refine the mesh")

    if count > stiff.shape[0]:
        raise ConfigError(
            f"requested {count} eigenvalues but the condensed system has only "
            f"{stiff.shape[0]} degrees of freedom; refine the mesh"
        )

    stiff = 0.5 * (stiff + stiff.T)
    mass = 0.5 * (mass + mass.T)
    vals, vecs = scipy.linalg.eigh(stiff, mass, subset_by_index=[0, count - 1])

    polished = []
    for j in range(count):
        u = vecs[:, j]
        num = float(u @ stiff @ u)
        den = float(u @ mass @ u)
        polished.append(num / den)
    polished.sort()
    return polished


def _element_densities(mu: Measure, n: int) -> np.ndarray:
    bps = [float(b) for b in mu.breakpoints]
    dens = [float(d) for d in mu.densities]
    out = np.empty(n)
    for e in range(n):
        mid = (e + 0.5) / n
        i = bisect_right(bps, mid) - 1
        i = min(max(i, 0), len(dens) - 1)
        out[e] = dens[i]
    return out


def _condense(stiff: np.ndarray, mass: np.ndarray, massless: np.ndarray):
    """Eliminate zero-mass rows exactly: u_g = -K_gg^{-1} K_gm u_m."""
    import scipy.linalg

    g = np.nonzero(massless)[0]
    m = np.nonzero(~massless)[0]
    k_gg = stiff[np.ix_(g, g)]
    k_gm = stiff[np.ix_(g, m)]
    k_mm = stiff[np.ix_(m, m)]
    try:
        sol = scipy.linalg.solve(k_gg, k_gm, assume_a="pos")
    except scipy.linalg.LinAlgError as exc:
        raise PrecisionError(f"static condensation failed: {exc}") from exc
    k_red = k_mm - k_gm.T @ sol
    m_red = mass[np.ix_(m, m)]
    return k_red, m_red
