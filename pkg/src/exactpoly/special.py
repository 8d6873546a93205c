"""Arbitrary-precision scalars and special functions for the expansion formulas.

Values are mpmath ``mpf`` (real) or pairs of ``mpf`` (complex) numbers. Every
public function takes the target precision as an explicit ``digits`` argument,
computes internally with ``digits + GUARD_DIGITS`` decimal digits, and rounds
the result back to ``digits`` on return. Results are faithfully rounded at the
requested precision; combining values produced at different ``digits`` is
accurate to the largest of them.

All series share one termination rule: stop once 20 consecutive terms fall
below 1e-(digits+10) relative to the accumulated sum. The 20-term run guards
against alternating series whose individual terms momentarily dip near zero.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from mpmath import mp, mpf, mpc

GUARD_DIGITS = 15

_SERIES_ITERATION_CAP = 10_000_000
_CONSECUTIVE_SMALL_TERMS = 20


class DomainError(ValueError):
    """Argument outside the mathematical domain of the function."""


class DivergenceError(ValueError):
    """Series argument outside its disc of convergence."""


class SeriesConvergenceError(ArithmeticError):
    """Series failed to meet the termination rule within the iteration cap."""


class QuadratureConvergenceError(ArithmeticError):
    """Quadrature failed to converge within the level cap."""


class PrecisionExhaustedError(ArithmeticError):
    """Cancellation consumed too much of the working precision."""


def working_precision(digits: int):
    """Context manager setting the internal working precision for ``digits``."""
    return mp.workdps(digits + GUARD_DIGITS)


def rounded(x, digits: int):
    """Round ``x`` to ``digits`` decimal digits of precision."""
    with mp.workdps(digits):
        return +x


def sum_series(terms: Iterator, digits: int):
    """Sum an iterator of mpf/mpc terms under the shared termination rule."""
    acc = next(terms)
    tol = mpf(10) ** (-(digits + 10))
    small = 0
    for iteration, term in enumerate(terms):
        acc += term
        if abs(term) <= tol * abs(acc):
            small += 1
            if small >= _CONSECUTIVE_SMALL_TERMS:
                return acc
        else:
            small = 0
        if iteration >= _SERIES_ITERATION_CAP:
            raise SeriesConvergenceError(
                f"series did not converge within {_SERIES_ITERATION_CAP} terms"
            )
    return acc


# ---------------------------------------------------------------------------
# Bernoulli numbers (exact rationals)

_bernoulli_values: list[Fraction] = []
_bernoulli_lock = threading.Lock()


def _bernoulli_sequence(n: int) -> list[Fraction]:
    # Akiyama-Tanigawa transform over exact rationals; the native convention
    # is B_1 = +1/2, flipped below to the B_1 = -1/2 convention.
    row: list[Fraction] = []
    out: list[Fraction] = []
    for m in range(n + 1):
        row.append(Fraction(1, m + 1))
        for j in range(m, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        out.append(row[0])
    if n >= 1:
        out[1] = Fraction(-1, 2)
    return out


def bernoulli(n: int) -> Fraction:
    """Exact Bernoulli number B_n under the convention B_1 = -1/2."""
    if n < 0:
        raise ValueError("Bernoulli index must be nonnegative")
    with _bernoulli_lock:
        global _bernoulli_values
        if n >= len(_bernoulli_values):
            # Rebuild past the request so nearby indices hit the cache.
            _bernoulli_values = _bernoulli_sequence(n + 8)
        return _bernoulli_values[n]


def zeta_even(n: int, digits: int):
    """Riemann zeta at a positive even integer, exactly via Bernoulli numbers."""
    if n < 2 or n % 2:
        raise ValueError("zeta_even requires an even integer >= 2")
    b = bernoulli(n)
    with working_precision(digits):
        half = n // 2
        value = (
            (-1) ** (half + 1)
            * (2 * mp.pi) ** n
            * mpf(b.numerator)
            / mpf(b.denominator)
            / (2 * mp.factorial(n))
        )
    return rounded(value, digits)


# ---------------------------------------------------------------------------
# Polylogarithms and Legendre's chi function

def polylog(s: int, x, digits: int):
    """Li_s(x) = sum_{k>=1} x^k / k^s for integer s >= 1, |x| < 1."""
    if s < 1:
        raise ValueError("polylog order must be a positive integer")
    with working_precision(digits):
        x = mpf(x)
        if abs(x) >= 1:
            raise DomainError("polylog requires |x| < 1")

        def gen():
            xpow = mpf(1)
            k = 0
            while True:
                k += 1
                xpow *= x
                yield xpow / k**s

        acc = sum_series(gen(), digits)
    return rounded(acc, digits)


def polylog_table(smax: int, x, digits: int) -> list:
    """[Li_1(x), ..., Li_smax(x)] in one pass over the shared power series."""
    if smax < 1:
        raise ValueError("polylog order must be a positive integer")
    with working_precision(digits):
        x = mpf(x)
        if abs(x) >= 1:
            raise DomainError("polylog requires |x| < 1")
        accs = [mpf(0)] * smax
        if x:
            # The s=1 term dominates all others at every k, so its smallness
            # relative to |x| (the first term's magnitude) bounds every tail.
            tol = mpf(10) ** (-(digits + 12)) * abs(x)
            xpow = mpf(1)
            small = 0
            for k in range(1, _SERIES_ITERATION_CAP):
                xpow *= x
                kpow = 1
                for i in range(smax):
                    kpow *= k
                    accs[i] += xpow / kpow
                if abs(xpow) / k <= tol:
                    small += 1
                    if small >= _CONSECUTIVE_SMALL_TERMS:
                        break
                else:
                    small = 0
            else:
                raise SeriesConvergenceError("polylog_table did not converge")
    return [rounded(a, digits) for a in accs]


def legendre_chi(s: int, z, digits: int):
    """chi_s(z) = (Li_s(z) - Li_s(-z)) / 2 for 0 <= z < 1."""
    with working_precision(digits):
        z = mpf(z)
        if not (0 <= z < 1):
            raise DomainError("legendre_chi requires 0 <= z < 1")
        value = (polylog(s, z, digits + 5) - polylog(s, -z, digits + 5)) / 2
    return rounded(value, digits)


def legendre_chi_table(smax: int, z, digits: int) -> list:
    """[chi_1(z), ..., chi_smax(z)] via two shared polylog passes."""
    with working_precision(digits):
        z = mpf(z)
        if not (0 <= z < 1):
            raise DomainError("legendre_chi requires 0 <= z < 1")
        pos = polylog_table(smax, z, digits + 5)
        neg = polylog_table(smax, -z, digits + 5)
        out = [(p - q) / 2 for p, q in zip(pos, neg)]
    return [rounded(v, digits) for v in out]


def legendre_chi_at_one(s: int, digits: int):
    """Limit of chi_s(z) as z -> 1^-: zeta(s) * (1 - 2^-s), for s >= 2."""
    if s < 2:
        raise DomainError("legendre_chi diverges at z=1 for s < 2")
    with working_precision(digits):
        if s % 2 == 0:
            zs = zeta_even(s, digits + 5)
        else:
            zs = mp.zeta(s)
        value = zs * (1 - mpf(2) ** (-s))
    return rounded(value, digits)


# ---------------------------------------------------------------------------
# Generalized hypergeometric series

_SUPPORTED_HYP_SIGNATURES = {(1, 2), (2, 1), (2, 3)}


def hypergeometric(p_params: Iterable, q_params: Iterable, z, digits: int):
    """pFq series for the signatures 1F2, 2F1 and 2F3 (real arguments).

    2F1 requires |z| < 1; no q-parameter may be a nonpositive integer.
    """
    ps = list(p_params)
    qs = list(q_params)
    if (len(ps), len(qs)) not in _SUPPORTED_HYP_SIGNATURES:
        raise ValueError(
            f"unsupported hypergeometric signature ({len(ps)}, {len(qs)})"
        )
    for q in qs:
        qf = float(q)
        if qf <= 0 and qf == int(qf):
            raise ValueError("q-parameters must not be nonpositive integers")
    with working_precision(digits):
        ps = [mpf(p) for p in ps]
        qs = [mpf(q) for q in qs]
        z = mpf(z)
        if (len(ps), len(qs)) == (2, 1) and abs(z) >= 1:
            raise DivergenceError("2F1 series requires |z| < 1")

        def gen():
            term = mpf(1)
            yield term
            k = 0
            while True:
                num = mpf(1)
                for p in ps:
                    num *= p + k
                den = mpf(k + 1)
                for q in qs:
                    den *= q + k
                term *= z * num / den
                yield term
                k += 1

        acc = sum_series(gen(), digits)
    return rounded(acc, digits)


def hyp2f1_ones(c_re, c_im, z, digits: int) -> tuple:
    """2F1(1, 1; c; z) with complex parameter c, as a pair (re, im).

    Complex arithmetic runs over pairs of working-precision reals; |z| < 1.
    """
    with working_precision(digits):
        c = mpc(mpf(c_re), mpf(c_im))
        z = mpf(z)
        if abs(z) >= 1:
            raise DivergenceError("2F1 series requires |z| < 1")

        def gen():
            term = mpc(1)
            yield term
            k = 0
            while True:
                term *= (k + 1) * z / (c + k)
                yield term
                k += 1

        acc = sum_series(gen(), digits)
        re, im = acc.real, acc.imag
    return rounded(re, digits), rounded(im, digits)


# ---------------------------------------------------------------------------
# Sine integral, factorial root

def sine_integral(x, digits: int):
    """Si(x) = integral_0^x sin(t)/t dt, odd in x, via the power series.

    The series terms grow to ~exp(|x|) before decaying, so the working
    precision is raised by ~0.45 digits per unit of |x| to absorb the
    cancellation.
    """
    xf = mpf(x)
    if xf < 0:
        return -sine_integral(-xf, digits)
    guard = GUARD_DIGITS + int(0.45 * float(xf))
    with mp.workdps(digits + guard):
        x = mpf(xf)
        if x == 0:
            return rounded(mpf(0), digits)

        def gen():
            term = +x
            yield term
            k = 0
            while True:
                term *= -x * x * (2 * k + 1) / ((2 * k + 2) * (2 * k + 3) ** 2)
                yield term
                k += 1

        acc = sum_series(gen(), digits)
    return rounded(acc, digits)


def factorial_root(n: int, digits: int):
    """(n!)^(1/n) via exp(sum(ln k)/n); the log-sum keeps n! out of range."""
    if n < 1:
        raise ValueError("factorial_root requires n >= 1")
    with working_precision(digits):
        total = mpf(0)
        for k in range(2, n + 1):
            total += mp.ln(k)
        value = mp.e ** (total / n)
    return rounded(value, digits)


# ---------------------------------------------------------------------------
# Tanh-sinh (double-exponential) quadrature

_ts_node_cache: dict = {}
_ts_node_lock = threading.Lock()


def _ts_nodes(level: int, dps: int) -> list:
    """Node increments for step h = 2^-level at working precision ``dps``.

    Returns tuples (p, q, w) for t > 0 where, with u = (pi/2)*sinh(t),
    p = (1+x)/2 and q = (1-x)/2 for x = tanh(u), computed directly from
    exponentials so the endpoint gaps stay accurate, and w is the
    per-node weight factor (pi/2)*cosh(t)*4*p*q (before the h and
    interval-length factors). Level 0 additionally starts with the t = 0
    node. Mirrored t < 0 nodes are the same tuples with p and q swapped.
    """
    key = (level, dps)
    cached = _ts_node_cache.get(key)
    if cached is not None:
        return cached
    with _ts_node_lock:
        cached = _ts_node_cache.get(key)
        if cached is not None:
            return cached
        with mp.workdps(dps):
            h = mpf(2) ** (-level)
            cutoff = mpf(10) ** (-(dps + 10))
            nodes = []
            if level == 0:
                nodes.append((mpf("0.5"), mpf("0.5"), mp.pi / 2))
            k = 1
            step = 1 if level == 0 else 2
            while True:
                t = k * h
                u = mp.pi / 2 * mp.sinh(t)
                eu = mp.e**u
                p = 1 / (1 + 1 / eu**2)
                q = 1 / (1 + eu**2)
                w = mp.pi / 2 * mp.cosh(t) * 4 * p * q
                if w < cutoff:
                    break
                nodes.append((p, q, w))
                k += step
        _ts_node_cache[key] = nodes
        return nodes


def integrate_tanh_sinh(
    f: Callable,
    a,
    b,
    digits: int,
    max_level: int = 10,
    min_level: int = 2,
    scale=0,
):
    """Integrate f over [a, b] to ``digits`` accuracy with the tanh-sinh rule.

    The integrand is evaluated strictly inside (a, b) and must be bounded
    there (integrable endpoint behavior milder than 1/(x-a) is fine at
    reduced accuracy). ``scale`` optionally states the expected magnitude of
    the result so near-zero integrals stop at an absolute rather than
    relative tolerance.
    """
    with working_precision(digits):
        dps = mp.dps
        a = mpf(a)
        b = mpf(b)
        halflen = (b - a) / 2
        eps = mpf(10) ** (-(digits + 5))
        floor = abs(mpf(scale))
        raw = mpf(0)
        previous = None
        for level in range(max_level + 1):
            for p, q, w in _ts_nodes(level, dps):
                x = a + (b - a) * p if p <= q else b - (b - a) * q
                raw += w * f(x)
                if p != q:
                    x = a + (b - a) * q if q <= p else b - (b - a) * p
                    raw += w * f(x)
            estimate = halflen * raw * mpf(2) ** (-level)
            if previous is not None and level >= min_level:
                if abs(estimate - previous) <= eps * max(abs(estimate), floor):
                    return rounded(estimate, digits)
            previous = estimate
        raise QuadratureConvergenceError(
            f"tanh-sinh quadrature did not converge by level {max_level}"
        )
