"""Polynomial expansions of tanh and relu with exact error formulas.

Both activations are written as integrals of an oscillating kernel against a
decaying envelope; Taylor-expanding the kernel and truncating the integral at
a bound derived from the factorial growth of the partial sums yields a
polynomial whose coefficients and remainder have closed forms. The remainder
splits into an oscillating tail integral (exact closed form, plus a cheap
approximation for tanh) and a kernel-truncation term (hypergeometric closed
form).

Conventions:
  - tanh expansions are odd: ``coefficients[m]`` multiplies v^(2m+1).
  - relu expansions are v/2 plus an even part: ``coefficients[m]`` multiplies
    v^(2m); the constant m=0 coefficient is 1/(pi*sigma).
  - ``kernel_bound`` is the truncation point of the kernel integral: tau for
    tanh (sine kernel), sigma for relu (cosine kernel).
  - Error-formula precision is independent of the coefficient precision and
    defaults to the expansion's own ``digits``.
"""

from __future__ import annotations

import json
import threading
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from mpmath import mp, mpf, mpc

from . import special as sp
from .special import (
    GUARD_DIGITS,
    PrecisionExhaustedError,
    rounded,
    working_precision,
)

ACTIVATION_KINDS = ("tanh", "relu")


class ImaginaryResidueError(ArithmeticError):
    """Complex error evaluation left a non-negligible imaginary part."""


# ---------------------------------------------------------------------------
# Expansion container

@dataclass(frozen=True)
class ActivationExpansion:
    """A truncated kernel-integral expansion of an activation function.

    Valid as an approximation for |v| < vmax; the polynomial itself is defined
    everywhere and all error formulas remain exact outside vmax.
    """

    kind: str
    terms: int
    vmax: float
    digits: int
    kernel_bound: object  # mpf
    coefficients: tuple  # of mpf
    digits_cancelled: float = 0.0

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.vmax <= 0:
            raise ValueError("vmax must be positive")
        for c in self.coefficients:
            if not mp.isfinite(c):
                raise ValueError("non-finite expansion coefficient")

    @property
    def parity(self) -> str:
        return "odd" if self.kind == "tanh" else "even-plus-half-v"

    @property
    def degree(self) -> int:
        return 2 * self.terms + 1 if self.kind == "tanh" else 2 * self.terms

    @property
    def exponents(self) -> tuple:
        """Exponent of v multiplied by coefficients[m], per index m."""
        if self.kind == "tanh":
            return tuple(2 * m + 1 for m in range(len(self.coefficients)))
        return tuple(2 * m for m in range(len(self.coefficients)))

    def coefficients_double(self) -> np.ndarray:
        """Coefficients rounded to double precision once, cached."""
        cached = _double_coeff_cache.get(id(self))
        if cached is None:
            cached = np.array([float(c) for c in self.coefficients])
            _double_coeff_cache[id(self)] = cached
        return cached


_double_coeff_cache: dict = {}


# ---------------------------------------------------------------------------
# Kernel bounds and the csch moment integral

def kernel_bounds(terms: int, vmax: float, digits: int) -> tuple:
    """(sigma, tau): kernel truncation bounds for the cosine and sine kernels.

    sigma = ((2M+2)!)^(1/(2M+2)) / V, tau = ((2M+3)!)^(1/(2M+3)) / V: the
    points where the factorial envelope of the kernel's Taylor remainder
    reaches 1, so the partial sums stay valid on the retained range.
    """
    if terms < 0:
        raise ValueError("terms must be nonnegative")
    if vmax <= 0:
        raise ValueError("vmax must be positive")
    with working_precision(digits):
        v = mpf(vmax)
        sigma = sp.factorial_root(2 * terms + 2, digits + 5) / v
        tau = sp.factorial_root(2 * terms + 3, digits + 5) / v
    return rounded(sigma, digits), rounded(tau, digits)


def csch_moment_antiderivative(j: int, xi, rate, digits: int):
    """Antiderivative of xi^j * csch(rate*xi), evaluated at xi > 0.

    Closed form: -(2/rate) * sum_{k=0..j} j! xi^(j-k) chi_{k+1}(e^(-rate*xi))
    / (rate^k (j-k)!), with chi the odd part of the polylogarithm.
    """
    if j < 0:
        raise ValueError("moment order must be nonnegative")
    with working_precision(digits):
        xi = mpf(xi)
        rate = mpf(rate)
        if xi <= 0 or rate <= 0:
            raise ValueError("xi and rate must be positive")
        x = mp.e ** (-rate * xi)
        chi = sp.legendre_chi_table(j + 1, x, digits + 5)
        jfact = mp.factorial(j)
        total = mpf(0)
        for k in range(j + 1):
            total += (
                jfact
                * xi ** (j - k)
                * chi[k]
                / (rate**k * mp.factorial(j - k))
            )
        value = -(2 / rate) * total
    return rounded(value, digits)


def csch_moment_zero_limit(j: int, rate, digits: int):
    """Limit of the antiderivative as xi -> 0+ (finite for j >= 1).

    Only the k = j term survives: -(2 j! / rate^(j+1)) * chi_{j+1}(1), and
    chi_{j+1}(1) = zeta(j+1)(1 - 2^-(j+1)).
    """
    if j < 1:
        raise ValueError("the xi->0 limit diverges for j = 0")
    with working_precision(digits):
        rate = mpf(rate)
        chi_one = sp.legendre_chi_at_one(j + 1, digits + 5)
        value = -(2 * mp.factorial(j) / rate ** (j + 1)) * chi_one
    return rounded(value, digits)


def csch_moment(j: int, upper, rate, digits: int):
    """integral_0^upper xi^j csch(rate*xi) dxi in closed form (j >= 1)."""
    with working_precision(digits):
        value = csch_moment_antiderivative(
            j, upper, rate, digits + 5
        ) - csch_moment_zero_limit(j, rate, digits + 5)
    return rounded(value, digits)


# ---------------------------------------------------------------------------
# Coefficients

def tanh_coefficients(
    terms: int, vmax: float, digits: int, min_clear_digits: int = 20
) -> ActivationExpansion:
    """Expansion coefficients for tanh: index m multiplies v^(2m+1).

    Each coefficient is a Bernoulli-number term plus a chi-function sum that
    agree to many digits and are subtracted; the cancellation is measured and
    the call fails loudly unless at least ``min_clear_digits`` digits of
    working precision survive it.
    """
    _, tau = kernel_bounds(terms, vmax, digits + 10)
    with working_precision(digits):
        tau_w = mpf(tau)
        x = mp.e ** (-mp.pi * tau_w / 2)
        chi = sp.legendre_chi_table(2 * terms + 2, x, digits + 5)
        coeffs = []
        worst_cancel = 0.0
        for m in range(terms + 1):
            b = sp.bernoulli(2 * m + 2)
            bern_term = (
                mpf(2) ** (2 * m + 1)
                * (mpf(4) ** (m + 1) - 1)
                * mpf(b.numerator)
                / mpf(b.denominator)
                / ((m + 1) * mp.factorial(2 * m + 1))
            )
            chi_sum = mpf(0)
            for k in range(2 * m + 2):
                chi_sum += (
                    mpf(2) ** k
                    * tau_w ** (2 * m + 1 - k)
                    * chi[k]
                    / (mp.pi**k * mp.factorial(2 * m + 1 - k))
                )
            chi_term = (-1) ** (m + 1) * 4 / mp.pi * chi_sum
            coeff = bern_term + chi_term
            larger = max(abs(bern_term), abs(chi_term))
            if coeff == 0:
                cancel = float(digits)
            elif larger == 0:
                cancel = 0.0
            else:
                cancel = max(0.0, float(mp.log10(larger / abs(coeff))))
            worst_cancel = max(worst_cancel, cancel)
            coeffs.append(coeff)
        if digits - worst_cancel < min_clear_digits:
            raise PrecisionExhaustedError(
                f"tanh coefficients cancel {worst_cancel:.1f} digits; "
                f"{digits} working digits leave fewer than "
                f"{min_clear_digits} clear - raise digits"
            )
    return ActivationExpansion(
        kind="tanh",
        terms=terms,
        vmax=float(vmax),
        digits=digits,
        kernel_bound=rounded(tau, digits),
        coefficients=tuple(rounded(c, digits) for c in coeffs),
        digits_cancelled=worst_cancel,
    )


def relu_coefficients(terms: int, vmax: float, digits: int) -> ActivationExpansion:
    """Even-part expansion coefficients for relu: index m multiplies v^(2m).

    The full approximation is v/2 + sum_m coefficients[m] v^(2m). The single
    closed form (-1)^(m+1) sigma^(2m-1) / (pi (2m)! (2m-1)) covers m = 0 too:
    it reduces to +1/(pi*sigma).
    """
    sigma, _ = kernel_bounds(terms, vmax, digits + 10)
    with working_precision(digits):
        sigma_w = mpf(sigma)
        coeffs = []
        for m in range(terms + 1):
            coeff = (
                (-1) ** (m + 1)
                * sigma_w ** (2 * m - 1)
                / (mp.pi * mp.factorial(2 * m) * (2 * m - 1))
            )
            coeffs.append(coeff)
    return ActivationExpansion(
        kind="relu",
        terms=terms,
        vmax=float(vmax),
        digits=digits,
        kernel_bound=rounded(sigma, digits),
        coefficients=tuple(rounded(c, digits) for c in coeffs),
    )


def taylor_coefficients_tanh(terms: int, digits: int) -> list:
    """Conventional Taylor coefficients of tanh about 0 (baseline method).

    Returns a list where index i multiplies v^(2i+1); the underlying series
    is sum_{m=1..M} 2^(2m)(2^(2m)-1) B_2m v^(2m-1) / (2m)!, valid only for
    |v| < pi/2.
    """
    if terms < 1:
        raise ValueError("taylor_coefficients_tanh requires terms >= 1")
    out = []
    with working_precision(digits):
        for m in range(1, terms + 1):
            b = sp.bernoulli(2 * m)
            c = (
                mpf(2) ** (2 * m)
                * (mpf(2) ** (2 * m) - 1)
                * mpf(b.numerator)
                / mpf(b.denominator)
                / mp.factorial(2 * m)
            )
            out.append(rounded(c, digits))
    return out


# ---------------------------------------------------------------------------
# Evaluation

def evaluate_expansion(expansion: ActivationExpansion, v):
    """Evaluate the expansion polynomial in double precision (Horner form).

    Accepts a scalar or an ndarray; coefficients are rounded to double once.
    """
    coeffs = expansion.coefficients_double()
    arr = np.asarray(v, dtype=np.float64)
    u = arr * arr
    acc = np.zeros_like(arr)
    for c in coeffs[::-1]:
        acc = acc * u + c
    if expansion.kind == "tanh":
        out = acc * arr
    else:
        out = 0.5 * arr + acc
    if np.isscalar(v) or arr.ndim == 0:
        return float(out)
    return out


def evaluate_expansion_hp(expansion: ActivationExpansion, v, digits: int | None = None):
    """Evaluate the expansion polynomial at full coefficient precision."""
    digits = expansion.digits if digits is None else digits
    with working_precision(digits):
        vv = mpf(v)
        u = vv * vv
        acc = mpf(0)
        for c in reversed(expansion.coefficients):
            acc = acc * u + c
        out = acc * vv if expansion.kind == "tanh" else vv / 2 + acc
    return rounded(out, digits)


def activation_value(kind: str, v, digits: int):
    """The activation function itself at working precision."""
    with working_precision(digits):
        vv = mpf(v)
        out = mp.tanh(vv) if kind == "tanh" else (vv if vv > 0 else mpf(0))
    return rounded(out, digits)


def measured_error(
    expansion: ActivationExpansion,
    v,
    digits: int | None = None,
    double_eval: bool = False,
):
    """phi(v) - phi_a(v): the activation minus its expansion polynomial.

    ``double_eval`` evaluates the polynomial in IEEE double (the runtime
    evaluation mode); otherwise the polynomial is evaluated at full precision.
    """
    digits = expansion.digits if digits is None else digits
    with working_precision(digits):
        phi = activation_value(expansion.kind, v, digits + 5)
        if double_eval:
            phi_a = mpf(evaluate_expansion(expansion, float(v)))
        else:
            phi_a = evaluate_expansion_hp(expansion, v, digits + 5)
        err = phi - phi_a
    return rounded(err, digits)


# ---------------------------------------------------------------------------
# tanh error formulas

def _osc_tail_quadrature(tau, v, digits: int):
    """Direct quadrature of integral_tau^inf csch(pi xi/2) sin(xi v) dxi.

    Fallback for configurations where the hypergeometric closed form sits too
    close to its convergence boundary. Splits the tail into half-period
    segments so each piece is non-oscillating for the quadrature rule.
    """
    with working_precision(digits + 5):
        tau = mpf(tau)
        v = mpf(v)
        if v == 0:
            return mpf(0)
        f = lambda xi: mp.csch(mp.pi * xi / 2) * mp.sin(xi * v)
        # csch tail envelope ~ 2 e^(-pi xi / 2): integrate until it is
        # negligible relative to the leading-segment scale.
        reach = (2 / mp.pi) * (digits + 12) * mp.log(10)
        xi_end = tau + reach
        seg = min(mp.pi / abs(v), reach)
        scale = mp.csch(mp.pi * tau / 2)
        total = mpf(0)
        lo = tau
        while lo < xi_end:
            hi = min(lo + seg, xi_end)
            total += sp.integrate_tanh_sinh(
                f, lo, hi, digits + 5, scale=scale
            )
            lo = hi
    return rounded(total, digits)


def tanh_error_oscillating_exact(
    expansion: ActivationExpansion, v, digits: int | None = None
):
    """Exact oscillating error term integral_tau^inf csch(pi xi/2) sin(xi v) dxi.

    Closed form: with z = 1/(1 - e^(pi tau)) in (-1, 0),
    F = 2F1(1, 1; 3/2 + i v/pi; z) and U = e^(-i tau v) / (v - i pi/2),
    the value is e^(-pi tau/2)/(1 - e^(-pi tau)) * (U F + U* F*).
    F and its conjugate are summed in separate series runs, so the imaginary
    part of the sum measures the numerical consistency of the pair; it must
    sit below 10^(5 - digits).
    """
    digits = expansion.digits if digits is None else digits
    tau = expansion.kernel_bound
    with working_precision(digits):
        tau_w = mpf(tau)
        vv = mpf(v)
        if vv == 0:
            return mpf(0)
        z = 1 / (1 - mp.e ** (mp.pi * tau_w))
        if abs(z) >= mpf("0.999"):
            warnings.warn(
                "oscillating-error closed form near its convergence "
                "boundary; falling back to tail quadrature",
                stacklevel=2,
            )
            return _osc_tail_quadrature(tau_w, vv, digits)
        c_im = vv / mp.pi
        f_re, f_im = sp.hyp2f1_ones(mpf(3) / 2, c_im, z, digits + 5)
        fc_re, fc_im = sp.hyp2f1_ones(mpf(3) / 2, -c_im, z, digits + 5)
        u = mp.exp(mpc(0, -tau_w * vv)) / mpc(vv, -mp.pi / 2)
        pair = u * mpc(f_re, f_im) + mp.conj(u) * mpc(fc_re, fc_im)
        prefactor = mp.e ** (-tau_w * mp.pi / 2) / (1 - mp.e ** (-mp.pi * tau_w))
        value = prefactor * pair
        residue = abs(value.imag)
        if residue > mpf(10) ** (5 - digits):
            raise ImaginaryResidueError(
                f"imaginary residue {mp.nstr(residue, 5)} exceeds "
                f"10^{5 - digits}"
            )
        out = value.real
    return rounded(out, digits)


def tanh_error_approx(expansion: ActivationExpansion, v, digits: int | None = None):
    """Cheap closed-form approximation of the oscillating error for tanh:
    4 e^(-pi tau/2) (pi sin(tau v) + 2 v cos(tau v)) / ((1 - e^(-pi tau))(4 v^2 + pi^2)).
    """
    digits = expansion.digits if digits is None else digits
    with working_precision(digits):
        tau = mpf(expansion.kernel_bound)
        vv = mpf(v)
        prefactor = 4 * mp.e ** (-mp.pi * tau / 2) / (1 - mp.e ** (-mp.pi * tau))
        value = (
            prefactor
            * (mp.pi * mp.sin(tau * vv) + 2 * vv * mp.cos(tau * vv))
            / (4 * vv * vv + mp.pi**2)
        )
    return rounded(value, digits)


class _TanhTailIntegral:
    """Cached quadrature data for the kernel-truncation term of the tanh error.

    The term is (-1)^(M+1) v^L / L! * integral_0^tau xi^L csch(pi xi/2)
    1F2(1; M+2, M+5/2; -(v xi/2)^2) dxi with L = 2M+3. Everything except the
    1F2 factor is independent of v, so per quadrature node we precompute
    c = weight * xi^L * csch(pi xi/2) once and only evaluate the 1F2 factor
    per point. Nodes are stored per tanh-sinh refinement level so
    evaluations stay adaptive.

    The 1F2 factor is the scaled remainder of the sine Taylor series:
    1F2(1; M+2, M+5/2; -(y/2)^2) = (-1)^(M+1) (L!/y^L) (sin y - P_M(y)),
    with P_M the degree-(2M+1) partial sum. The direct series is used while
    its first term ratio stays below 0.9 (terms then decrease from the
    start, so no cancellation); past that the identity form is used, where
    |P_M(y)| is large and the subtraction is benign.
    """

    def __init__(self, terms: int, tau, digits: int):
        self.terms = terms
        self.digits = digits
        self.dps = digits + GUARD_DIGITS
        with mp.workdps(self.dps):
            self.tau = mpf(tau)
            self.L = 2 * terms + 3
            self.b1 = mpf(terms + 2)
            self.b2 = mpf(terms) + mpf(5) / 2
            self.inv_bb: list = []
            self.levels: list = []
            # Signed inverse factorials of the sine partial sum, highest
            # degree first, for Horner evaluation in y^2.
            self.sin_coeffs = [
                mpf(-1) ** m / mp.factorial(2 * m + 1)
                for m in range(terms, -1, -1)
            ]
            self.lead = mpf(-1) ** (terms + 1) * mp.factorial(self.L)
            # Scale of the v = 0 integral (1F2 = 1): the bare csch moment.
            self.scale0 = abs(csch_moment(self.L, self.tau, mp.pi / 2, digits))
            # Dropping a node biases the sum by at most |c| times the 1F2
            # factor, which is bounded by ~10 in the direct-series regime
            # and by O(L^2) via the identity form, so keep a wide margin.
            self.skip_tol = self.scale0 * mpf(10) ** (-(digits + 18))

    def _extend_inv(self, n: int):
        with mp.workdps(self.dps):
            while len(self.inv_bb) < n:
                j = len(self.inv_bb)
                self.inv_bb.append(1 / ((self.b1 + j) * (self.b2 + j)))

    def _level_nodes(self, level: int) -> list:
        while len(self.levels) <= level:
            lvl = len(self.levels)
            with mp.workdps(self.dps):
                half = self.tau / 2
                nodes = []
                for p, q, w in sp._ts_nodes(lvl, self.dps):
                    pairs = ((p, q), (q, p)) if p != q else ((p, q),)
                    for f0, f1 in pairs:
                        xi = self.tau * f0 if f0 <= f1 else self.tau - self.tau * f1
                        if xi <= 0 or xi >= self.tau:
                            continue
                        c = half * w * xi**self.L * mp.csch(mp.pi * xi / 2)
                        if abs(c) > self.skip_tol:
                            nodes.append((xi, c))
                self.levels.append(nodes)
        return self.levels[level]

    def _hyp_factor(self, y, tol):
        """1F2(1; M+2, M+5/2; -(y/2)^2) for y >= 0, cancellation-free."""
        z = -(y * y) / 4
        if abs(z) <= mpf("0.9") * self.b1 * self.b2:
            term = mpf(1)
            acc = mpf(1)
            j = 0
            while True:
                if j >= len(self.inv_bb):
                    self._extend_inv(j + 32)
                term *= z * self.inv_bb[j]
                acc += term
                j += 1
                if abs(term) <= tol * abs(acc):
                    return acc
        y2 = y * y
        partial = self.sin_coeffs[0]
        for coeff in self.sin_coeffs[1:]:
            partial = partial * y2 + coeff
        partial *= y
        return self.lead * (mp.sin(y) - partial) / y**self.L

    def evaluate(self, v, max_level: int = 10):
        """The full truncation term at v, adaptively refined."""
        digits = self.digits
        with mp.workdps(self.dps):
            vv = mpf(v)
            if vv == 0:
                return mpf(0)
            av = abs(vv)
            eps = mpf(10) ** (-(digits + 5))
            tol = mpf(10) ** (-(digits + 10))
            raw = mpf(0)
            previous = None
            estimate = mpf(0)
            converged = False
            for level in range(max_level + 1):
                for xi, c in self._level_nodes(level):
                    raw += c * self._hyp_factor(av * xi, tol)
                estimate = raw * mpf(2) ** (-level)
                if previous is not None and level >= 2:
                    if abs(estimate - previous) <= eps * max(
                        abs(estimate), self.scale0
                    ):
                        converged = True
                        break
                previous = estimate
            if not converged:
                raise sp.QuadratureConvergenceError(
                    "kernel-truncation quadrature did not converge"
                )
            sign = (-1) ** (self.terms + 1)
            value = sign * vv**self.L / mp.factorial(self.L) * estimate
        return rounded(value, digits)


_tail_cache: dict = {}
_tail_lock = threading.Lock()


def _tanh_tail(expansion: ActivationExpansion, digits: int) -> _TanhTailIntegral:
    key = (expansion.terms, float(expansion.kernel_bound), digits)
    obj = _tail_cache.get(key)
    if obj is None:
        with _tail_lock:
            obj = _tail_cache.get(key)
            if obj is None:
                obj = _TanhTailIntegral(expansion.terms, expansion.kernel_bound, digits)
                _tail_cache[key] = obj
    return obj


def tanh_error_exact(expansion: ActivationExpansion, v, digits: int | None = None):
    """Exact remainder tanh(v) - phi_a(v): oscillating term + truncation term."""
    digits = expansion.digits if digits is None else digits
    with working_precision(digits):
        osc = tanh_error_oscillating_exact(expansion, v, digits + 5)
        tail = _tanh_tail(expansion, digits + 5).evaluate(v)
        value = osc + tail
    return rounded(value, digits)


# ---------------------------------------------------------------------------
# relu error formulas

def relu_error_oscillating(
    expansion: ActivationExpansion, v, digits: int | None = None
):
    """Exact oscillating error -(1/pi) integral_sigma^inf cos(xi v)/xi^2 dxi
    = |v|/2 - v Si(sigma v)/pi - cos(sigma v)/(pi sigma)."""
    digits = expansion.digits if digits is None else digits
    with working_precision(digits):
        sigma = mpf(expansion.kernel_bound)
        vv = mpf(v)
        value = (
            abs(vv) / 2
            - vv * sp.sine_integral(sigma * vv, digits + 5) / mp.pi
            - mp.cos(sigma * vv) / (mp.pi * sigma)
        )
    return rounded(value, digits)


def relu_error_exact(expansion: ActivationExpansion, v, digits: int | None = None):
    """Exact remainder relu(v) - (v/2 + even part): oscillating term plus the
    kernel-truncation term
    (-1)^M sigma^(2M+1) v^(2M+2) / (pi (2M+2)! (2M+1)) *
    2F3(1, M+1/2; M+3/2, M+3/2, M+2; -sigma^2 v^2/4)."""
    digits = expansion.digits if digits is None else digits
    m = expansion.terms
    with working_precision(digits):
        sigma = mpf(expansion.kernel_bound)
        vv = mpf(v)
        osc = relu_error_oscillating(expansion, v, digits + 5)
        z = -((sigma * vv / 2) ** 2)
        f23 = sp.hypergeometric(
            [1, mpf(m) + mpf(1) / 2],
            [mpf(m) + mpf(3) / 2, mpf(m) + mpf(3) / 2, mpf(m + 2)],
            z,
            digits + 5,
        )
        trunc = (
            (-1) ** m
            * sigma ** (2 * m + 1)
            * vv ** (2 * m + 2)
            / (mp.pi * mp.factorial(2 * m + 2) * (2 * m + 1))
            * f23
        )
        value = osc + trunc
    return rounded(value, digits)


# ---------------------------------------------------------------------------
# Dispatchers and the error report

def exact_error(expansion: ActivationExpansion, v, digits: int | None = None):
    """The exact remainder formula for the expansion's activation kind."""
    if expansion.kind == "tanh":
        return tanh_error_exact(expansion, v, digits)
    return relu_error_exact(expansion, v, digits)


def oscillating_error(expansion: ActivationExpansion, v, digits: int | None = None):
    """The exact oscillating error component."""
    if expansion.kind == "tanh":
        return tanh_error_oscillating_exact(expansion, v, digits)
    return relu_error_oscillating(expansion, v, digits)


def cheap_error(expansion: ActivationExpansion, v, digits: int | None = None):
    """The inexpensive error formula used for grid seeding and reports:
    the closed-form approximation for tanh, the (already cheap) exact
    oscillating form for relu."""
    if expansion.kind == "tanh":
        return tanh_error_approx(expansion, v, digits)
    return relu_error_oscillating(expansion, v, digits)


def cheap_error_curve(expansion: ActivationExpansion, vs: np.ndarray) -> np.ndarray:
    """Vectorized double-precision version of ``cheap_error`` for coarse grids."""
    from scipy.special import sici

    vs = np.asarray(vs, dtype=np.float64)
    kb = float(expansion.kernel_bound)
    if expansion.kind == "tanh":
        with np.errstate(over="ignore", under="ignore"):
            prefactor = 4.0 * np.exp(-np.pi * kb / 2) / (1.0 - np.exp(-np.pi * kb))
            return (
                prefactor
                * (np.pi * np.sin(kb * vs) + 2 * vs * np.cos(kb * vs))
                / (4 * vs * vs + np.pi**2)
            )
    si, _ = sici(kb * vs)
    return np.abs(vs) / 2 - vs * si / np.pi - np.cos(kb * vs) / (np.pi * kb)


@dataclass
class ErrorReport:
    """Per-grid-point error decomposition of an expansion."""

    grid: np.ndarray
    phi: list
    phi_approx: list
    measured: list  # E = phi - phi_a
    exact: list  # H, the exact remainder formula
    approximate: list  # I, the cheap oscillating-error formula

    def __post_init__(self):
        n = len(self.grid)
        for name in ("phi", "phi_approx", "measured", "exact", "approximate"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match grid")


def symmetric_grid(halfwidth: float, points: int) -> np.ndarray:
    """Uniform grid over [-halfwidth, halfwidth] (odd counts include 0)."""
    return np.linspace(-halfwidth, halfwidth, points)


def error_report(
    expansion: ActivationExpansion,
    grid: Iterable,
    error_digits: int = 40,
    double_eval: bool = False,
) -> ErrorReport:
    """Measured, exact, and approximate error at each grid point.

    The measured error E uses the expansion's own precision; H and I use
    ``error_digits``. ``double_eval`` switches the polynomial evaluation in E
    to IEEE double (the runtime mode). Parity halves the exact-formula work
    on symmetric grids.
    """
    grid = np.asarray(list(grid), dtype=np.float64)
    odd = expansion.kind == "tanh"
    phi, phi_a, measured = [], [], []
    exact_cache: dict = {}
    cheap_cache: dict = {}
    exact, approx = [], []
    for v in grid:
        with working_precision(expansion.digits):
            f = activation_value(expansion.kind, v, expansion.digits)
            if double_eval:
                pa = mpf(evaluate_expansion(expansion, float(v)))
            else:
                pa = evaluate_expansion_hp(expansion, v)
            e_val = rounded(f - pa, expansion.digits)
        phi.append(f)
        phi_a.append(pa)
        measured.append(e_val)
        key = abs(float(v))
        sign = -1 if (odd and v < 0) else 1
        if key not in exact_cache:
            exact_cache[key] = exact_error(expansion, key, error_digits)
            cheap_cache[key] = cheap_error(expansion, key, error_digits)
        with working_precision(error_digits):
            exact.append(sign * exact_cache[key])
            approx.append(sign * cheap_cache[key])
    return ErrorReport(grid, phi, phi_a, measured, exact, approx)


# ---------------------------------------------------------------------------
# Serialization

def _decimal(x, digits: int) -> str:
    return mp.nstr(
        x, digits + 6, strip_zeros=True, min_fixed=1, max_fixed=0
    )


def save_expansion(expansion: ActivationExpansion, path: str) -> None:
    """Write the expansion as decimal strings at full precision."""
    payload = {
        "kind": expansion.kind,
        "terms": expansion.terms,
        "vmax": repr(expansion.vmax),
        "digits": expansion.digits,
        "kernel_bound": _decimal(expansion.kernel_bound, expansion.digits),
        "coefficients": [
            _decimal(c, expansion.digits) for c in expansion.coefficients
        ],
        "digits_cancelled": expansion.digits_cancelled,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_expansion(path: str) -> ActivationExpansion:
    with open(path) as fh:
        payload = json.load(fh)
    digits = int(payload["digits"])
    with mp.workdps(digits):
        kernel_bound = mpf(payload["kernel_bound"])
        coefficients = tuple(mpf(c) for c in payload["coefficients"])
    return ActivationExpansion(
        kind=payload["kind"],
        terms=int(payload["terms"]),
        vmax=float(payload["vmax"]),
        digits=digits,
        kernel_bound=kernel_bound,
        coefficients=coefficients,
        digits_cancelled=float(payload.get("digits_cancelled", 0.0)),
    )


# ---------------------------------------------------------------------------
# Shared expansion construction cache

@lru_cache(maxsize=64)
def expansion_for(kind: str, terms: int, vmax: float, digits: int) -> ActivationExpansion:
    """Construct (or reuse) an expansion; cached on the full parameter set."""
    if kind == "tanh":
        return tanh_coefficients(terms, vmax, digits)
    if kind == "relu":
        return relu_coefficients(terms, vmax, digits)
    raise ValueError(f"unknown activation kind {kind!r}")


def expansion_cache_info():
    return expansion_for.cache_info()
