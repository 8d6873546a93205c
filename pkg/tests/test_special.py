"""Unit tests for the special-function layer."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

import exactpoly.special as sp
from conftest import mp_close


class TestBernoulli:
    def test_b0(self):
        assert sp.bernoulli(0) == Fraction(1)

    def test_b1_convention(self):
        assert sp.bernoulli(1) == Fraction(-1, 2)

    def test_recurrence_oracle(self):
        # sum_{k=0}^{n} C(n+1, k) B_k = 0 for n >= 1, brute force.
        for n in range(1, 24):
            total = sum(
                Fraction(math.comb(n + 1, k)) * sp.bernoulli(k)
                for k in range(n + 1)
            )
            assert total == 0, n

    def test_odd_vanish(self):
        for n in (3, 5, 7, 9, 11):
            assert sp.bernoulli(n) == 0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            sp.bernoulli(-1)

    def test_zeta_relation(self):
        # (-1)^(m+1) (2 pi)^(2m) B_2m / (2 (2m)!) matches direct summation
        # of k^-2m to 30 digits for m = 1..5.
        for m in range(1, 6):
            via_bernoulli = sp.zeta_even(2 * m, 40)
            with mp.workdps(50):
                direct = mp.nsum(lambda k: k ** (-2 * m), [1, mp.inf])
            assert mp_close(via_bernoulli, direct, 30), m


class TestPolylog:
    def test_li1_identity(self):
        with mp.workdps(50):
            expected = mp.log(2)
        assert mp_close(sp.polylog(1, mpf("0.5"), 40), expected, 38)

    def test_zero_argument(self):
        assert sp.polylog(3, 0, 40) == 0

    def test_li2_half(self):
        with mp.workdps(50):
            expected = mp.pi**2 / 12 - mp.log(2) ** 2 / 2
        assert mp_close(sp.polylog(2, mpf("0.5"), 40), expected, 38)

    def test_domain_error(self):
        with pytest.raises(sp.DomainError):
            sp.polylog(2, 1.0, 30)
        with pytest.raises(sp.DomainError):
            sp.polylog(2, -1.5, 30)

    @settings(max_examples=25, deadline=None)
    @given(
        s=st.integers(min_value=1, max_value=8),
        x=st.floats(min_value=-0.99, max_value=0.99),
    )
    def test_precision_doubling(self, s, x):
        d = 30
        lo = sp.polylog(s, x, d)
        hi = sp.polylog(s, x, 2 * d)
        if hi == 0:
            assert lo == 0
        else:
            assert abs(lo - hi) <= abs(hi) * mpf(10) ** (2 - d)

    def test_table_matches_single(self):
        xs = [mpf("0.867"), mpf("-0.3"), mpf("0.05")]
        for x in xs:
            table = sp.polylog_table(6, x, 40)
            for s in range(1, 7):
                assert table[s - 1] == sp.polylog(s, x, 40), (x, s)


class TestLegendreChi:
    def test_chi1_identity(self):
        with mp.workdps(50):
            expected = mp.atanh(mpf("0.5"))
        assert mp_close(sp.legendre_chi(1, mpf("0.5"), 40), expected, 38)

    def test_zero(self):
        assert sp.legendre_chi(4, 0, 40) == 0

    def test_odd_series_oracle(self):
        # chi_s(z) = sum z^(2k+1) / (2k+1)^s summed independently.
        z = mpf("0.3")
        with mp.workdps(60):
            direct = mp.nsum(lambda k: z ** (2 * k + 1) / (2 * k + 1) ** 2, [0, mp.inf])
        assert mp_close(sp.legendre_chi(2, z, 40), direct, 38)

    def test_domain(self):
        with pytest.raises(sp.DomainError):
            sp.legendre_chi(2, -0.1, 30)
        with pytest.raises(sp.DomainError):
            sp.legendre_chi(2, 1.0, 30)

    def test_table_matches_single(self):
        z = mpf("0.42")
        table = sp.legendre_chi_table(5, z, 40)
        for s in range(1, 6):
            assert mp_close(table[s - 1], sp.legendre_chi(s, z, 40), 38)

    def test_limit_at_one(self):
        with mp.workdps(50):
            expected2 = mp.pi**2 / 8  # zeta(2) * (1 - 1/4)
        assert mp_close(sp.legendre_chi_at_one(2, 40), expected2, 38)
        with pytest.raises(sp.DomainError):
            sp.legendre_chi_at_one(1, 30)


class TestHypergeometric:
    def test_z_zero_is_one(self):
        assert sp.hypergeometric([1], [2, 1.5], 0, 30) == 1
        assert sp.hypergeometric([1, 2], [3], 0, 30) == 1
        assert sp.hypergeometric([1, 2.5], [3, 3, 4], 0, 30) == 1

    def test_2f1_log_identity(self):
        z = mpf("-0.25")
        value = sp.hypergeometric([1, 1], [2], z, 40)
        with mp.workdps(50):
            expected = -mp.log(1 - z) / z
        assert mp_close(value, expected, 38)

    def test_1f2_series_oracle(self):
        # Brute-force summation at doubled precision.
        u = mpf(1)
        z = -(u**2) / 4
        value = sp.hypergeometric([1], [2, mpf(3) / 2], z, 40)
        with mp.workdps(90):
            term = mpf(1)
            acc = mpf(0)
            for k in range(200):
                acc += term
                term *= z * (1 + k) / ((2 + k) * (mpf(3) / 2 + k) * (k + 1))
        assert mp_close(value, acc, 38)

    def test_matched_lists_reduce(self):
        # 1F2(1; 1, 1; z) = sum z^k / (k!)^2.
        z = mpf("0.7")
        value = sp.hypergeometric([1], [1, 1], z, 40)
        with mp.workdps(60):
            direct = mp.nsum(lambda k: z**k / mp.factorial(k) ** 2, [0, mp.inf])
        assert mp_close(value, direct, 38)

    def test_2f1_divergence(self):
        with pytest.raises(sp.DivergenceError):
            sp.hypergeometric([1, 1], [2], 1.0, 30)

    def test_nonpositive_q_rejected(self):
        with pytest.raises(ValueError):
            sp.hypergeometric([1], [0, 2], 0.5, 30)
        with pytest.raises(ValueError):
            sp.hypergeometric([1, 2], [-3], 0.5, 30)

    def test_unsupported_signature(self):
        with pytest.raises(ValueError):
            sp.hypergeometric([1, 2, 3], [4], 0.5, 30)

    def test_complex_c_reduces_to_real(self):
        z = mpf("-0.6")
        re, im = sp.hyp2f1_ones(2.5, 0, z, 40)
        assert im == 0
        assert mp_close(re, sp.hypergeometric([1, 1], [2.5], z, 40), 38)

    def test_complex_c_divergence(self):
        with pytest.raises(sp.DivergenceError):
            sp.hyp2f1_ones(1.5, 3.0, -1.0, 30)


class TestSineIntegral:
    def test_zero(self):
        assert sp.sine_integral(0, 40) == 0

    def test_odd_exact(self):
        for x in (0.7, 3.3, 18.0):
            assert sp.sine_integral(-x, 40) == -sp.sine_integral(x, 40)

    def test_si_one_oracle(self):
        # High-precision adaptive quadrature as the oracle.
        with mp.workdps(60):
            expected = mp.quad(lambda t: mp.sin(t) / t, [0, 1])
        assert mp_close(sp.sine_integral(1, 50), expected, 48)

    def test_large_argument(self):
        with mp.workdps(60):
            expected = mp.quad(lambda t: mp.sin(t) / t, [0, 21])
        assert mp_close(sp.sine_integral(21, 50), expected, 48)


class TestFactorialRoot:
    def test_one(self):
        assert sp.factorial_root(1, 40) == 1

    def test_two(self):
        with mp.workdps(50):
            expected = mp.sqrt(2)
        assert mp_close(sp.factorial_root(2, 40), expected, 38)

    def test_fifty_two(self):
        value = sp.factorial_root(52, 40)
        assert mp_close(value, mpf("20.2254"), 3, scale=value)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            sp.factorial_root(0, 30)


class TestTanhSinhQuadrature:
    def test_polynomial(self):
        value = sp.integrate_tanh_sinh(lambda x: x * x, 0, 2, 40)
        with mp.workdps(50):
            expected = mpf(8) / 3
        assert mp_close(value, expected, 38)

    def test_csch_moment(self):
        f = lambda x: x * mp.csch(mp.pi * x / 2)
        mine = sp.integrate_tanh_sinh(f, 0, 1, 50)
        with mp.workdps(60):
            oracle = mp.quad(f, [0, 1])
        assert mp_close(mine, oracle, 48)

    def test_oscillatory_segment(self):
        f = lambda x: mp.csch(mp.pi * x / 2) * mp.sin(5 * x)
        mine = sp.integrate_tanh_sinh(f, 1, 2, 45)
        with mp.workdps(60):
            oracle = mp.quad(f, [1, 2])
        assert mp_close(mine, oracle, 43)

    def test_level_cap_raises(self):
        with pytest.raises(sp.QuadratureConvergenceError):
            sp.integrate_tanh_sinh(lambda x: x, 0, 1, 30, max_level=1)


class TestPrecisionContract:
    def test_rounding_helper(self):
        x = sp.rounded(mp.pi, 20)
        with mp.workdps(30):
            assert abs(x - mp.pi) < mpf(10) ** (-18)

    def test_series_cap(self, monkeypatch):
        monkeypatch.setattr(sp, "_SERIES_ITERATION_CAP", 500)

        def gen():
            while True:
                yield mpf(1)

        with pytest.raises(sp.SeriesConvergenceError):
            sp.sum_series(gen(), 10)
