"""Spectral-density / BCF / half-sided-transform checks.

Every closed form is pinned against an independent quadrature oracle
(adaptive Gauss-Kronrod, oscillatory weights for the Fourier tails).
"""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as Gamma

from entbath.spectral import (
    SpectralParams,
    bcf_exact,
    counterterm_coefficient,
    half_fourier_asymptotic,
    half_fourier_finite,
    half_fourier_numeric,
    rescaled_coupling,
    s_expansion,
    solve_alpha,
    spectral_density,
)


def bcf_quadrature(p, tau):
    """Oracle: (1/pi) int_0^inf J(w) e^{-i w tau} dw by adaptive quadrature."""
    re = quad(lambda w: spectral_density(p, w) * np.cos(w * tau) / np.pi,
              0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=800)[0]
    im = quad(lambda w: -spectral_density(p, w) * np.sin(w * tau) / np.pi,
              0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=800)[0]
    return re + 1j * im


class TestSpectralDensity:
    def test_zero_frequency(self):
        p = SpectralParams(alpha=0.1, s=1.0, omega_c=10.0)
        assert spectral_density(p, 0.0) == 0.0

    def test_direct_value(self):
        p = SpectralParams(alpha=0.1, s=1.0, omega_c=10.0)
        expected = (np.pi / 2) * 0.1 * 10.0 * np.exp(-1.0)  # 0.57786367...
        assert spectral_density(p, 10.0) == pytest.approx(expected, rel=1e-14)

    def test_argmax_at_s_omega_c(self):
        p = SpectralParams(alpha=0.1, s=0.3, omega_c=10.0)
        w = np.linspace(0.01, 40.0, 200001)
        w_star = w[np.argmax(spectral_density(p, w))]
        assert w_star == pytest.approx(p.s * p.omega_c, abs=2e-3)

    def test_negative_frequency_rejected(self):
        p = SpectralParams(alpha=0.1, s=0.5, omega_c=5.0)
        with pytest.raises(ValueError):
            spectral_density(p, -0.1)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            SpectralParams(alpha=0.1, s=1.5, omega_c=10.0)
        with pytest.raises(ValueError):
            SpectralParams(alpha=0.1, s=0.0, omega_c=10.0)
        with pytest.raises(ValueError):
            SpectralParams(alpha=0.1, s=0.5, omega_c=-1.0)


class TestBcfExact:
    def test_tau_zero_value(self):
        p = SpectralParams(alpha=0.1, s=0.5, omega_c=5.0)
        val = bcf_exact(p, 0.0)
        assert val.imag == 0.0
        assert val.real == pytest.approx(0.5 * 0.1 * Gamma(1.5) * 25.0, rel=1e-14)
        assert abs(val - bcf_quadrature(p, 0.0)) <= 1e-8 * abs(val)

    def test_alpha_zero(self):
        p = SpectralParams(alpha=0.0, s=0.5, omega_c=5.0)
        assert bcf_exact(p, 2.0) == 0.0

    def test_against_quadrature(self):
        p = SpectralParams(alpha=0.1, s=0.5, omega_c=5.0)
        val = bcf_exact(p, 1.0)
        oracle = bcf_quadrature(p, 1.0)
        assert abs(val - oracle) <= 1e-8 * abs(oracle)

    def test_algebraic_tail_slope(self):
        # |bcf| ~ tau^-(s+1) for omega_c tau >> 1: log-log slope to 1%
        p = SpectralParams(alpha=0.2, s=0.3, omega_c=10.0)
        tau = np.geomspace(1e2 / p.omega_c, 1e4 / p.omega_c, 40)
        slope = np.polyfit(np.log(tau), np.log(np.abs(bcf_exact(p, tau))), 1)[0]
        assert slope == pytest.approx(-(p.s + 1), rel=0.01)

    def test_negative_tau_rejected(self):
        p = SpectralParams(alpha=0.1, s=0.5, omega_c=5.0)
        with pytest.raises(ValueError):
            bcf_exact(p, -1.0)


class TestHalfFourier:
    def test_real_part_equals_spectral_density(self):
        p = SpectralParams(alpha=0.1, s=0.3, omega_c=10.0)
        f = half_fourier_asymptotic(p, 2.0)
        assert f.j_part == pytest.approx(spectral_density(p, 2.0), abs=1e-8)

    def test_s_at_zero(self):
        for s in [0.1, 0.3, 0.5, 0.7, 1.0]:
            p = SpectralParams(alpha=0.1, s=s, omega_c=10.0)
            f = half_fourier_asymptotic(p, 0.0)
            assert f.s_part == pytest.approx(-(0.1 * Gamma(s) / 2) * 10.0, rel=1e-12)
            assert f.j_part == 0.0

    def test_negative_frequency_against_quadrature(self):
        p = SpectralParams(alpha=0.1, s=0.3, omega_c=10.0)
        f = half_fourier_asymptotic(p, -1.0)
        oracle = half_fourier_numeric(p, -1.0)
        assert f.j_part == 0.0
        assert abs(f.value - oracle) <= 1e-6

    @pytest.mark.parametrize("s", [0.3, 0.5, 1.0])
    @pytest.mark.parametrize("w", [-7.0, -0.5, 0.5, 2.0, 15.0])
    def test_against_quadrature_grid(self, s, w):
        p = SpectralParams(alpha=0.1, s=s, omega_c=10.0)
        f = half_fourier_asymptotic(p, w).value
        oracle = half_fourier_numeric(p, w)
        assert abs(f - oracle) <= 1e-6

    def test_kramers_kronig(self):
        # S(w) = -(1/pi) PV int_0^inf J(w')/(w'-w) dw' at 1e-5 relative
        p = SpectralParams(alpha=0.1, s=0.3, omega_c=10.0)

        def s_pv(w):
            if w <= 0:
                return -quad(lambda wp: spectral_density(p, wp) / (wp - w) / np.pi,
                             0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=800)[0]
            inner = quad(lambda wp: spectral_density(p, wp) / np.pi, 0, 2 * w,
                         weight="cauchy", wvar=w, epsabs=1e-12, epsrel=1e-12,
                         limit=800)[0]
            outer = quad(lambda wp: spectral_density(p, wp) / (wp - w) / np.pi,
                         2 * w, np.inf, epsabs=1e-12, epsrel=1e-12, limit=800)[0]
            return -(inner + outer)

        for w in [-3.0, -0.7, 0.4, 1.0, 2.5, 8.0]:
            exact = half_fourier_asymptotic(p, w).s_part
            assert exact == pytest.approx(s_pv(w), rel=1e-5)

    def test_finite_time_limits(self):
        p = SpectralParams(alpha=0.1, s=0.5, omega_c=10.0)
        assert half_fourier_finite(p, 1.3, 0.0) == 0.0
        # omega_c * t = 1e3: algebraic tail bound |int_t^inf bcf| ~
        # bcf(0) * (wc t)^-s / s / wc ... compare against asymptotic value
        t = 1e3 / p.omega_c
        tail = abs(bcf_exact(p, t)) * t / p.s  # |int_t^inf| <= |bcf(t)| t / s
        f_t = half_fourier_finite(p, 1.3, t)
        f_inf = half_fourier_asymptotic(p, 1.3).value
        assert abs(f_t - f_inf) <= 2 * tail
        assert abs(f_t - f_inf) < 5e-3 * abs(f_inf)

    def test_finite_time_one_term_exponential(self):
        # with a single exponential kernel the antiderivative is closed form;
        # here the quadrature path is checked against it via the bcf_fit module
        from entbath.bcf_fit import ExponentialBcf

        fit = ExponentialBcf(terms=((1.0 + 0.5j, 1.0 + 1.0j),), t_max=10.0,
                             max_abs_err=0.0, norm_scale=1.0)
        g, w = 1.0 + 0.5j, 1.0 + 1.0j
        omega, t = 0.7, 2.5
        expected = g * (1 - np.exp((1j * omega - w) * t)) / (w - 1j * omega)
        assert abs(fit.half_fourier(omega, t) - expected) <= 1e-12

    def test_finite_to_asymptotic_envelope(self):
        # |F_t - F| decreases in envelope as t grows (checked at 5 frequencies)
        p = SpectralParams(alpha=0.1, s=0.5, omega_c=10.0)
        ts = np.array([2.0, 8.0, 32.0, 128.0]) / p.omega_c * 10
        for w in [-2.0, -0.5, 0.5, 1.0, 3.0]:
            f_inf = half_fourier_asymptotic(p, w).value
            gaps = [abs(half_fourier_finite(p, w, t) - f_inf) for t in ts]
            assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))


class TestSExpansion:
    def test_anchor_at_zero(self):
        for s in [0.1, 0.6, 1.0]:
            p = SpectralParams(alpha=0.2, s=s, omega_c=7.0)
            assert s_expansion(p, 0.0) == pytest.approx(
                -(0.2 * Gamma(s) / 2) * 7.0, rel=1e-14)

    @pytest.mark.parametrize("s", [0.3, 1.0])
    def test_second_order_accuracy(self, s):
        # Richardson check: error(2x)/error(x) ~ 4 within 20%
        p = SpectralParams(alpha=0.1, s=s, omega_c=10.0)
        def err(x):
            exact = half_fourier_asymptotic(p, x * p.omega_c).s_part
            return abs(s_expansion(p, x) - exact)
        ratio = err(0.04) / err(0.02)
        assert ratio == pytest.approx(4.0, rel=0.20)

    def test_pointed_minimum_sub_half(self):
        # s < 0.5: S(+-x) > S(0) for small nonzero x
        for s in [0.1, 0.3, 0.45]:
            p = SpectralParams(alpha=0.1, s=s, omega_c=10.0)
            s0 = half_fourier_asymptotic(p, 0.0).s_part
            for x in [0.02, 0.05, 0.1]:
                assert half_fourier_asymptotic(p, x * p.omega_c).s_part > s0
                assert half_fourier_asymptotic(p, -x * p.omega_c).s_part > s0

    def test_guard_band(self):
        p = SpectralParams(alpha=0.1, s=1 - 1e-9, omega_c=10.0)
        with pytest.raises(ValueError, match="guard band"):
            s_expansion(p, 0.1)


class TestCountertermAndRescaling:
    def test_ohmic_value(self):
        p = SpectralParams(alpha=0.1, s=1.0, omega_c=10.0)
        assert counterterm_coefficient(p) == pytest.approx(0.5, rel=1e-14)
        oracle = quad(lambda w: spectral_density(p, w) / w / np.pi,
                      0, np.inf, epsabs=1e-13, limit=800)[0]
        assert counterterm_coefficient(p) == pytest.approx(oracle, rel=1e-9)

    def test_equals_minus_s_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            p = SpectralParams(alpha=float(rng.uniform(0.01, 2.0)),
                               s=float(rng.uniform(0.05, 1.0)),
                               omega_c=float(rng.uniform(0.5, 100.0)))
            s0 = half_fourier_asymptotic(p, 0.0).s_part
            assert counterterm_coefficient(p) == pytest.approx(-s0, rel=1e-12)

    def test_alpha_zero(self):
        assert counterterm_coefficient(SpectralParams(0.0, 0.5, 3.0)) == 0.0

    def test_rescaled_coupling_ohmic(self):
        p = SpectralParams(alpha=0.07, s=1.0, omega_c=123.0)
        assert rescaled_coupling(p) == 0.07

    def test_solve_alpha_roundtrip(self):
        a = solve_alpha(6.32e-2, 0.3, 10.0, 1.0)
        assert a == pytest.approx(6.32e-2 * 10 ** (-0.7), rel=1e-14)
        p = SpectralParams(alpha=a, s=0.3, omega_c=10.0)
        assert rescaled_coupling(p) == pytest.approx(6.32e-2, rel=1e-14)

    def test_s0_constraint_identity(self):
        # |S(0)|/omega_ref = alpha_tilde Gamma(s) (omega_c/omega_ref)^s / 2
        p = SpectralParams.from_rescaled(1.0e-2, 0.3, 50.0)
        lhs = abs(half_fourier_asymptotic(p, 0.0).s_part) / p.omega_ref
        rhs = rescaled_coupling(p) * Gamma(p.s) * (p.omega_c / p.omega_ref) ** p.s / 2
        assert lhs == pytest.approx(rhs, rel=1e-12)
