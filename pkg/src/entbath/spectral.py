"""Closed-form environment functions for a (sub-)Ohmic bosonic bath.

The environment is specified by the spectral density

    J(w) = (pi/2) * alpha * omega_c**(1-s) * w**s * exp(-w/omega_c),

with dimensionless coupling ``alpha``, exponent ``0 < s <= 1`` (Ohmic at
s=1, sub-Ohmic below) and cutoff ``omega_c``.  Everything else follows in
closed form:

* the zero-temperature bath correlation function
  ``alpha_bcf(tau) = (alpha/2) Gamma(s+1) omega_c^2 (1 + i omega_c tau)^-(s+1)``,
* the half-sided Fourier transform ``F(w) = J(w) + i S(w)`` of the BCF,
  evaluated through the analytic continuation of the upper incomplete
  gamma function (branch fixed by the eps -> 0+ limit),
* the small-argument expansion of S,
* the counterterm coefficient ``(alpha omega_c / 2) Gamma(s) = -S(0)``.

All functions are pure; frequencies are measured in units of a reference
frequency ``omega_ref`` (the first qubit frequency by convention).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import mpmath as mp
import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as _gamma

__all__ = [
    "SpectralParams",
    "HalfFourierValue",
    "spectral_density",
    "bcf_exact",
    "half_fourier_asymptotic",
    "half_fourier_finite",
    "half_fourier_numeric",
    "s_expansion",
    "counterterm_coefficient",
    "rescaled_coupling",
    "solve_alpha",
]

_EULER_GAMMA = float(mp.euler)

# guard band around the Gamma(-s) pole at s=1 (the expansion needs the
# dedicated Ohmic branch there)
_S_ONE_GUARD = 1e-6


@dataclass(frozen=True)
class SpectralParams:
    """Environment definition: coupling, exponent, cutoff.

    Attributes
    ----------
    alpha : float
        Dimensionless coupling strength, > 0 (0 allowed for the trivial
        decoupled limit).
    s : float
        Spectral-density exponent, in (0, 1].
    omega_c : float
        Cutoff frequency, > 0, in units of ``omega_ref``.
    omega_ref : float
        Reference frequency used for the rescaled coupling (default 1).
    """

    alpha: float
    s: float
    omega_c: float
    omega_ref: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 < self.s <= 1:
            raise ValueError(f"s must lie in (0, 1], got {self.s}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if not self.omega_ref > 0:
            raise ValueError(f"omega_ref must be > 0, got {self.omega_ref}")

    @classmethod
    def from_rescaled(cls, alpha_tilde, s, omega_c, omega_ref=1.0):
        """Construct from the rescaled coupling ``alpha_tilde``."""
        return cls(
            alpha=solve_alpha(alpha_tilde, s, omega_c, omega_ref),
            s=s,
            omega_c=omega_c,
            omega_ref=omega_ref,
        )

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)


@dataclass(frozen=True)
class HalfFourierValue:
    """One point of the half-sided Fourier transform F = j_part + i*s_part."""

    frequency: float
    j_part: float
    s_part: float

    @property
    def value(self) -> complex:
        return complex(self.j_part, self.s_part)


def spectral_density(p: SpectralParams, omega):
    """Spectral density J(omega) = (pi/2) alpha omega_c^(1-s) omega^s e^(-omega/omega_c).

    Parameters
    ----------
    p : SpectralParams
    omega : float or ndarray
        Frequency, must be >= 0.

    Returns
    -------
    float or ndarray
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral_density is defined for omega >= 0 only")
    out = (np.pi / 2) * p.alpha * p.omega_c ** (1 - p.s) * np.where(
        w > 0, w ** p.s * np.exp(-w / p.omega_c), 0.0
    )
    return out if out.ndim else float(out)


def bcf_exact(p: SpectralParams, tau):
    """Zero-temperature bath correlation function, closed form.

    alpha_bcf(tau) = (alpha/2) Gamma(s+1) omega_c^2 (1 + i omega_c tau)^-(s+1),
    which equals (1/pi) * int_0^inf J(w) exp(-i w tau) dw.

    Parameters
    ----------
    p : SpectralParams
    tau : float or ndarray, >= 0

    Returns
    -------
    complex or ndarray
    """
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise ValueError("bcf_exact requires tau >= 0")
    val = (
        0.5
        * p.alpha
        * _gamma(p.s + 1)
        * p.omega_c**2
        * (1 + 1j * p.omega_c * t) ** (-(p.s + 1))
    )
    return val if val.ndim else complex(val)


def _half_fourier_complex(p: SpectralParams, omega: float) -> complex:
    """F(omega) via the analytic continuation with the eps -> 0+ branch.

    F(w) = -i (alpha omega_c / 2) Gamma(s+1) e^{-x} (-z)^s Gamma(-s, -z)
    with x = w/omega_c and z = x + i*eps, eps -> 0+.  The tiny imaginary
    shift selects the branch of both the power and the incomplete gamma
    (principal branches, approached from below the negative real axis for
    x > 0).  Note only the incomplete gamma Gamma(-s, .) appears, which is
    finite at s = 1; the Gamma(-s) pole never gets evaluated here.
    """
    if p.alpha == 0:
        return 0.0 + 0.0j
    x = omega / p.omega_c
    if x == 0.0:
        # F(0) = J(0) + i S(0) with J(0) = 0 for s > 0
        return 1j * (-(p.alpha * _gamma(p.s) / 2) * p.omega_c)
    z = mp.mpc(x, 1e-300)
    val = (
        -1j
        * (p.alpha * p.omega_c / 2)
        * _gamma(p.s + 1)
        * mp.e ** (-x)
        * (-z) ** p.s
        * mp.gammainc(-p.s, -z)
    )
    return complex(val)


def half_fourier_asymptotic(p: SpectralParams, omega: float) -> HalfFourierValue:
    """Half-sided Fourier transform F(omega) = J(omega) + i S(omega).

    F(omega) = int_0^inf alpha_bcf(tau) exp(i omega tau) dtau, evaluated
    analytically.  Re F equals the spectral density for omega > 0 and
    vanishes for omega <= 0 (zero temperature); Im F is the induced-shift
    function S.
    """
    f = _half_fourier_complex(p, float(omega))
    if omega > 0:
        j_part = f.real
    else:
        # exact limit: the real part vanishes for omega <= 0; the mpmath
        # evaluation leaves ~1e-30 roundoff there
        j_part = 0.0
    return HalfFourierValue(frequency=float(omega), j_part=j_part, s_part=f.imag)


def s_values(p: SpectralParams, omegas) -> np.ndarray:
    """S(omega) on an array of frequencies (convenience wrapper)."""
    return np.array([half_fourier_asymptotic(p, w).s_part for w in np.atleast_1d(omegas)])


def half_fourier_finite(p: SpectralParams, omega: float, t: float) -> complex:
    """Finite-time transform F_t(omega) = int_0^t alpha_bcf(tau) e^{i omega tau} dtau.

    Evaluated by adaptive quadrature of the closed-form BCF; the e^{i w tau}
    oscillation is handled by Clenshaw-Curtis weighted quadrature.  Converges
    to ``half_fourier_asymptotic`` as t -> inf (algebraic tail).
    """
    if t < 0:
        raise ValueError("half_fourier_finite requires t >= 0")
    if t == 0 or p.alpha == 0:
        return 0.0 + 0.0j
    fr = lambda tau: bcf_exact(p, tau).real
    fi = lambda tau: bcf_exact(p, tau).imag
    kw = dict(epsabs=1e-12, epsrel=1e-12, limit=500)
    if omega == 0:
        re = quad(fr, 0, t, **kw)[0]
        im = quad(fi, 0, t, **kw)[0]
        return re + 1j * im
    aw = abs(omega)
    # oscillatory weights need a cycle limit scaled to the interval
    kw_osc = dict(epsabs=1e-12, epsrel=1e-12, limit=max(100, int(10 + aw * t)))
    rc = quad(fr, 0, t, weight="cos", wvar=aw, **kw_osc)[0]
    rs = quad(fr, 0, t, weight="sin", wvar=aw, **kw_osc)[0]
    ic = quad(fi, 0, t, weight="cos", wvar=aw, **kw_osc)[0]
    is_ = quad(fi, 0, t, weight="sin", wvar=aw, **kw_osc)[0]
    sgn = 1.0 if omega > 0 else -1.0
    return (rc - sgn * is_) + 1j * (sgn * rs + ic)


def half_fourier_numeric(p: SpectralParams, omega: float) -> complex:
    """Numeric Fourier integral F(omega) over the infinite half line.

    Independent quadrature oracle for ``half_fourier_asymptotic``: uses
    QAWF extrapolated oscillatory quadrature for omega != 0 and plain
    adaptive quadrature of the algebraic tail at omega = 0.
    """
    if p.alpha == 0:
        return 0.0 + 0.0j
    fr = lambda tau: bcf_exact(p, tau).real
    fi = lambda tau: bcf_exact(p, tau).imag
    if omega == 0:
        # finite window plus the closed-form algebraic tail
        # int_T^inf (1 + i w_c tau)^-(s+1) dtau = (1 + i w_c T)^-s / (i s w_c)
        t_cut = 200.0 / p.omega_c
        kw = dict(epsabs=1e-12, epsrel=1e-12, limit=1000)
        re = quad(fr, 0, t_cut, **kw)[0]
        im = quad(fi, 0, t_cut, **kw)[0]
        tail = (0.5 * p.alpha * _gamma(p.s + 1) * p.omega_c
                * (1 + 1j * p.omega_c * t_cut) ** (-p.s) / (1j * p.s))
        return re + 1j * im + tail
    aw = abs(omega)
    kw = dict(epsabs=1e-11, limit=1000, maxp1=200)
    rc = quad(fr, 0, np.inf, weight="cos", wvar=aw, **kw)[0]
    rs = quad(fr, 0, np.inf, weight="sin", wvar=aw, **kw)[0]
    ic = quad(fi, 0, np.inf, weight="cos", wvar=aw, **kw)[0]
    is_ = quad(fi, 0, np.inf, weight="sin", wvar=aw, **kw)[0]
    sgn = 1.0 if omega > 0 else -1.0
    return (rc - sgn * is_) + 1j * (sgn * rs + ic)


def s_expansion(p: SpectralParams, x: float) -> float:
    """Small-argument expansion of S at x = omega/omega_c.

    S(x) = -(alpha Gamma(s)/2) omega_c e^{-x} f(s, x) with

        f(s, x) = 1 + s g(s, x) Gamma(-s) |x|^s + s x/(s-1)        (s < 1)
        f(1, x) = 1 - x ln|x| + (1 - euler_gamma) x                (s = 1)
        g(s, x) = cos(pi s) for x > 0, 1 for x < 0.

    The neglected remainder is O(x^2).  Values of s inside a guard band
    around 1 (but not exactly 1) are rejected: Gamma(-s) is singular there
    and the Ohmic branch must be used instead.
    """
    s = p.s
    if s != 1.0 and abs(1.0 - s) < _S_ONE_GUARD:
        raise ValueError(
            "s is inside the guard band around 1; evaluate the Ohmic branch "
            "with s = 1 exactly (Gamma(-s) pole)"
        )
    if s == 1.0:
        if x == 0.0:
            f = 1.0
        else:
            f = 1.0 - x * np.log(abs(x)) + (1.0 - _EULER_GAMMA) * x
    else:
        if x == 0.0:
            f = 1.0
        else:
            g = np.cos(np.pi * s) if x > 0 else 1.0
            f = 1.0 + s * g * _gamma(-s) * abs(x) ** s + s * x / (s - 1.0)
    return -(p.alpha * _gamma(s) / 2) * p.omega_c * np.exp(-x) * f


def counterterm_coefficient(p: SpectralParams) -> float:
    """Counterterm coefficient (alpha omega_c / 2) Gamma(s).

    Equals (1/pi) int_0^inf J(w)/w dw and exactly -S(0).
    """
    return 0.5 * p.alpha * p.omega_c * _gamma(p.s)


def rescaled_coupling(p: SpectralParams) -> float:
    """Rescaled coupling alpha_tilde = alpha (omega_c/omega_ref)^(1-s)."""
    return p.alpha * (p.omega_c / p.omega_ref) ** (1 - p.s)


def solve_alpha(alpha_tilde: float, s: float, omega_c: float, omega_ref: float = 1.0) -> float:
    """Invert the rescaled-coupling definition for the bare alpha."""
    if alpha_tilde < 0:
        raise ValueError("alpha_tilde must be >= 0")
    return alpha_tilde * (omega_c / omega_ref) ** (s - 1)
