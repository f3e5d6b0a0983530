"""Sum-of-exponentials approximation of the algebraically decaying BCF.

The hierarchy solver needs the bath correlation function in the form
``alpha_bcf(tau) ~ sum_j G_j exp(-W_j tau)`` with ``Re W_j > 0``.  The exact
zero-temperature kernel decays algebraically, so the fit is a genuine
approximation problem: we minimize the maximum absolute deviation over a
log-spaced grid on ``[0, t_max]``, normalized by ``|alpha_bcf(0)|`` so that
a reported error of 1e-3 means the same thing for every ``(alpha, s,
omega_c)``.

The optimizer is multi-start nonlinear least squares (variable rates and
complex amplitudes) refined towards the sup norm by Lawson-style iterative
reweighting and a p-norm homotopy.  Start candidates come from

* rate ladders spanning the decay scales of the window,
* a discretization of the exact integral representation of the kernel
  along a rotated contour (generalized Gauss-Laguerre nodes),
* banked rate tables for the standard exponents (results of long offline
  searches with the same machinery).

Fits are deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq
from scipy.optimize import least_squares
from scipy.special import roots_genlaguerre

from entbath.spectral import SpectralParams, bcf_exact

__all__ = [
    "ExponentialBcf",
    "FitConvergenceError",
    "FitReport",
    "fit_bcf",
    "fit_kernel",
    "eval_fit",
    "fit_report",
    "default_t_max",
]


class FitConvergenceError(RuntimeError):
    """Raised when no multi-start candidate produced a finite fit.

    Carries the best fit found so far (possibly None) in ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class ExponentialBcf:
    """Fitted representation alpha_bcf(tau) ~ sum_j G_j exp(-W_j tau).

    Attributes
    ----------
    terms : tuple of (complex, complex)
        Pairs (G_j, W_j) with Re W_j > 0, sorted by |G_j| descending.
    t_max : float
        End of the fit window (same time units as 1/omega_ref).
    max_abs_err : float
        Certified maximum absolute deviation from the exact BCF on a dense
        check grid over [0, t_max], in physical units.
    norm_scale : float
        |alpha_bcf(0)|; max_abs_err / norm_scale is the scale-free error.
    """

    terms: tuple
    t_max: float
    max_abs_err: float
    norm_scale: float

    def __post_init__(self):
        for g, w in self.terms:
            if not complex(w).real > 0:
                raise ValueError(f"decaying terms only: Re W must be > 0, got {w}")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([g for g, _ in self.terms], dtype=complex)

    @property
    def rates(self) -> np.ndarray:
        return np.array([w for _, w in self.terms], dtype=complex)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def __call__(self, tau):
        return eval_fit(self, tau)

    def half_fourier(self, omega: float, t: float | None = None) -> complex:
        """Closed-form (finite-time) half-sided transform of the fit.

        F(omega)   = sum_j G_j / (W_j - i omega)             for t = None,
        F_t(omega) = sum_j G_j (1 - e^{(i omega - W_j) t}) / (W_j - i omega).
        """
        g, w = self.amplitudes, self.rates
        if len(g) == 0:
            return 0.0 + 0.0j
        denom = w - 1j * omega
        if t is None:
            return complex(np.sum(g / denom))
        return complex(np.sum(g * (1.0 - np.exp(-denom * t)) / denom))

    def to_json(self, p: SpectralParams | None = None) -> str:
        doc = {
            "alpha": p.alpha if p else None,
            "s": p.s if p else None,
            "omega_c": p.omega_c if p else None,
            "terms": [[g.real, g.imag, w.real, w.imag] for g, w in self.terms],
            "t_max": self.t_max,
            "max_abs_err": self.max_abs_err,
            "norm_scale": self.norm_scale,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExponentialBcf":
        doc = json.loads(text)
        terms = tuple(
            (complex(gr, gi), complex(wr, wi)) for gr, gi, wr, wi in doc["terms"]
        )
        return cls(
            terms=terms,
            t_max=doc["t_max"],
            max_abs_err=doc["max_abs_err"],
            norm_scale=doc["norm_scale"],
        )


def eval_fit(f: ExponentialBcf, tau):
    """Evaluate sum_j G_j exp(-W_j tau) (tau may be an array)."""
    t = np.asarray(tau, dtype=float)
    if f.n_terms == 0:
        out = np.zeros(t.shape, dtype=complex)
        return out if out.ndim else 0j
    out = np.exp(-np.multiply.outer(t, f.rates)) @ f.amplitudes
    return out if out.ndim else complex(out)


def default_t_max(p: SpectralParams) -> float:
    """Fit window such that |alpha_bcf(t_max)| / |alpha_bcf(0)| = 1e-4.

    For the algebraic kernel this is omega_c * t_max = 10^(4/(s+1)), which
    covers the relaxation horizon of all scenarios studied here.
    """
    return 10.0 ** (4.0 / (p.s + 1.0)) / p.omega_c


# ---------------------------------------------------------------------------
# core fitting machinery (normalized units)
# ---------------------------------------------------------------------------

def _pack(g, w):
    return np.concatenate([g.real, g.imag, np.log(w.real), w.imag])


def _unpack(x, n):
    return x[:n] + 1j * x[n:2 * n], np.exp(x[2 * n:3 * n]) + 1j * x[3 * n:]


def _eval_terms(g, w, u):
    return np.exp(-np.multiply.outer(u, w)) @ g


def _solve_amplitudes(w, u, target, weights):
    a = np.exp(-np.multiply.outer(u, w)) * np.sqrt(weights)[:, None]
    g, *_ = lstsq(a, target * np.sqrt(weights), lapack_driver="gelsd")
    return g


def _refine_ls(g0, w0, u, target, weights, max_nfev=1200):
    """Weighted nonlinear least squares over all amplitudes and rates."""
    n = len(g0)
    sw = np.sqrt(weights)

    def resid(x):
        g, w = _unpack(x, n)
        r = (_eval_terms(g, w, u) - target) * sw
        return np.concatenate([r.real, r.imag])

    lo = np.concatenate([
        np.full(2 * n, -1e3), np.full(n, np.log(1e-7)), np.full(n, -60.0)])
    hi = np.concatenate([
        np.full(2 * n, 1e3), np.full(n, np.log(1e4)), np.full(n, 60.0)])
    x0 = np.clip(_pack(g0, w0), lo + 1e-9, hi - 1e-9)
    sol = least_squares(resid, x0, bounds=(lo, hi), method="trf",
                        max_nfev=max_nfev, x_scale="jac")
    return _unpack(sol.x, n)


def _sup_err(g, w, target_fn, u_max, n_dense):
    ud = np.concatenate([[0.0], np.geomspace(1e-4 * min(1.0, u_max), u_max, n_dense)])
    return float(np.max(np.abs(_eval_terms(g, w, ud) - target_fn(ud))))


def _ladder_starts(n_terms, u_max, rng, n_random):
    spans = [(0.5, 3.0), (0.2, 2.0), (1.0, 5.0), (0.5, 8.0), (0.1, 1.5)]
    starts = []
    for lo, hi in spans:
        starts.append(np.geomspace(lo / u_max, hi, n_terms).astype(complex))
    for _ in range(n_random):
        lo, hi = spans[rng.integers(len(spans))]
        base = np.geomspace(lo / u_max, hi, n_terms)
        w = base * np.exp(rng.normal(0.0, 0.35, n_terms)) \
            + 1j * rng.normal(0.0, 0.3, n_terms)
        starts.append(w)
    return starts


def _contour_starts(s, n_terms):
    """Rates from the exact integral representation of (1+iu)^-(s+1).

    (1+iu)^-(s+1) = 1/Gamma(s+1) int_0^inf l^s e^-l e^-ilu dl; rotating the
    contour l -> r e^{-i theta} and applying generalized Gauss-Laguerre
    quadrature gives decaying rates W = i r e^{-i theta}.
    """
    starts = []
    r, _ = roots_genlaguerre(n_terms, s)
    for theta in (0.5, 0.8, 1.1):
        starts.append(1j * r * np.exp(-1j * theta))
    return starts


# Banked rates (normalized units u = omega_c * tau) for 5-term fits of the
# standard exponents on the default window: output of long offline runs of
# this same optimizer, kept as warm starts so production fits are fast and
# reproducibly below the 1e-3 target.  Keyed by (s, n_terms).
_RATE_BANK = {
    (0.1, 5): [
        +1.143528927101e-02+4.908790521663e-04j,
        +2.388198940408e+00+2.872129570029e+00j,
        +1.069182051309e-01+1.447168874897e-02j,
        +1.234237398016e+00+8.524571020818e-01j,
        +4.566027195564e-01+1.628056478439e-01j,
    ],
    (0.3, 5): [
        +1.710446901593e-01+3.414362248910e-02j,
        +2.334821463715e-02+1.537444055605e-03j,
        +2.700623201535e+00+3.356663056875e+00j,
        +1.493850542616e+00+1.122236213546e+00j,
        +6.211434528173e-01+2.639360773324e-01j,
    ],
    (0.5, 5): [
        +7.916523291723e-01+3.808657254239e-01j,
        +2.990083579022e+00+3.820961526833e+00j,
        +1.740066348524e+00+1.397442815741e+00j,
        +2.481000317356e-01+6.183676765762e-02j,
        +4.102470764215e-02+3.785869062335e-03j,
    ],
    (0.7, 5): [
        +3.293693812989e+00+4.358395174986e+00j,
        +1.004003542082e+00+5.411448145072e-01j,
        +6.925471070582e-02+8.404074149724e-03j,
        +2.014188974072e+00+1.732933715208e+00j,
        +3.573021016719e-01+1.051026671802e-01j,
    ],
    (1.0, 5): [
        +4.780757298323e-01+1.680565950717e-01j,
        +2.270605148189e+00+2.081216042685e+00j,
        +1.088759218096e-01+1.750992667819e-02j,
        +1.208844523874e+00+7.250948160002e-01j,
        +3.571285565381e+00+4.892964828781e+00j,
    ],
}


def _bank_starts(s, n_terms):
    starts = []
    for (sb, nb), w in _RATE_BANK.items():
        if nb == n_terms and abs(sb - s) < 5e-3:
            starts.append(np.asarray(w, dtype=complex))
    return starts


def fit_kernel(target_fn, n_terms, u_max, grid_points=600, seed=0,
               n_starts=8, lawson_iters=12, polish=True):
    """Fit ``target_fn(u)`` on [0, u_max] by ``n_terms`` decaying exponentials.

    Parameters
    ----------
    target_fn : callable
        Maps an array of u >= 0 to complex kernel values.
    n_terms : int
        Number of exponential terms (<= 12).
    u_max : float
        Fit window end.
    grid_points : int
        Points of the log-spaced optimization grid (>= 10 * n_terms).
    seed : int
        Multi-start RNG seed; fixed seed gives a bitwise-identical fit.
    n_starts : int
        Random ladder starts added to the deterministic candidate pool.
    lawson_iters : int
        Sup-norm reweighting iterations per candidate.
    polish : bool
        Run the p-norm homotopy on the incumbent.

    Returns
    -------
    (g, w, err) : amplitudes, rates, dense-grid max abs error.
    """
    if n_terms < 1 or n_terms > 12:
        raise ValueError("n_terms must be in 1..12")
    if grid_points < 10 * n_terms:
        raise ValueError("grid_points must be >= 10 * n_terms")
    rng = np.random.default_rng(seed)
    u = np.concatenate([[0.0], np.geomspace(3e-4 * min(1.0, u_max), u_max,
                                            grid_points - 1)])
    target = target_fn(u)
    n_dense = 4 * len(u)

    candidates = _ladder_starts(n_terms, u_max, rng, n_random=n_starts)
    candidates += _contour_starts_safe(n_terms, target_fn)
    best = None  # (err, g, w)

    for w0 in candidates:
        w0 = np.asarray(w0, dtype=complex)
        w0 = np.where(w0.real > 1e-7, w0, w0 - w0.real + 1e-6)
        weights = np.ones_like(u)
        try:
            g = _solve_amplitudes(w0, u, target, weights)
            g, w = _refine_ls(g, w0, u, target, weights)
            cand_best = (_sup_err(g, w, target_fn, u_max, n_dense), g, w)
            for _ in range(lawson_iters):
                r = np.abs(_eval_terms(g, w, u) - target)
                weights = weights * np.maximum(r, 1e-14)
                weights /= weights.mean()
                g, w = _refine_ls(g, w, u, target, weights)
                err = _sup_err(g, w, target_fn, u_max, n_dense)
                if err < cand_best[0]:
                    cand_best = (err, g, w)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(cand_best[1])) or not np.all(np.isfinite(cand_best[2])):
            continue
        if best is None or cand_best[0] < best[0]:
            best = cand_best

    if best is None:
        raise FitConvergenceError("no multi-start candidate converged", best=None)

    if polish:
        err, g, w = best
        for p_norm in (4, 8, 16, 32):
            try:
                r = np.abs(_eval_terms(g, w, u) - target)
                weights = np.maximum(r, 1e-14) ** (p_norm - 2)
                weights /= weights.mean()
                g2, w2 = _refine_ls(g, w, u, target, weights)
            except (np.linalg.LinAlgError, ValueError):
                break
            err2 = _sup_err(g2, w2, target_fn, u_max, n_dense)
            if err2 < err:
                err, g, w = err2, g2, w2
        best = (err, g, w)

    err, g, w = best
    order = np.lexsort((w.real, -np.abs(g)))
    return g[order], w[order], err


def _contour_starts_safe(n_terms, target_fn):
    # the contour construction needs the kernel exponent; recover it from the
    # large-u slope of the target when possible, otherwise skip
    u_probe = np.geomspace(10.0, 100.0, 8)
    vals = np.abs(target_fn(u_probe))
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        return []
    slope = -np.polyfit(np.log(u_probe), np.log(vals), 1)[0]
    s_est = slope - 1.0
    if not 0.0 < s_est <= 1.2:
        return []
    return _contour_starts(min(s_est, 1.0), n_terms) + _bank_starts(s_est, n_terms)


def fit_bcf(p: SpectralParams, n_terms: int, t_max: float | None = None,
            grid_points: int = 600, seed: int = 0, n_starts: int = 8,
            lawson_iters: int = 12,
            early_stop_norm_err: float | None = None) -> ExponentialBcf:
    """Fit the exact BCF of ``p`` by ``n_terms`` decaying exponentials.

    The optimization runs on the scale-free kernel (1 + i u)^-(s+1) with
    u = omega_c * tau, so the achieved error is relative to
    |alpha_bcf(0)| by construction; results are rescaled to physical units.
    The certified ``max_abs_err`` is measured on a grid four times denser
    than the optimization grid.

    ``early_stop_norm_err`` short-circuits the multi-start search when a
    banked warm start already polishes below the given normalized error
    (production runs pass the 1e-3 target here).  A too-small ``n_terms``
    is not an error: inspect ``max_abs_err``.
    """
    if t_max is None:
        t_max = default_t_max(p)
    if t_max <= 0:
        raise ValueError("t_max must be > 0")
    s = p.s
    u_max = p.omega_c * t_max
    kernel = lambda u: (1 + 1j * u) ** (-(s + 1))

    bank = _bank_starts(s, n_terms)
    g, w, err = None, None, np.inf
    for w0 in bank:
        try:
            gb, wb, eb = _polish_from(kernel, w0, n_terms, u_max, grid_points)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if eb < err:
            g, w, err = gb, wb, eb
    if not (early_stop_norm_err is not None and err <= early_stop_norm_err):
        gs, ws, es = fit_kernel(kernel, n_terms, u_max,
                                grid_points=grid_points, seed=seed,
                                n_starts=n_starts, lawson_iters=lawson_iters)
        if es < err:
            g, w, err = gs, ws, es

    scale = abs(bcf_exact(p, 0.0))
    terms = tuple(
        (complex(scale * gj), complex(p.omega_c * wj)) for gj, wj in zip(g, w)
    )
    return ExponentialBcf(terms=terms, t_max=float(t_max),
                          max_abs_err=float(err * scale), norm_scale=scale)


def _chebyshev_amplitudes(w, u, target, target_fn, u_max, n_dense,
                          iters=40):
    """Sup-norm-optimal amplitudes at fixed rates (Lawson on a convex problem)."""
    weights = np.ones_like(u)
    g = _solve_amplitudes(w, u, target, weights)
    best = (_sup_err(g, w, target_fn, u_max, n_dense), g)
    for _ in range(iters):
        r = np.abs(_eval_terms(g, w, u) - target)
        weights = weights * np.maximum(r, 1e-14)
        weights /= weights.mean()
        g = _solve_amplitudes(w, u, target, weights)
        err = _sup_err(g, w, target_fn, u_max, n_dense)
        if err < best[0]:
            best = (err, g)
    return best[1], best[0]


def _polish_from(target_fn, w0, n_terms, u_max, grid_points):
    """Lawson + p-norm polish from a fixed rate table (no random starts)."""
    u = np.concatenate([[0.0], np.geomspace(3e-4 * min(1.0, u_max), u_max,
                                            grid_points - 1)])
    target = target_fn(u)
    n_dense = 4 * len(u)
    w0 = np.asarray(w0, complex)
    # amplitude-only minimax at the banked rates first: convex, cheap, and
    # preserves the equioscillation quality of the stored optimum
    g, err0 = _chebyshev_amplitudes(w0, u, target, target_fn, u_max, n_dense)
    best = (err0, g, w0)
    weights = np.ones_like(u)
    g, w = _refine_ls(g, w0, u, target, weights)
    err = _sup_err(g, w, target_fn, u_max, n_dense)
    if err < best[0]:
        best = (err, g, w)
    for _ in range(14):
        r = np.abs(_eval_terms(g, w, u) - target)
        weights = weights * np.maximum(r, 1e-14)
        weights /= weights.mean()
        g, w = _refine_ls(g, w, u, target, weights)
        err = _sup_err(g, w, target_fn, u_max, n_dense)
        if err < best[0]:
            best = (err, g, w)
    err, g, w = best
    for p_norm in (4, 8, 16, 32):
        r = np.abs(_eval_terms(g, w, u) - target)
        weights = np.maximum(r, 1e-14) ** (p_norm - 2)
        weights /= weights.mean()
        g2, w2 = _refine_ls(g, w, u, target, weights)
        err2 = _sup_err(g2, w2, target_fn, u_max, n_dense)
        if err2 < err:
            err, g, w = err2, g2, w2
    g2, err2 = _chebyshev_amplitudes(w, u, target, target_fn, u_max, n_dense)
    if err2 < err:
        err, g = err2, g2
    return g, w, err


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitReport:
    """Per-tau error profile of a fit against the exact BCF."""

    tau: np.ndarray
    abs_err: np.ndarray
    rel_err: np.ndarray
    max_abs_err: float
    max_norm_err: float   # max_abs_err / norm_scale
    tau_star: float       # tracking horizon: largest tau with rel err < 10%


def fit_report(f: ExponentialBcf, p: SpectralParams, n_points: int = 2000) -> FitReport:
    """Tabulate |fit - exact| over [0, t_max] and the tracking horizon.

    ``tau_star`` is the largest time up to which the fit follows the
    algebraic decay within 10% relative error (the horizon grows with the
    number of terms).
    """
    tau = np.concatenate([[0.0],
                          np.geomspace(1e-4 * f.t_max, f.t_max, n_points - 1)])
    exact = bcf_exact(p, tau)
    approx = eval_fit(f, tau)
    abs_err = np.abs(approx - exact)
    rel_err = abs_err / np.abs(exact)
    bad = np.nonzero(rel_err >= 0.10)[0]
    tau_star = float(f.t_max if len(bad) == 0 else tau[bad[0]])
    return FitReport(
        tau=tau,
        abs_err=abs_err,
        rel_err=rel_err,
        max_abs_err=float(abs_err.max()),
        max_norm_err=float(abs_err.max() / f.norm_scale),
        tau_star=tau_star,
    )
