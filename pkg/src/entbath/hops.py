"""Exact reduced dynamics via the nonlinear hierarchy of pure states.

A trajectory is one realization of the complex Gaussian driving process
z(t) with E[z_t z*_s] = alpha_bcf(t-s), E[z_t z_s] = 0, propagated through
the stochastic hierarchy (see :mod:`entbath._hops_kernel`); the reduced
state is the ensemble average of normalized projectors
|psi^(0)><psi^(0)| / ||psi^(0)||^2.

Determinism: every trajectory seed derives from (master seed, trajectory
index), the ensemble reduction runs in fixed index order over fixed-size
chunks, and noise plans depend only on parameters -- the result is
bitwise-reproducible for any worker count.

The noise is built by frequency sampling of the exact spectral density
(midpoint grid, FFT synthesis); the fitted exponential BCF enters only
through the hierarchy coefficients.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammainccinv

from entbath._hops_kernel import (
    _DP_A,
    _DP_B4,
    _DP_B5,
    _DP_C,
    STATUS_NORM_COLLAPSE,
    STATUS_STEP_UNDERFLOW,
    build_hierarchy_tables,
    integrate_hops,
)
from entbath.bcf_fit import ExponentialBcf
from entbath.spectral import SpectralParams, bcf_exact, spectral_density
from entbath.two_qubit import SystemSpec, build_hamiltonian, coupling_operator

__all__ = [
    "HopsConfig",
    "NoiseRealization",
    "EnsembleResult",
    "TrajectoryError",
    "generate_noise",
    "integrate_trajectory",
    "run_ensemble",
    "worker_count",
]


class TrajectoryError(RuntimeError):
    """A hierarchy integration failed; carries the failing seed info."""

    def __init__(self, message, trajectory_index=None, seed_key=None, t_fail=None):
        super().__init__(message)
        self.trajectory_index = trajectory_index
        self.seed_key = seed_key
        self.t_fail = t_fail


@dataclass(frozen=True)
class HopsConfig:
    """Hierarchy run configuration.

    ``k_max`` is the simplex truncation depth (hierarchy size
    C(k_max + J, J) per sample for J exponential terms), ``dt`` the output
    step, ``seed`` the 64-bit master seed from which all trajectory seeds
    derive.  ``rtol``/``atol`` are the adaptive integrator tolerances.
    """

    bcf: ExponentialBcf
    p: SpectralParams
    k_max: int
    n_samples: int
    dt: float
    t_end: float
    seed: int
    nonlinear: bool = True
    rtol: float = 1e-8
    atol: float = 1e-12
    noise_tail_tol: float = 1e-3
    noise_pad: int = 16
    noise_oversample: int = 24
    chunk_size: int = 0  # 0: automatic

    def __post_init__(self):
        if self.k_max < 1 and self.p.alpha != 0:
            raise ValueError("k_max >= 1 required for nonzero coupling")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")

    @property
    def t_grid(self) -> np.ndarray:
        n = int(round(self.t_end / self.dt))
        return np.linspace(0.0, n * self.dt, n + 1)


@dataclass(frozen=True)
class NoiseRealization:
    """One realization of the driving process on a uniform grid.

    The integrator interpolates with a local 4-point cubic; ``sample``
    applies the identical rule.  Generation metadata (frequency grid,
    seed key) makes the realization reproducible.
    """

    t0: float
    h: float
    values: np.ndarray
    omega_max: float
    d_omega: float
    n_modes: int
    seed_key: tuple
    method: str = "midpoint-frequency-sampling-fft"

    def sample(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = len(self.values)
        x = (t - self.t0) / self.h
        m = np.clip(np.floor(x).astype(int), 1, n - 3)
        th = x - m
        a = -th * (th - 1) * (th - 2) / 6
        b = (th * th - 1) * (th - 2) / 2
        c = -th * (th + 1) * (th - 2) / 2
        d = th * (th * th - 1) / 6
        v = self.values
        return a * v[m - 1] + b * v[m] + c * v[m + 1] + d * v[m + 2]


def _bath_omega_max(p: SpectralParams, tail_tol: float) -> float:
    """Frequency beyond which J carries < tail_tol/4 of the BCF weight.

    A quarter of the covariance budget goes to the spectral tail; the rest
    is left for the frequency-grid discretization.
    """
    return float(gammainccinv(p.s + 1, 0.25 * tail_tol)) * p.omega_c


def _noise_plan(p: SpectralParams, n_t: int, h: float, pad: int, tail_tol: float):
    """Frequency grid (d_omega, n_modes, fft size) for a uniform time grid."""
    omega_max = _bath_omega_max(p, tail_tol)
    if omega_max * h > 2 * np.pi:
        raise ValueError(
            "time grid too coarse to resolve the bath bandwidth: "
            f"h = {h} but 2*pi/omega_max = {2 * np.pi / omega_max}")
    n_fft = 1 << int(np.ceil(np.log2(max(pad * n_t, 16))))
    if n_fft > (1 << 26):
        raise ValueError(
            f"noise synthesis would need a 2^{int(np.log2(n_fft))} FFT; "
            "reduce noise_pad / noise_oversample for this omega_c * t_end")
    d_omega = 2 * np.pi / (n_fft * h)
    n_modes = int(omega_max / d_omega) + 1
    return omega_max, d_omega, n_modes, n_fft


def _plan_covariance_error(p, d_omega, n_modes, t_check):
    """Max deviation of the discretized covariance from the exact BCF."""
    omegas = (np.arange(n_modes) + 0.5) * d_omega
    weights = spectral_density(p, omegas) * d_omega / np.pi
    cov = np.exp(-1j * np.outer(t_check, omegas)) @ weights
    return float(np.max(np.abs(cov - bcf_exact(p, t_check))))


def generate_noise(p: SpectralParams, t_grid, seed, check: bool = True,
                   pad: int = 16, tail_tol: float = 1e-3) -> NoiseRealization:
    """Draw one realization of the colored Gaussian process on ``t_grid``.

    z(t) = sum_k sqrt(J(w_k) dw / pi) xi_k exp(-i w_k t) over a midpoint
    frequency grid, synthesized by FFT.  The grid covers the spectral
    density up to a relative tail of ``tail_tol`` and resolves correlations
    over the full window (recurrence time >= pad * t_end); the resulting
    covariance error stays below tail_tol * |alpha_bcf(0)| (validated at
    construction when ``check`` is set).

    ``seed`` may be an integer or a tuple (master_seed, trajectory_index).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    h = t_grid[1] - t_grid[0]
    if not np.allclose(np.diff(t_grid), h, rtol=1e-10, atol=0):
        raise ValueError("t_grid must be uniform")
    n_t = len(t_grid)

    if p.alpha == 0:
        return NoiseRealization(t0=float(t_grid[0]), h=float(h),
                                values=np.zeros(n_t, dtype=complex),
                                omega_max=0.0, d_omega=0.0, n_modes=0,
                                seed_key=tuple(np.atleast_1d(seed)))

    omega_max, d_omega, n_modes, n_fft = _noise_plan(p, n_t, h, pad, tail_tol)
    scale = abs(bcf_exact(p, 0.0))
    if check:
        t_check = np.linspace(0.0, t_grid[-1] - t_grid[0], 97)
        err = _plan_covariance_error(p, d_omega, n_modes, t_check)
        tries = 0
        while err > tail_tol * scale and tries < 6:
            n_fft *= 2
            d_omega = 2 * np.pi / (n_fft * h)
            n_modes = int(omega_max / d_omega) + 1
            err = _plan_covariance_error(p, d_omega, n_modes, t_check)
            tries += 1
        if err > tail_tol * scale:
            raise ValueError(
                f"t_end exceeds the resolvable correlation window: "
                f"covariance error {err:.2e} > {tail_tol * scale:.2e}")

    seed_key = tuple(int(x) for x in np.atleast_1d(seed))
    ss = np.random.SeedSequence(entropy=seed_key[0],
                                spawn_key=tuple(seed_key[1:]))
    rng = np.random.Generator(np.random.PCG64(ss))
    xi = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)) \
        / np.sqrt(2.0)
    omegas = (np.arange(n_modes) + 0.5) * d_omega
    amps = np.sqrt(spectral_density(p, omegas) * d_omega / np.pi) * xi
    if t_grid[0] != 0.0:
        amps = amps * np.exp(-1j * omegas * t_grid[0])

    spec = np.zeros(n_fft, dtype=complex)
    spec[:n_modes] = amps
    series = np.fft.fft(spec)[:n_t]
    n = np.arange(n_t)
    # half-bin shift of the midpoint frequency grid
    z = series * np.exp(-1j * np.pi * n / n_fft)
    return NoiseRealization(t0=float(t_grid[0]), h=float(h), values=z,
                            omega_max=omega_max, d_omega=d_omega,
                            n_modes=n_modes, seed_key=seed_key)


@dataclass(frozen=True)
class Trajectory:
    """Normalized top-level trajectory of one hierarchy integration."""

    t: np.ndarray
    psi: np.ndarray        # normalized psi^(0), shape (n_t, 4)
    psi_raw: np.ndarray
    norms: np.ndarray


def _hierarchy_inputs(cfg: HopsConfig, hamiltonian, coupling):
    g = cfg.bcf.amplitudes
    w = cfg.bcf.rates
    n_terms = len(g)
    idx, down, up = build_hierarchy_tables(n_terms, cfg.k_max)
    k_w = idx.astype(complex) @ w
    k_g = idx.astype(complex) * g[None, :]
    m_h = -1j * hamiltonian.astype(complex)
    return idx, down, up, k_w, k_g, m_h, np.conj(w), np.conj(g)


def _noise_grid(cfg: HopsConfig):
    omega_max = _bath_omega_max(cfg.p, cfg.noise_tail_tol)
    if cfg.p.alpha == 0:
        h = cfg.dt
    else:
        h = min(cfg.dt, 2 * np.pi / (omega_max * cfg.noise_oversample))
    n = int(np.ceil(cfg.t_end / h)) + 4  # stencil margin past t_end
    return np.linspace(0.0, n * h, n + 1)


def integrate_trajectory(cfg: HopsConfig, sys: SystemSpec, psi0, noise,
                         hamiltonian=None, coupling=None) -> Trajectory:
    """Propagate one noise realization through the hierarchy.

    ``hamiltonian``/``coupling`` override the operators built from ``sys``
    (used by validation studies, e.g. pure-dephasing embeddings); the
    defaults are build_hamiltonian(sys, p) and L = (sz^A + sz^B)/2.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalized")
    h_mat = hamiltonian if hamiltonian is not None else build_hamiltonian(sys, cfg.p)
    l_mat = coupling if coupling is not None else coupling_operator()

    idx, down, up, k_w, k_g, m_h, conj_w, conj_g = _hierarchy_inputs(
        cfg, h_mat, l_mat)
    n_aux = idx.shape[0]
    n_terms = idx.shape[1]
    t_out = cfg.t_grid

    y0 = np.zeros(4 * n_aux + n_terms, dtype=complex)
    y0[:4] = psi0

    out_psi = np.empty((len(t_out), 4), dtype=complex)
    out_norm = np.empty(len(t_out))
    status, t_reached = integrate_hops(
        y0, t_out, cfg.rtol, cfg.atol, m_h, l_mat.astype(complex), k_w,
        down, up, k_g, conj_w, conj_g, noise.values, noise.t0, noise.h,
        _DP_A, _DP_B5, _DP_B4, _DP_C, cfg.nonlinear, out_psi, out_norm)
    if status == STATUS_STEP_UNDERFLOW:
        raise TrajectoryError(
            f"integrator step underflow at t = {t_reached}",
            seed_key=noise.seed_key, t_fail=t_reached)
    if status == STATUS_NORM_COLLAPSE:
        raise TrajectoryError(
            f"norm of psi^(0) collapsed below 1e-12 at t = {t_reached}",
            seed_key=noise.seed_key, t_fail=t_reached)
    psi_norm = out_psi / out_norm[:, None]
    return Trajectory(t=t_out, psi=psi_norm, psi_raw=out_psi, norms=out_norm)


# ---------------------------------------------------------------------------
# ensemble averaging
# ---------------------------------------------------------------------------

@dataclass
class EnsembleResult:
    """Ensemble-averaged reduced dynamics with convergence records."""

    t: np.ndarray
    rho: np.ndarray                 # (n_t, 4, 4)
    concurrence: np.ndarray
    concurrence_stderr: np.ndarray
    ladder: dict
    metadata: dict
    chunk_concurrence: np.ndarray | None = None  # (n_chunks, n_t) batch means


def worker_count() -> int:
    """Worker-pool size, controlled by the ENTBATH_WORKERS variable only."""
    return max(1, int(os.environ.get("ENTBATH_WORKERS", "1")))


def _chunk_task(cfg: HopsConfig, sys: SystemSpec, psi0, indices,
                hamiltonian, coupling):
    """Sum of normalized projectors over a contiguous trajectory block."""
    t_noise = _noise_grid(cfg)
    n_t = len(cfg.t_grid)
    acc = np.zeros((n_t, 4, 4), dtype=complex)
    for idx in indices:
        noise = generate_noise(cfg.p, t_noise, (cfg.seed, idx), check=False,
                               pad=cfg.noise_pad, tail_tol=cfg.noise_tail_tol)
        try:
            traj = integrate_trajectory(cfg, sys, psi0, noise,
                                        hamiltonian=hamiltonian,
                                        coupling=coupling)
        except TrajectoryError as exc:
            exc.trajectory_index = idx
            raise
        if cfg.nonlinear:
            acc += np.einsum("ti,tj->tij", traj.psi, traj.psi.conj())
        else:
            acc += np.einsum("ti,tj->tij", traj.psi_raw, traj.psi_raw.conj())
    return acc


def _chunk_plan(n_samples: int, chunk_size: int):
    """Fixed chunks, boundaries aligned with the half-ensemble split."""
    if chunk_size <= 0:
        chunk_size = int(np.clip(n_samples // 48, 8, 256))
    half = n_samples // 2
    chunks = []
    for lo, hi in ((0, half), (half, n_samples)):
        start = lo
        while start < hi:
            stop = min(start + chunk_size, hi)
            chunks.append(range(start, stop))
            start = stop
    return chunks


def run_ensemble(cfg: HopsConfig, sys: SystemSpec, psi0, ladder: bool = True,
                 hamiltonian=None, coupling=None) -> EnsembleResult:
    """Average normalized projectors over ``cfg.n_samples`` trajectories.

    Per-trajectory seeds derive from (master seed, index), so the result
    does not depend on the worker count or scheduling; the reduction runs
    in fixed chunk order.  ``ladder=True`` additionally reruns the ensemble
    at k_max - 1 and compares the first-half average with the full one
    (convergence ladder).  Trajectory failures abort the ensemble with the
    failing seed recorded on the exception.
    """
    from entbath.two_qubit import concurrence as _concurrence

    # noise plan sanity check, once for the whole ensemble
    t_noise = _noise_grid(cfg)
    generate_noise(cfg.p, t_noise, (cfg.seed, 0), check=True,
                   pad=cfg.noise_pad, tail_tol=cfg.noise_tail_tol)

    t_start = time.perf_counter()
    chunks = _chunk_plan(cfg.n_samples, cfg.chunk_size)
    args = [(cfg, sys, np.asarray(psi0, dtype=complex), ch, hamiltonian,
             coupling) for ch in chunks]

    n_workers = worker_count()
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunk_sums = list(pool.map(_chunk_task_star, args))
    else:
        chunk_sums = [_chunk_task_star(a) for a in args]

    n_t = len(cfg.t_grid)
    total = np.zeros((n_t, 4, 4), dtype=complex)
    half_total = np.zeros_like(total)
    half = cfg.n_samples // 2
    for ch, s in zip(chunks, chunk_sums):
        total += s
        if ch.stop <= half:
            half_total += s

    rho = total / cfg.n_samples
    if not cfg.nonlinear:
        # linear variant: raw projectors average to rho only statistically;
        # normalize the trace and record the deviation
        traces = np.einsum("tii->t", rho).real
        trace_dev = float(np.max(np.abs(traces - 1.0)))
        rho = rho / traces[:, None, None]
    else:
        trace_dev = float(np.max(np.abs(np.einsum("tii->t", rho).real - 1.0)))

    # exactness of projector averaging: Hermitian, unit trace
    assert np.max(np.abs(rho - np.conj(np.transpose(rho, (0, 2, 1))))) < 1e-12
    if cfg.nonlinear:
        assert trace_dev < 1e-12

    conc = np.array([_concurrence(r) for r in rho])

    # batch-means standard error from chunk averages
    chunk_conc = []
    for ch, s in zip(chunks, chunk_sums):
        m = s / len(ch)
        tr = np.einsum("tii->t", m).real
        m = m / tr[:, None, None]
        chunk_conc.append([_concurrence(r) for r in m])
    chunk_conc = np.array(chunk_conc)
    n_chunks = len(chunks)
    stderr = (chunk_conc.std(axis=0, ddof=1) / np.sqrt(n_chunks)
              if n_chunks > 1 else np.zeros(n_t))

    ladder_rec = {"k_max": cfg.k_max, "n_samples": cfg.n_samples}
    if half > 0:
        rho_half = half_total / half
        tr = np.einsum("tii->t", rho_half).real
        rho_half = rho_half / tr[:, None, None]
        c_half = np.array([_concurrence(r) for r in rho_half])
        ladder_rec["half_samples_sup_dc"] = float(np.max(np.abs(c_half - conc)))
    if ladder and cfg.k_max > 1 and cfg.p.alpha != 0:
        sub = run_ensemble(replace(cfg, k_max=cfg.k_max - 1), sys, psi0,
                           ladder=False, hamiltonian=hamiltonian,
                           coupling=coupling)
        ladder_rec["k_minus_one_sup_dc"] = float(
            np.max(np.abs(sub.concurrence - conc)))

    meta = {
        "seed": cfg.seed,
        "nonlinear": cfg.nonlinear,
        "k_max": cfg.k_max,
        "n_samples": cfg.n_samples,
        "rtol": cfg.rtol,
        "atol": cfg.atol,
        "chunk_count": n_chunks,
        "trace_deviation": trace_dev,
        "wall_time_s": time.perf_counter() - t_start,
        "workers": n_workers,
    }
    return EnsembleResult(t=cfg.t_grid, rho=rho, concurrence=conc,
                          concurrence_stderr=stderr, ladder=ladder_rec,
                          metadata=meta, chunk_concurrence=chunk_conc)


def _chunk_task_star(a):
    return _chunk_task(*a)
