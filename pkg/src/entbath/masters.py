"""Perturbative generators: QOME, PRWA, Redfield, GAME, coarse graining.

All equations share the ingredients J(omega) (dissipation rates) and
S(omega) (induced Hamiltonian shifts) from the half-sided transform of the
BCF, and the decomposition L = sum_i L_i of the coupling operator over
transition frequencies.  The family is organized around a secular pair
rule on the double sum over transitions:

* QOME   -- diagonal pairs only (full rotating-wave approximation),
* PRWA   -- pairs with equal frequency signs,
* RFE    -- no restriction; the generator is kept in its native
            (non-GKSL) form  drho = -i[H,rho] + sum_i F(w_i)[L_i rho, L] + h.c.
            with asymptotic F or the running integral F_t,
* GAME   -- GKSL repair of the RFE: geometric-mean rates, equivalently the
            single jump operator W = sum_i sqrt(2 J(w_i)) L_i, with the
            unitary part identified from the RFE before the approximation,
* CGME   -- generator time-averaged over a window cg_tau (positivity
            preserving for every window), with the sign-function Hermitian
            shift.

Rate normalization is anchored by the resonant QOME Lamb shift (local part
plus (S(w_A)+S(-w_A))/8 (sz sz + sy sy)) together with the golden-rule
decay rate 2 J(w) of the Redfield form; the same anchor fixes the
coarse-graining limit CGME -> QOME for large windows.

Each generator decomposes into parts {hamiltonian, counterterm,
lamb_shift, dissipator}; for the Redfield kinds the lamb_shift/dissipator
selection keeps the imaginary/real part of the F coefficients (there is no
separate additive Lamb matrix -- the unitary influence lives inside the
F terms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from entbath.spectral import (
    SpectralParams,
    bcf_exact,
    half_fourier_asymptotic,
    half_fourier_finite,
    rescaled_coupling,
)
from entbath.two_qubit import (
    SystemSpec,
    counterterm_operator,
    coupling_operator,
    system_hamiltonian,
    transition_decomposition,
)

__all__ = [
    "MasterEquationSpec",
    "KINDS",
    "ALL_PARTS",
    "secular_pairs",
    "lamb_shift",
    "build_generator",
    "propagate",
    "timescale_report",
    "counterterm_cancellation_metrics",
]

KINDS = ("QOME", "PRWA", "RFE_asym", "RFE_t", "GAME", "CGME")
ALL_PARTS = frozenset({"hamiltonian", "lamb_shift", "dissipator", "counterterm"})
DEFAULT_PARTS = frozenset({"hamiltonian", "lamb_shift", "dissipator"})


@dataclass(frozen=True)
class MasterEquationSpec:
    """Which generator, which parts, for which system and environment."""

    kind: str
    sys: SystemSpec
    p: SpectralParams
    parts: frozenset = DEFAULT_PARTS
    cg_tau: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        parts = frozenset(self.parts)
        if not parts:
            raise ValueError("parts must be nonempty")
        if not parts <= ALL_PARTS:
            raise ValueError(f"unknown parts {parts - ALL_PARTS}")
        object.__setattr__(self, "parts", parts)
        if self.kind == "CGME" and self.cg_tau is not None and self.cg_tau <= 0:
            raise ValueError("cg_tau must be > 0")


# ---------------------------------------------------------------------------
# superoperator building blocks (row-major vec: vec(A rho B) = kron(A, B.T) vec(rho))
# ---------------------------------------------------------------------------

_I4 = np.eye(4, dtype=complex)


def _spre(a):
    return np.kron(a, _I4)


def _spost(b):
    return np.kron(_I4, b.T)


def _sandwich(a, b):
    return np.kron(a, b.T)


def _commutator_superop(h):
    return -1j * (_spre(h) - _spost(h))


def _gksl_dissipator(ops_left, ops_right_dag, rates):
    """sum_kl rates[k,l] (A_k rho A_l^dag - 1/2 {A_l^dag A_k, rho})."""
    m = np.zeros((16, 16), dtype=complex)
    for k, ak in enumerate(ops_left):
        for l, al in enumerate(ops_right_dag):
            if rates[k, l] == 0:
                continue
            ald = al.conj().T
            m += rates[k, l] * (_sandwich(ak, ald)
                                - 0.5 * (_spre(ald @ ak) + _spost(ald @ ak)))
    return m


def _rfe_superop(ops, coeffs, L):
    """sum_i c_i [L_i rho, L] + h.c. as a superoperator matrix."""
    m = np.zeros((16, 16), dtype=complex)
    for op, c in zip(ops, coeffs):
        m += c * (_sandwich(op, L) - _spre(L @ op))
        m += np.conj(c) * (_sandwich(L, op.conj().T) - _spost(op.conj().T @ L))
    return m


def _game_jump(ops, j_values):
    """Single GAME jump operator W = sum_i sqrt(2 J_i) L_i (J_i > 0 only)."""
    w = np.zeros((4, 4), dtype=complex)
    for op, j in zip(ops, j_values):
        if j > 0:
            w = w + np.sqrt(2.0 * j) * op
    return w


def secular_pairs(kind: str, freqs) -> list:
    """Kept (i, j) index pairs of the double transition sum."""
    n = len(freqs)
    if kind == "QOME":
        return [(i, i) for i in range(n)]
    if kind == "PRWA":
        return [(i, j) for i in range(n) for j in range(n)
                if np.sign(freqs[i]) == np.sign(freqs[j])]
    if kind in ("RFE_asym", "RFE_t", "GAME"):
        return [(i, j) for i in range(n) for j in range(n)]
    raise ValueError(f"no secular pair rule for kind {kind!r}")


def _bath_values(p: SpectralParams, freqs):
    """J(w_i) and S(w_i) for the transition frequencies."""
    f = [half_fourier_asymptotic(p, w) for w in freqs]
    return (np.array([v.j_part for v in f]), np.array([v.s_part for v in f]))


def lamb_shift(spec: MasterEquationSpec) -> np.ndarray:
    """Induced Hamiltonian H_LS = sum_(i,j) 1/2 (S_i + S_j) L_i^dag L_j.

    The pair rule follows the kind (QOME: diagonal, PRWA: equal signs,
    RFE/GAME: all pairs).  At resonance the QOME form reduces to a local
    part plus (S(w_A)+S(-w_A))/8 (sz^A sz^B + sy^A sy^B), the interaction
    that builds up entanglement.  CGME has its own window-dependent shift
    inside build_generator.
    """
    if spec.kind == "CGME":
        raise ValueError("CGME carries its own coarse-grained shift; "
                         "lamb_shift is not defined for it")
    dec = transition_decomposition(spec.sys)
    freqs, ops = dec.frequencies, dec.operators
    _, s_vals = _bath_values(spec.p, freqs)
    h = np.zeros((4, 4), dtype=complex)
    for i, j in secular_pairs(spec.kind, freqs):
        h += 0.5 * (s_vals[i] + s_vals[j]) * (ops[i].conj().T @ ops[j])
    return h


# ---------------------------------------------------------------------------
# coarse-graining window integrals
# ---------------------------------------------------------------------------

def _cg_window_integrals(p: SpectralParams, freqs, tau: float):
    """Rate matrix g_ij and shift matrix sigma_ij of the CG generator.

    g_ij     = (1/tau) int_0^tau int_0^tau e^{i(w_i t1 - w_j t2)} C(t1-t2)
    sigma_ij = same with the extra sgn(t1-t2) kernel and a 1/(2i) prefactor.

    Both reduce to single integrals over u = t1 - t2 with the closed-form
    window factor E_D(T) = (e^{i D T} - 1)/(i D), D = w_i - w_j.
    """
    n = len(freqs)
    g = np.zeros((n, n), dtype=complex)
    sig = np.zeros((n, n), dtype=complex)

    def window(delta, tt):
        if abs(delta) < 1e-14:
            return tt
        return (np.exp(1j * delta * tt) - 1.0) / (1j * delta)

    for i in range(n):
        for j in range(n):
            delta = freqs[i] - freqs[j]

            def plus(u):
                return bcf_exact(p, u) * np.exp(1j * freqs[i] * u) \
                    * window(delta, tau - u)

            def minus(u):
                return np.conj(bcf_exact(p, u)) * np.exp(-1j * freqs[j] * u) \
                    * window(delta, tau - u)

            kw = dict(epsabs=1e-8, epsrel=1e-8, limit=400)
            ip = (quad(lambda u: plus(u).real, 0, tau, **kw)[0]
                  + 1j * quad(lambda u: plus(u).imag, 0, tau, **kw)[0])
            im = (quad(lambda u: minus(u).real, 0, tau, **kw)[0]
                  + 1j * quad(lambda u: minus(u).imag, 0, tau, **kw)[0])
            g[i, j] = (ip + im) / tau
            sig[i, j] = (ip - im) / (2j * tau)
    return g, sig


def default_cg_tau(spec: MasterEquationSpec) -> float:
    """Geometric mean of the environment and induced timescales."""
    ts = timescale_report(spec)
    if not np.isfinite(ts["tau_ind"]):
        return 10.0 * ts["tau_env1"]
    return float(np.sqrt(ts["tau_env1"] * ts["tau_ind"]))


# ---------------------------------------------------------------------------
# generator assembly
# ---------------------------------------------------------------------------

def _effective_hamiltonian(spec: MasterEquationSpec) -> np.ndarray:
    h = np.zeros((4, 4), dtype=complex)
    if "hamiltonian" in spec.parts:
        h += system_hamiltonian(spec.sys)
    if "counterterm" in spec.parts:
        h += counterterm_operator(spec.p)
    return h


def _rfe_coefficient_filter(spec: MasterEquationSpec, f_values):
    """Keep Re F (dissipator), i Im F (unitary) or both, per the parts."""
    want_d = "dissipator" in spec.parts
    want_u = "lamb_shift" in spec.parts
    f_values = np.asarray(f_values, dtype=complex)
    if want_d and want_u:
        return f_values
    if want_d:
        return f_values.real.astype(complex)
    if want_u:
        return 1j * f_values.imag
    return np.zeros_like(f_values)


def build_generator(spec: MasterEquationSpec, t: float | None = None) -> np.ndarray:
    """16x16 matrix M with vec(drho/dt) = M vec(rho) (row-major vec).

    ``t`` is required exactly for the RFE with time-dependent coefficients
    (the running integrals F_t(w_i) are evaluated by quadrature here;
    :func:`propagate` integrates them alongside the state instead).
    """
    if spec.kind == "RFE_t":
        if t is None:
            raise ValueError("RFE_t requires the time argument t")
    elif t is not None:
        raise ValueError(f"{spec.kind} is time independent; t must be None")

    dec = transition_decomposition(spec.sys)
    freqs, ops = np.array(dec.frequencies), dec.operators
    L = coupling_operator()

    m = _commutator_superop(_effective_hamiltonian(spec))

    if spec.kind in ("RFE_asym", "RFE_t"):
        if t is None:
            j_vals, s_vals = _bath_values(spec.p, freqs)
            f_vals = j_vals + 1j * s_vals
        else:
            f_vals = np.array([half_fourier_finite(spec.p, w, t) for w in freqs])
        m += _rfe_superop(ops, _rfe_coefficient_filter(spec, f_vals), L)
        return m

    if spec.kind in ("QOME", "PRWA"):
        j_vals, _ = _bath_values(spec.p, freqs)
        if "lamb_shift" in spec.parts:
            m += _commutator_superop(lamb_shift(spec))
        if "dissipator" in spec.parts:
            n = len(freqs)
            rates = np.zeros((n, n))
            for i, j in secular_pairs(spec.kind, freqs):
                rates[j, i] = j_vals[i] + j_vals[j]  # jump L_j rho L_i^dag
            m += _gksl_dissipator(ops, ops, rates)
        return m

    if spec.kind == "GAME":
        if "lamb_shift" in spec.parts:
            m += _commutator_superop(lamb_shift(spec))
        if "dissipator" in spec.parts:
            j_vals, _ = _bath_values(spec.p, freqs)
            w_jump = _game_jump(ops, j_vals)
            rates = np.ones((1, 1))
            m += _gksl_dissipator([w_jump], [w_jump], rates)
        return m

    if spec.kind == "CGME":
        tau = spec.cg_tau if spec.cg_tau is not None else default_cg_tau(spec)
        if tau <= 0:
            raise ValueError("cg_tau must be > 0")
        g, sig = _cg_window_integrals(spec.p, freqs, tau)
        if "lamb_shift" in spec.parts:
            h_cg = np.zeros((4, 4), dtype=complex)
            for i in range(len(freqs)):
                for j in range(len(freqs)):
                    h_cg += sig[i, j] * (ops[j].conj().T @ ops[i])
            m += _commutator_superop(h_cg)
        if "dissipator" in spec.parts:
            m += _gksl_dissipator(ops, ops, g)  # g[i,j] multiplies L_i rho L_j^dag
        return m

    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def propagate(spec: MasterEquationSpec, rho0: np.ndarray, t_grid,
              rtol: float = 1e-8, atol: float = 1e-10) -> np.ndarray:
    """Integrate drho/dt = generator(rho) on the given time grid.

    Returns an array of shape (len(t_grid), 4, 4); the output states are
    re-Hermitized (roundoff only).  The RFE_t coefficients F_t(w_i) are
    integrated alongside the state (dF_i/dt = alpha_bcf(t) e^{i w_i t}),
    which keeps them exact to integrator tolerance at every step.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (4, 4):
        raise ValueError("rho0 must be 4x4")

    if spec.kind != "RFE_t":
        m = build_generator(spec)

        def rhs(t, y):
            return m @ y

        y0 = rho0.reshape(16)
        sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, t_eval=t_grid,
                        method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"propagation failed at t={sol.t[-1]}: {sol.message}")
        rhos = sol.y.T.reshape(-1, 4, 4)
    else:
        dec = transition_decomposition(spec.sys)
        freqs, ops = np.array(dec.frequencies), dec.operators
        L = coupling_operator()
        m_h = _commutator_superop(_effective_hamiltonian(spec))
        k_fwd = [(_sandwich(op, L) - _spre(L @ op)) for op in ops]
        k_bwd = [(_sandwich(L, op.conj().T) - _spost(op.conj().T @ L))
                 for op in ops]
        n = len(freqs)
        want_d = "dissipator" in spec.parts
        want_u = "lamb_shift" in spec.parts
        p = spec.p

        def rhs(t, y):
            rho_v = y[:16]
            f_run = y[16:]
            if want_d and want_u:
                coeffs = f_run
            elif want_d:
                coeffs = f_run.real.astype(complex)
            elif want_u:
                coeffs = 1j * f_run.imag
            else:
                coeffs = np.zeros(n, dtype=complex)
            out = m_h @ rho_v
            for i in range(n):
                out += coeffs[i] * (k_fwd[i] @ rho_v)
                out += np.conj(coeffs[i]) * (k_bwd[i] @ rho_v)
            dbg = bcf_exact(p, t) * np.exp(1j * freqs * t)
            return np.concatenate([out, dbg])

        y0 = np.concatenate([rho0.reshape(16), np.zeros(n, dtype=complex)])
        sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, t_eval=t_grid,
                        method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"propagation failed at t={sol.t[-1]}: {sol.message}")
        rhos = sol.y[:16].T.reshape(-1, 4, 4)

    return 0.5 * (rhos + np.conj(np.transpose(rhos, (0, 2, 1))))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def timescale_report(spec: MasterEquationSpec) -> dict:
    """Coarse-graining timescale diagnostics.

    tau_env1 = 10^(1/(s+1)) / omega_c is the time over which the BCF decays
    by one order of magnitude; tau_ind = 0.2 / (alpha_tilde omega_A) the
    environmentally induced relaxation scale.  ``separation_ok`` demands a
    factor-of-3 margin on both sides of the coarse-graining window.
    """
    p, sys = spec.p, spec.sys
    tau_env1 = 10.0 ** (1.0 / (p.s + 1.0)) / p.omega_c
    a_tilde = rescaled_coupling(p)
    tau_ind = np.inf if a_tilde == 0 else 0.2 / (a_tilde * sys.omega_A)
    tau = spec.cg_tau if spec.cg_tau is not None else float(
        np.sqrt(tau_env1 * tau_ind)) if np.isfinite(tau_ind) else None
    ok = (tau is not None and np.isfinite(tau_ind)
          and 3.0 * tau_env1 <= tau <= tau_ind / 3.0)
    return {"tau_env1": float(tau_env1), "tau_ind": float(tau_ind),
            "cg_tau": tau, "separation_ok": bool(ok)}


def counterterm_cancellation_metrics(sys: SystemSpec, p: SpectralParams) -> dict:
    """Residual shift Delta_S = S(0) - S(omega_A), damping gamma = J(omega_A).

    Both scale as S(0) (omega_A/omega_c)^s in the large-cutoff regime, so
    their ratio becomes cutoff independent -- the mechanism behind the
    persistent resonant entanglement generation.
    """
    s0 = half_fourier_asymptotic(p, 0.0).s_part
    f_a = half_fourier_asymptotic(p, sys.omega_A)
    delta_s = s0 - f_a.s_part
    gamma = f_a.j_part
    return {
        "delta_s": float(delta_s),
        "gamma": float(gamma),
        "ratio": float(np.inf if delta_s == 0 else gamma / delta_s),
    }
