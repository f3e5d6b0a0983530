"""Two-qubit operator algebra, concurrence and the coupling decomposition.

Basis convention (fixed for all serialized matrices): the sigma_z product
basis ordered {|uu>, |ud>, |du>, |dd>} where |u> is the +1 eigenvector of
sigma_z and the first factor is qubit A.  The system Hamiltonian is

    H_sys = -(omega_A/2) sigma_x^A - (omega_B/2) sigma_x^B,

the collective coupling operator L = (sigma_z^A + sigma_z^B)/2 is diagonal
with entries (1, 0, 0, -1), and the optional counterterm reads
H_c = (alpha omega_c / 2) Gamma(s) L^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, sqrtm

from entbath.spectral import SpectralParams, counterterm_coefficient

__all__ = [
    "SystemSpec",
    "TransitionDecomposition",
    "NonPositiveSpectrum",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "sigma_a",
    "sigma_b",
    "coupling_operator",
    "system_hamiltonian",
    "build_hamiltonian",
    "counterterm_operator",
    "concurrence",
    "concurrence_clamped",
    "concurrence_r_matrix",
    "positivity_fix",
    "transition_decomposition",
    "bell_dfs_check",
    "ket",
    "bell_phi_minus",
    "check_density_matrix",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)
_SYSY = np.kron(PAULI_Y, PAULI_Y)

# eigenvalue-clamping threshold separating numerical noise from a genuine
# positivity violation of rho * rho_tilde
_SPECTRUM_TOL = 1e-9


class NonPositiveSpectrum(ValueError):
    """rho * rho_tilde has an eigenvalue below -1e-9: the state is not
    (numerically) positive and the caller must apply positivity_fix first."""


def sigma_a(op: np.ndarray) -> np.ndarray:
    """Single-qubit operator acting on qubit A."""
    return np.kron(op, _I2)


def sigma_b(op: np.ndarray) -> np.ndarray:
    """Single-qubit operator acting on qubit B."""
    return np.kron(_I2, op)


def coupling_operator() -> np.ndarray:
    """L = (sigma_z^A + sigma_z^B)/2 = diag(1, 0, 0, -1)."""
    return 0.5 * (sigma_a(PAULI_Z) + sigma_b(PAULI_Z))


def ket(label: str) -> np.ndarray:
    """State vector for a product label like 'uu', 'ud', 'du', 'dd'."""
    idx = {"uu": 0, "ud": 1, "du": 2, "dd": 3}[label]
    v = np.zeros(4, dtype=complex)
    v[idx] = 1.0
    return v


def bell_phi_minus() -> np.ndarray:
    """(|ud> - |du>)/sqrt(2): spans the decoherence-free subspace at resonance."""
    return (ket("ud") - ket("du")) / np.sqrt(2)


@dataclass(frozen=True)
class SystemSpec:
    """Two-qubit system: tunneling frequencies and counterterm flag.

    ``omega_B / omega_A`` is the detuning knob; ``omega_A`` doubles as the
    unit of frequency throughout.
    """

    omega_A: float = 1.0
    omega_B: float = 1.0
    include_counterterm: bool = False

    def __post_init__(self):
        if not self.omega_A > 0 or not self.omega_B > 0:
            raise ValueError("qubit frequencies must be positive")

    @property
    def resonant(self) -> bool:
        return self.omega_A == self.omega_B


def system_hamiltonian(sys: SystemSpec) -> np.ndarray:
    """H_sys = -(omega_A/2) sigma_x^A - (omega_B/2) sigma_x^B."""
    return -0.5 * sys.omega_A * sigma_a(PAULI_X) - 0.5 * sys.omega_B * sigma_b(PAULI_X)


def counterterm_operator(p: SpectralParams) -> np.ndarray:
    """H_c = (alpha omega_c / 2) Gamma(s) L^2."""
    L = coupling_operator()
    return counterterm_coefficient(p) * (L @ L)


def build_hamiltonian(sys: SystemSpec, p: SpectralParams | None = None) -> np.ndarray:
    """System Hamiltonian, plus the counterterm when the spec flags it."""
    h = system_hamiltonian(sys)
    if sys.include_counterterm:
        if p is None:
            raise ValueError("counterterm requested but no SpectralParams given")
        h = h + counterterm_operator(p)
    return h


# ---------------------------------------------------------------------------
# concurrence
# ---------------------------------------------------------------------------

def _sorted_sqrt_eigenvalues(rho: np.ndarray) -> np.ndarray:
    rho_tilde = _SYSY @ rho.conj() @ _SYSY
    a = np.linalg.eigvals(rho @ rho_tilde)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.any(np.abs(a.imag) > _SPECTRUM_TOL * scale):
        raise NonPositiveSpectrum(
            f"complex eigenvalues of rho*rho_tilde (max imag "
            f"{np.max(np.abs(a.imag)):.2e}); apply positivity_fix first")
    a = a.real
    if np.any(a < -_SPECTRUM_TOL):
        raise NonPositiveSpectrum(
            f"eigenvalue of rho*rho_tilde below -1e-9 (min {a.min():.2e}); "
            "apply positivity_fix first")
    a = np.clip(a, 0.0, None)
    return np.sqrt(np.sort(a)[::-1])


def concurrence(rho: np.ndarray) -> float:
    """Signed concurrence c = l1 - l2 - l3 - l4.

    The l_i are the square roots of the decreasingly sorted eigenvalues of
    rho * rho_tilde with rho_tilde = (sy x sy) rho^* (sy x sy).  Negative
    values are returned as-is (only c > 0 quantifies entanglement, but the
    signed quantity is the more informative dynamical signal).  Eigenvalues
    in (-1e-9, 0) are treated as roundoff and clamped; anything lower
    raises :class:`NonPositiveSpectrum`.
    """
    lam = _sorted_sqrt_eigenvalues(rho)
    return float(lam[0] - lam[1] - lam[2] - lam[3])


def concurrence_clamped(rho: np.ndarray) -> float:
    """max(0, concurrence): the entanglement monotone proper."""
    return max(0.0, concurrence(rho))


def concurrence_r_matrix(rho: np.ndarray) -> float:
    """Concurrence from the R = sqrt(sqrt(rho) rho_tilde sqrt(rho)) route.

    Independent of the rho*rho_tilde eigenvalue path; used as a
    cross-check oracle.
    """
    rho_tilde = _SYSY @ rho.conj() @ _SYSY
    sq = sqrtm(rho)
    r = sqrtm(sq @ rho_tilde @ sq)
    lam = np.sort(np.real(np.linalg.eigvals(r)))[::-1]
    return float(lam[0] - lam[1] - lam[2] - lam[3])


def positivity_fix(rho: np.ndarray, return_info: bool = False):
    """Replace rho by sqrt(rho rho^dagger), renormalized to unit trace.

    For Hermitian rho this is the eigendecomposition with eigenvalues
    replaced by their absolute values, the canonical positive repair for
    the small positivity violations of Redfield dynamics.  The
    pre-normalization trace deviation is returned as a diagnostic when
    ``return_info`` is set.
    """
    rho_h = 0.5 * (rho + rho.conj().T)
    vals, vecs = eigh(rho_h)
    fixed = (vecs * np.abs(vals)) @ vecs.conj().T
    tr = float(np.real(np.trace(fixed)))
    out = fixed / tr
    if return_info:
        return out, {"trace_deviation": tr - 1.0,
                     "min_eigenvalue": float(vals.min())}
    return out


def concurrence_with_fix(rho: np.ndarray) -> tuple[float, bool]:
    """Concurrence of rho, routing positivity violations through the fix.

    Returns (value, fixed_flag); fixed_flag marks that sqrt(rho rho^dagger)
    was needed.
    """
    try:
        return concurrence(rho), False
    except NonPositiveSpectrum:
        return concurrence(positivity_fix(rho)), True


# ---------------------------------------------------------------------------
# coupling-operator frequency decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionDecomposition:
    """Decomposition L = sum_i L_i over transition frequencies omega_i.

    L_i = sum_{eps' - eps = omega_i} |eps><eps| L |eps'><eps'| built from the
    eigenprojectors of H_sys; frequencies within 1e-9 * omega_A are merged
    (the resonant case has exactly the pair +-omega_A).
    """

    frequencies: tuple
    operators: tuple

    def __iter__(self):
        return iter(zip(self.frequencies, self.operators))

    def __len__(self):
        return len(self.frequencies)

    def operator(self, omega: float) -> np.ndarray:
        for w, op in self:
            if w == omega:
                return op
        raise KeyError(f"no transition at frequency {omega}")


def transition_decomposition(sys: SystemSpec) -> TransitionDecomposition:
    """Group L by transition frequencies of H_sys.

    For detuned qubits the nonzero blocks sit at {+-omega_A, +-omega_B};
    at resonance the pairs merge.  Zero blocks (empty for this model) are
    dropped.  By construction sum_i L_i = L as a matrix identity.
    """
    h = system_hamiltonian(sys)
    evals, vecs = eigh(h)
    L = coupling_operator()
    l_eig = vecs.conj().T @ L @ vecs
    tol = 1e-9 * sys.omega_A

    blocks: list[tuple[float, np.ndarray]] = []
    for m in range(4):
        for n in range(4):
            w = evals[n] - evals[m]
            piece = l_eig[m, n] * np.outer(vecs[:, m], vecs[:, n].conj())
            for idx, (w0, op) in enumerate(blocks):
                if abs(w - w0) <= tol:
                    blocks[idx] = (w0, op + piece)
                    break
            else:
                blocks.append((w, piece))

    blocks = [(w, op) for w, op in blocks if np.max(np.abs(op)) > 1e-14]
    blocks.sort(key=lambda b: b[0])
    # snap merged frequencies to exact +-omega values
    freqs = tuple(float(w) for w, _ in blocks)
    ops = tuple(op for _, op in blocks)
    return TransitionDecomposition(frequencies=freqs, operators=ops)


def bell_dfs_check(sys: SystemSpec) -> bool:
    """True iff |Phi_-> is a decoherence-free eigenstate.

    Checks L|Phi_-> = 0 (holds for any detuning) and H_sys|Phi_-> within
    span{|Phi_->} (holds only at resonance).
    """
    phi = bell_phi_minus()
    if np.max(np.abs(coupling_operator() @ phi)) > 1e-12:
        return False
    h_phi = system_hamiltonian(sys) @ phi
    residual = h_phi - (phi.conj() @ h_phi) * phi
    return bool(np.max(np.abs(residual)) < 1e-12)


def check_density_matrix(rho: np.ndarray, eps_tol: float = 1e-8) -> None:
    """Assert the density-matrix contract: Hermitian, unit trace, positive
    down to -eps_tol (integration/perturbation tolerance)."""
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("density matrix is not Hermitian to 1e-12")
    if abs(np.trace(rho).real - 1.0) > 1e-10 or abs(np.trace(rho).imag) > 1e-12:
        raise ValueError("density matrix trace deviates from 1 beyond 1e-10")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -eps_tol:
        raise ValueError(f"density matrix has eigenvalue below -{eps_tol}")
