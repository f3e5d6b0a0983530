"""Two qubits in a common (sub-)Ohmic bosonic environment.

Numerically exact reduced dynamics via a stochastic hierarchy of pure
states, a family of perturbative master equations (quantum-optical,
partial-RWA, Redfield, geometric-arithmetic, coarse-graining), two-qubit
concurrence, and the counterterm / induced-Hamiltonian analysis tools
built on the closed-form bath functions.
"""

from entbath.spectral import (
    SpectralParams,
    HalfFourierValue,
    spectral_density,
    bcf_exact,
    half_fourier_asymptotic,
    half_fourier_finite,
    half_fourier_numeric,
    s_expansion,
    counterterm_coefficient,
    rescaled_coupling,
    solve_alpha,
)

__version__ = "0.1.0"
