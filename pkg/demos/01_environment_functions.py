"""The closed-form environment functions and the shape of S(omega).

The whole study is driven by three functions of the (sub-)Ohmic bath:
the spectral density J, the bath correlation function, and the half-sided
transform F = J + iS.  The imaginary part S sets the induced Hamiltonian
shifts; its behavior near omega = 0 (a |x|^s power law, with a pointed
minimum for s < 0.5) is the mechanism behind the counterterm's failure in
the deep sub-Ohmic regime.  This script reproduces the S(x) comparison
plot: exact analytic curve, small-x expansion, and the numeric Fourier
integral as dots.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from entbath.spectral import (
    SpectralParams,
    half_fourier_asymptotic,
    half_fourier_numeric,
    s_expansion,
)

fig, ax = plt.subplots(figsize=(6, 4))

x_dense = np.linspace(-1.0, 1.0, 201)
x_dots = np.linspace(-1.0, 1.0, 17)

for s in [0.1, 0.3, 0.5, 0.7, 1.0]:
    p = SpectralParams(alpha=0.1, s=s, omega_c=10.0)
    exact = [half_fourier_asymptotic(p, x * p.omega_c).s_part for x in x_dense]
    approx = [s_expansion(p, x) for x in x_dense]
    dots = [half_fourier_numeric(p, x * p.omega_c).imag for x in x_dots]
    (line,) = ax.plot(x_dense, exact, label=f"s = {s}")
    ax.plot(x_dense, approx, "--", color=line.get_color(), alpha=0.7)
    ax.plot(x_dots, dots, ".", color=line.get_color(), ms=5)

ax.set_xlabel(r"$x = \omega/\omega_c$")
ax.set_ylabel(r"$S(x)$")
ax.legend(fontsize=8)
ax.set_title("solid: exact, dashed: expansion, dots: numeric integral")
fig.tight_layout()
fig.savefig("demo01_s_function.png", dpi=150)
print("wrote demo01_s_function.png")

# the pointed minimum: for s < 0.5 every neighbor of x = 0 lies above S(0)
for s in [0.3, 0.7]:
    p = SpectralParams(alpha=0.1, s=s, omega_c=10.0)
    s0 = half_fourier_asymptotic(p, 0.0).s_part
    left = half_fourier_asymptotic(p, -0.05 * p.omega_c).s_part
    right = half_fourier_asymptotic(p, 0.05 * p.omega_c).s_part
    kind = "pointed minimum" if left > s0 < right else "one-sided slope"
    print(f"s = {s}: S(0) = {s0:+.4f}, S(-x) - S(0) = {left - s0:+.4f}, "
          f"S(+x) - S(0) = {right - s0:+.4f}  -> {kind}")
