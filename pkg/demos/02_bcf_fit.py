"""Fitting the algebraic bath correlation function by exponentials.

The hierarchy solver needs alpha_bcf as a sum of decaying exponentials.
The exact kernel decays algebraically (a power law set by s), so a finite
sum can only track it up to a finite horizon; more terms buy a longer
horizon at the same error.  The three panels mirror the standard fit
diagnostic: real/imaginary part on a linear scale (deviations invisible),
pointwise error, and the log-log view revealing where the exponential sum
lets go of the algebraic tail.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from entbath.bcf_fit import eval_fit, fit_bcf, fit_report
from entbath.spectral import SpectralParams, bcf_exact

p = SpectralParams(alpha=0.1, s=0.5, omega_c=10.0)
fit = fit_bcf(p, n_terms=5, seed=0, early_stop_norm_err=1e-3)
report = fit_report(fit, p)

print(f"5-term fit: normalized max error {fit.max_abs_err / fit.norm_scale:.2e}")
print(f"tracks the algebraic decay within 10% up to tau* = "
      f"{report.tau_star:.3g} (window end {fit.t_max:.3g})")
for g, w in fit.terms:
    print(f"  G = {g:+.4e}, W = {w:+.4e}")

tau = np.concatenate([[0], np.geomspace(1e-3, fit.t_max, 600)])
exact = bcf_exact(p, tau)
approx = eval_fit(fit, tau)

fig, axes = plt.subplots(3, 1, figsize=(6, 8), sharex=False)
axes[0].plot(tau, exact.real / fit.norm_scale, "k-", lw=1.4, label="exact Re")
axes[0].plot(tau, exact.imag / fit.norm_scale, "k--", lw=1.4, label="exact Im")
axes[0].plot(tau, approx.real / fit.norm_scale, "C1-", lw=0.9, label="fit Re")
axes[0].plot(tau, approx.imag / fit.norm_scale, "C1--", lw=0.9, label="fit Im")
axes[0].set_xlim(0, 3)
axes[0].set_ylabel("normalized BCF")
axes[0].legend(fontsize=8)

axes[1].semilogy(tau, np.abs(approx - exact) / fit.norm_scale, "C0-")
axes[1].axhline(1e-3, color="gray", ls=":")
axes[1].set_ylabel("abs error (normalized)")

axes[2].loglog(tau[1:], np.abs(exact[1:]) / fit.norm_scale, "k-", label="exact")
axes[2].loglog(tau[1:], np.abs(approx[1:]) / fit.norm_scale, "C1-", label="fit")
axes[2].axvline(report.tau_star, color="gray", ls=":")
axes[2].set_xlabel(r"$\tau$")
axes[2].set_ylabel("|BCF| (normalized)")
axes[2].legend(fontsize=8)

fig.tight_layout()
fig.savefig("demo02_bcf_fit.png", dpi=150)
print("wrote demo02_bcf_fit.png")
