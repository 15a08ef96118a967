"""
Fidelity and its scaling law
============================

Fidelity compares a noisy history with the noise-free one.  Below a
critical noise level sigma_c(t), which shrinks like t^(-3/2), it stays close
to one.  Plotted against x = sigma / sigma_c(t) the curves for different
noise levels collapse onto 1 / (1 + x^2) until decoherence sets in.

Run:  python3 demos/02_fidelity_scaling.py   (about 15 s)
"""

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import kicked_oscillator as ko

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)

params = ko.OscillatorParams(basis_size=2048)
ops = ko.FloquetOperators(params)
T, sigmas = 25, (0.004, 0.032, 0.256)

# %%
# One ensemble covers all three noise levels; the noise-free run comes along for free.
result = ko.run_ensemble(ko.EnsembleSpec(params, sigmas, T, realizations=200,
                                         base_seed=2, distributions=False), ops)
sched = ko.sigma_critical(ops, T, mean_m2=result.reference.mean_m2, sigmas=sigmas)
print(f"sigma_c(1) = {sched.at(1):.3f}, sigma_c(10) = {sched.at(10):.4f}, "
      f"log-log slope over [5, 25] = {sched.loglog_slope(5, 25):.2f}")

curves = [ko.fidelity_from_ensemble(result, s) for s in sigmas]
report = ko.scaling_fit(curves, sched)
for e in report.entries:
    print(f"  sigma = {e.sigma:<6g} t_dec = {sched.t_dec[e.sigma]:5.1f}  rms residual before t_dec = {e.rms:.3f}")

# %%
# Strong-noise fidelity from the Markov chain approaches 1 / (2<n> + 1).
F_inf = ko.fidelity_strong(ops, T, reference=result.reference)
print(f"F(inf; {T}) = {F_inf[T]:.5f}, 1/(2*4t+1) = {1 / (8 * T + 1):.5f}")

# %%
x = np.logspace(-2, 1.5, 200)
fig, ax = plt.subplots(figsize=(5, 4))
for e, marker in zip(report.entries, "os^"):
    ax.semilogx(e.ratio[e.valid], e.F[e.valid], marker, ms=4, label=f"sigma = {e.sigma:g}")
    ax.semilogx(e.ratio[~e.valid], e.F[~e.valid], marker, ms=4, mfc="none", color="0.6")
ax.semilogx(x, ko.fidelity.scaling_fit_value(x), "k-", label="1/(1+x^2)")
ax.set_xlabel("sigma / sigma_c(t)")
ax.set_ylabel("fidelity")
ax.legend()
fig.savefig(OUT / "fidelity_scaling.png", dpi=120, bbox_inches="tight")
print("wrote", OUT / "fidelity_scaling.png")
