"""
Excitation and harmonics distributions
======================================

A kicked quartic oscillator started in the vacuum spreads over the Fock
basis diffusively: <n> grows by g0^2/hbar = 4 per kick.  Without noise the
number distribution w_n fluctuates wildly around an exponential decay.
Averaging over strong dephasing noise washes the fluctuations out and leaves
the geometric coarse-grained profile.

Run:  python3 demos/01_distributions.py   (about 10 s, writes demos/output/)
"""

# %%
# Operators are built once and shared by every run below.
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
T = 20

# %%
# One noise-free history plus 200 histories at the strong-noise proxy sigma = 8.
spec = ko.EnsembleSpec(params, (8.0,), T, realizations=200, base_seed=1)
result = ko.run_ensemble(spec, ops)
ref = result.reference
strong = result.for_sigma(8.0)

print(f"<n> at t={T}: noise-free {ref.mean_n[T]:.2f}, sigma=8 {strong.mean(strong.mean_n)[T]:.2f}, "
      f"diffusion law {params.diffusion_rate * T:.0f}")

# %%
# Fitted slope-means: the parameter of the geometric law that best matches each curve.
for label, w, kind in [("w_n, sigma=0", ref.w[T], "number"),
                       ("W_m, sigma=0", ref.harmonics[T], "harmonics"),
                       ("w_n, sigma=8", strong.avg_w[T], "number"),
                       ("W_m, sigma=8", strong.avg_W[T], "averaged-harmonics")]:
    print(f"  slope-mean of {label}: {ko.fit_geometric_slope(ko.Distribution(w, kind)):.1f}")

# %%
# Log-scale picture of the four distributions against the coarse-grained law.
n = np.arange(400)
mu = strong.mean(strong.mean_n)[T]
fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
axes[0].semilogy(n, ref.w[T][n], lw=0.6, color="k", label="sigma = 0")
axes[0].semilogy(n, strong.avg_w[T][n], color="r", label="sigma = 8, averaged")
axes[0].semilogy(n, ko.geometric_profile(mu, 400).weights, "--", color="b", label="geometric")
axes[0].set_xlabel("n")
axes[0].set_ylabel("probability")
axes[1].semilogy(n, ref.harmonics[T][n], lw=0.6, color="k")
axes[1].semilogy(n, strong.avg_W[T][n], color="r")
axes[1].semilogy(n, ko.geometric_profile(mu, 400, "harmonics").weights, "--", color="b")
axes[1].set_xlabel("m")
axes[0].legend()
axes[0].set_ylim(1e-8, 0.1)
fig.suptitle(f"t = {T}")
fig.savefig(OUT / "distributions.png", dpi=120, bbox_inches="tight")
print("wrote", OUT / "distributions.png")
