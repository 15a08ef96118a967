"""
Reversibility equals purity
===========================

Evolve the vacuum forward under one noise history and backward under an
independent one: the mean return probability equals the purity Tr rho_av^2
of the noise-averaged state.  Below, a Monte Carlo estimate over pairs of
histories is checked against the exact recursion.

Run:  python3 demos/04_reversibility.py   (a few seconds)
"""

# %%
import numpy as np

import kicked_oscillator as ko

ops = ko.FloquetOperators(ko.OscillatorParams(basis_size=256))
T = 10

# %%
# N = 256 is tight for t = 10 (about 1e-3 of the norm leaks), hence the loosened guards.
curve = ko.reversibility_mc(ops, 0.032, T, realizations=300, seed=4, leak_tol=1e-2, tail_tol=None)
print(" t   F_rev     stderr    purity    (2<|m|>+1)/(2<n>+1)")
for t in range(0, T + 1, 2):
    print(f"{t:2d}  {curve.F[t]:.5f}  {curve.stderr[t]:.5f}  {curve.purity_exact[t]:.5f}  "
          f"{curve.purity_harmonics[t]:.5f}")

# %%
# In the strong-noise limit purity is the collision probability of the Markov populations.
wd = ko.markov_trajectory(np.eye(ops.N)[0], ko.markov_matrix(ops), T)
print(f"strong noise, t={T}: purity {np.sum(wd[T] ** 2):.5f}, "
      f"1/(2<n>+1) = {1 / (2 * wd[T] @ np.arange(ops.N) + 1):.5f}")
