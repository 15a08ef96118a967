"""Fast property checks of the numerical core, runnable without pytest."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .dynamics import FloquetOperators, evolve_averaged_density, markov_matrix, markov_trajectory
from .ensemble import EnsembleSpec, run_ensemble
from .fock import OscillatorParams, build_displacement, hermitian_eigenvalues
from .observables import averaged_harmonics_distribution, harmonics_distribution


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def laguerre_magnitude(n: int, m: int, r: float) -> float:
    """|<m|D(alpha)|n>| for |alpha| = r from the associated-Laguerre closed form."""
    lo, hi = min(n, m), max(n, m)
    x = r * r
    logmag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + (hi - lo) * math.log(r) - x / 2
    return math.exp(logmag) * abs(eval_genlaguerre(lo, hi - lo, x))


def check_displacement() -> list:
    params = OscillatorParams(basis_size=2048)
    kick = build_displacement(params)
    out = [Check("displacement unitarity", kick.unitarity_defect < 1e-8,
                 f"interior column-norm defect {kick.unitarity_defect:.2e} (< 1e-8)")]
    small = build_displacement(OscillatorParams(basis_size=64, pad=256))
    r = params.kick_strength
    err = max(abs(abs(small.matrix[m, n]) - laguerre_magnitude(n, m, r))
              for n in range(0, 40, 3) for m in range(0, 40, 3))
    out.append(Check("displacement vs Laguerre closed form", err < 1e-10, f"max |error| {err:.2e}"))
    return out


def check_markov() -> list:
    params = OscillatorParams(basis_size=1024)
    kick = build_displacement(params)
    ops = FloquetOperators(params, kick=kick)
    Q = markov_matrix(ops)
    asym = float(np.abs(Q - Q.T).max())
    interior = params.N - kick.pad // 2
    colsum = float(np.abs(Q[:, :interior].sum(axis=0) - 1).max())
    q00 = abs(Q[0, 0] - math.exp(-4.0))
    return [
        Check("Q symmetric", asym < 1e-12, f"max |Q - Q^T| {asym:.2e}"),
        Check("Q column sums", colsum < 1e-8, f"max |sum - 1| over {interior} interior columns {colsum:.2e}"),
        Check("Q_00 = exp(-4)", q00 < 1e-10, f"|Q_00 - e^-4| {q00:.2e}"),
    ]


def check_recursion() -> list:
    params = OscillatorParams(basis_size=256)
    ops = FloquetOperators(params)
    worst, prev = 0.0, 1.0
    for t, rho in evolve_averaged_density(ops, 0.032, 5):
        tr = float(np.trace(rho).real)
        worst = max(worst, abs(tr - prev))
        prev = tr
    out = [Check("averaged-rho trace preservation", worst < 1e-9, f"max per-step change {worst:.2e}")]

    Q = markov_matrix(ops)
    diag = markov_trajectory(np.eye(params.N)[0], Q, 5)
    off, dev = 0.0, 0.0
    for t, rho in evolve_averaged_density(ops, 8.0, 5):
        a = np.abs(rho) ** 2
        off = max(off, float(a.sum() - np.trace(a)))
        dev = max(dev, float(np.abs(np.diag(rho).real - diag[t]).max()))
    out.append(Check("strong-noise recursion is the Markov chain", off < 1e-10 and dev < 1e-8,
                     f"off-diagonal mass {off:.1e}, diagonal deviation {dev:.1e}"))
    return out


def check_harmonics() -> list:
    rng = np.random.default_rng(64)
    psi = rng.normal(size=64) + 1j * rng.normal(size=64)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    brute = np.array([(2 - (m == 0)) * sum(abs(rho[n + m, n]) ** 2 for n in range(64 - m))
                      for m in range(64)])
    from_rho, _ = averaged_harmonics_distribution(rho)
    pure = harmonics_distribution(psi)
    err = max(np.abs(brute - pure.weights).max(), np.abs(brute - from_rho.weights).max())
    return [Check("harmonics brute force (N=64)", err < 1e-10, f"max |error| {err:.2e}")]


def check_eigensolver() -> list:
    rng = np.random.default_rng(8)
    err = 0.0
    for _ in range(20):
        a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        H = a + a.conj().T
        lam = hermitian_eigenvalues(H)
        err = max(err, abs(lam.sum() - np.trace(H).real),
                  abs((lam**2).sum() - np.trace(H @ H).real))
    return [Check("eigensolver trace/Frobenius", err < 1e-8, f"max |error| {err:.2e}")]


def check_determinism() -> list:
    params = OscillatorParams(basis_size=256)
    ops = FloquetOperators(params)
    runs = []
    for workers in (1, 4):
        spec = EnsembleSpec(params, (0.01, 8.0), 6, 24, base_seed=11, workers=workers,
                            block_size=4, pairs=True)
        runs.append(run_ensemble(spec, ops))
    same = all(
        np.array_equal(getattr(a, name), getattr(b, name))
        for a, b in zip(runs[0].stats, runs[1].stats)
        for name in ("fidelity", "mean_n", "mean_abs_m", "mean_m2", "avg_w", "avg_W", "pair_overlap")
    )
    return [Check("ensemble determinism across workers", same, "1 vs 4 workers bit-identical" if same
                  else "results differ between worker counts")]


CHECKS = (check_displacement, check_markov, check_recursion, check_harmonics,
          check_eigensolver, check_determinism)


def run_selfcheck(echo=print) -> bool:
    start = time.perf_counter()
    ok = True
    for fn in CHECKS:
        for c in fn():
            ok &= c.passed
            echo(c.line())
    echo(f"{'all checks passed' if ok else 'SOME CHECKS FAILED'} in {time.perf_counter() - start:.1f} s")
    return ok
