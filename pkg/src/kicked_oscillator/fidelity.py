"""Peres fidelity under persistent dephasing noise.

Monte Carlo estimators, the weak- and strong-noise closed forms, the
critical noise level sigma_c(t), the scaling law 1 / (1 + sigma^2/sigma_c^2),
the decoherence time, and the reversibility (two-history) fidelity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    LEAK_TOL,
    TAIL_TOL,
    FloquetOperators,
    evolve_averaged_density,
    markov_matrix,
    markov_propagate,
    markov_trajectory,
)
from .ensemble import EnsembleResult, EnsembleSpec, ReferenceRun, reference_run, run_ensemble
from .errors import DegenerateInput, FitError, InsufficientRealizations
from .fock import OscillatorParams
from .observables import averaged_harmonics_distribution, number_distribution, purity

EXACT_RHO_CAP = 1024


@dataclass
class FidelityCurve:
    """Fidelity versus time for one noise level.

    ``F`` is clamped to [0, 1]; ``F_raw`` keeps the unclamped estimate.
    """

    sigma: float
    t: np.ndarray
    F: np.ndarray
    stderr: np.ndarray
    realizations: int
    provenance: str
    F_raw: np.ndarray | None = None
    samples: np.ndarray | None = field(default=None, repr=False)
    purity_exact: np.ndarray | None = None
    purity_harmonics: np.ndarray | None = None

    @classmethod
    def from_samples(cls, sigma, samples, provenance="monte-carlo", **extra):
        K = samples.shape[0]
        mean = samples.mean(axis=0)
        err = samples.std(axis=0, ddof=1) / math.sqrt(K)
        t = np.arange(samples.shape[1])
        return cls(float(sigma), t, np.clip(mean, 0.0, 1.0), err, K, provenance,
                   F_raw=mean, samples=samples, **extra)


def _ops(params_or_ops) -> FloquetOperators:
    if isinstance(params_or_ops, FloquetOperators):
        return params_or_ops
    return FloquetOperators(params_or_ops)


def fidelity_from_ensemble(result: EnsembleResult, sigma: float) -> FidelityCurve:
    stats = result.for_sigma(sigma)
    if stats.realizations < 2:
        raise InsufficientRealizations("need K >= 2 realizations for a fidelity estimate")
    return FidelityCurve.from_samples(sigma, stats.fidelity)


def fidelity_mc(params_or_ops, sigma: float, t_max: int, realizations: int = 1000,
                seed: int = 0, workers: int = 1, leak_tol: float = LEAK_TOL,
                tail_tol: float | None = TAIL_TOL) -> FidelityCurve:
    """Noise-averaged fidelity |<psi_0(t)|psi_xi(t)>|^2 over K histories."""
    if realizations < 2:
        raise InsufficientRealizations(f"need K >= 2 realizations, got {realizations}")
    ops = _ops(params_or_ops)
    spec = EnsembleSpec(ops.params, (sigma,), t_max, realizations, seed, workers,
                        distributions=False, leak_tol=leak_tol, tail_tol=tail_tol)
    return fidelity_from_ensemble(run_ensemble(spec, ops), sigma)


def fidelity_weak(sigma: float, mean_m2, t: int | None = None):
    """Second-order expansion 1 - sigma^2/2 * sum_{tau=1..t} <m^2>_{0;tau}.

    ``mean_m2[tau]`` holds the noise-free second harmonic moment for
    tau = 0..T.  Returns the whole curve for t = 0..T, or its value at ``t``.
    """
    m2 = np.asarray(mean_m2, dtype=float)
    acc = np.concatenate([[0.0], np.cumsum(m2[1:])])
    F = 1.0 - 0.5 * sigma * sigma * acc
    return F if t is None else float(F[t])


@dataclass
class CriticalSchedule:
    """sigma_c(t) for t = 1..T in three variants, plus decoherence times.

    exact      sqrt(2 / sum_tau <m^2>_{0;tau})
    approx     1 / sqrt(sum_tau <|m|>^2_{inf;tau})
    diffusion  1 / sqrt(sum_tau (g0^2 tau / hbar)^2)
    """

    params: OscillatorParams
    t: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    diffusion: np.ndarray
    t_dec: dict = field(default_factory=dict)

    def at(self, t: int, variant: str = "exact") -> float:
        return float(getattr(self, variant)[t - 1])

    def loglog_slope(self, t_lo: int, t_hi: int, variant: str = "exact") -> float:
        sel = (self.t >= t_lo) & (self.t <= t_hi)
        y = getattr(self, variant)[sel]
        return float(np.polyfit(np.log(self.t[sel]), np.log(y), 1)[0])


def sigma_critical_diffusion(params: OscillatorParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return 1.0 / (params.diffusion_rate * np.sqrt(t * (t + 1) * (2 * t + 1) / 6.0))


def sigma_critical(params_or_ops, t_max: int, mean_m2=None, mean_abs_m_inf=None,
                   sigmas=()) -> CriticalSchedule:
    """Critical noise level below which the fidelity stays close to one.

    ``mean_m2`` (noise-free <m^2>, indexed from tau = 0) defaults to a fresh
    noise-free run.  ``mean_abs_m_inf`` defaults to the mean excitation of the
    strong-noise Markov chain, using <|m|>_inf = <n>_inf.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    params = params_or_ops.params if isinstance(params_or_ops, FloquetOperators) else params_or_ops
    ops = None
    if mean_m2 is None or mean_abs_m_inf is None:
        ops = _ops(params_or_ops)
    if mean_m2 is None:
        mean_m2 = reference_run(ops, t_max).mean_m2
    if mean_abs_m_inf is None:
        w0 = np.zeros(ops.N)
        w0[0] = 1.0
        traj = markov_trajectory(w0, markov_matrix(ops), t_max)
        mean_abs_m_inf = traj @ np.arange(ops.N)
    t = np.arange(1, t_max + 1)
    m2 = np.asarray(mean_m2, dtype=float)[1:t_max + 1]
    mabs = np.asarray(mean_abs_m_inf, dtype=float)[1:t_max + 1]
    exact = np.sqrt(2.0 / np.cumsum(m2))
    approx = 1.0 / np.sqrt(np.cumsum(mabs**2))
    sched = CriticalSchedule(params, t, exact, approx, sigma_critical_diffusion(params, t))
    for s in sigmas:
        if s > 0 and not math.isinf(s):
            sched.t_dec[float(s)] = decoherence_time(params, s)
    return sched


def decoherence_time(params: OscillatorParams, sigma: float) -> float:
    """sqrt(6 hbar / (D sigma^2)) with D = g0^2."""
    if sigma <= 0:
        raise DegenerateInput("decoherence time is infinite for sigma = 0")
    D = params.g0**2
    if D == 0:
        raise DegenerateInput("decoherence time is infinite for g0 = 0")
    return math.sqrt(6.0 * params.hbar / (D * sigma * sigma))


def fidelity_strong(params_or_ops, t_max: int, reference: ReferenceRun | None = None,
                    Q: np.ndarray | None = None) -> np.ndarray:
    """Strong-noise fidelity sum_n w_n(0;t) w^(d)_n(t) for t = 0..t_max."""
    ops = _ops(params_or_ops)
    if reference is None:
        reference = reference_run(ops, t_max)
    if Q is None:
        Q = markov_matrix(ops)
    wd = markov_trajectory(reference.w[0], Q, t_max)
    return np.einsum("tn,tn->t", reference.w[: t_max + 1], wd)


def strong_path_sum(ops: FloquetOperators, t: int) -> float:
    """Strong-noise fidelity as a chain of transition probabilities.

    Forward part: t steps with the probabilities |<n|F|n'>|^2 taken from the
    full Floquet matrix.  Backward part: |<0|(F^+)^t|n>|^2, obtained by
    propagating the bra <0| through F^+.
    """
    F = ops.matrix
    P = F.real**2 + F.imag**2
    e0 = np.zeros(ops.N)
    e0[0] = 1.0
    chain = markov_propagate(e0, P, t)
    bra = e0.astype(complex)
    Fd = F.conj().T
    for _ in range(t):
        bra = bra @ Fd
    back = bra.real**2 + bra.imag**2
    return float(back @ chain)


@dataclass
class ScalingEntry:
    sigma: float
    t: np.ndarray
    ratio: np.ndarray  # sigma / sigma_c(t)
    F: np.ndarray
    F_fit: np.ndarray
    valid: np.ndarray  # t < t_dec(sigma)

    @property
    def residual(self):
        return self.F - self.F_fit

    @property
    def rms(self) -> float:
        r = self.residual[self.valid]
        return float(np.sqrt(np.mean(r**2))) if r.size else float("nan")

    @property
    def max_abs(self) -> float:
        r = self.residual[self.valid]
        return float(np.abs(r).max()) if r.size else float("nan")

    @property
    def rms_all(self) -> float:
        return float(np.sqrt(np.mean(self.residual**2)))


@dataclass
class ScalingReport:
    entries: list

    @property
    def rms(self) -> float:
        """Pooled rms residual over all valid points of all curves."""
        r = np.concatenate([e.residual[e.valid] for e in self.entries])
        return float(np.sqrt(np.mean(r**2)))

    def breakdown_sigma(self, threshold: float = 0.1):
        """Smallest noise level whose full-curve rms residual exceeds ``threshold``."""
        bad = sorted(e.sigma for e in self.entries if e.rms_all > threshold)
        return bad[0] if bad else None


def scaling_fit_value(ratio):
    return 1.0 / (1.0 + np.asarray(ratio) ** 2)


def scaling_fit(curves, schedule: CriticalSchedule) -> ScalingReport:
    """Compare fidelity curves with 1 / (1 + (sigma/sigma_c(t))^2) for t >= 1."""
    if len({c.sigma for c in curves}) < 2:
        raise FitError("scaling fit needs curves at two or more distinct noise levels")
    entries = []
    for c in curves:
        T = min(int(c.t[-1]), int(schedule.t[-1]))
        t = np.arange(1, T + 1)
        ratio = c.sigma / schedule.exact[t - 1]
        t_dec = decoherence_time(schedule.params, c.sigma)
        entries.append(ScalingEntry(c.sigma, t, ratio, c.F[t], scaling_fit_value(ratio), t < t_dec))
    if not any(e.valid.any() for e in entries):
        raise FitError("no points before the decoherence time")
    return ScalingReport(entries)


def reversibility_mc(params_or_ops, sigma: float, t_max: int, realizations: int = 1000,
                     seed: int = 0, workers: int = 1, exact: bool | None = None,
                     leak_tol: float = LEAK_TOL, tail_tol: float | None = TAIL_TOL) -> FidelityCurve:
    """Mean overlap of states evolved under two independent noise histories.

    ``realizations`` counts pairs.  When the exact recursion is feasible
    (``exact=None`` means N <= EXACT_RHO_CAP), the purity Tr rho_av^2 and its
    harmonics approximation (2<|m|>+1)/(2<n>+1) are attached.
    """
    if realizations < 2:
        raise InsufficientRealizations(f"need K >= 2 pairs, got {realizations}")
    ops = _ops(params_or_ops)
    spec = EnsembleSpec(ops.params, (sigma,), t_max, 2 * realizations, seed, workers,
                        distributions=False, pairs=True, leak_tol=leak_tol, tail_tol=tail_tol)
    stats = run_ensemble(spec, ops).for_sigma(sigma)
    extra = {}
    if exact is None:
        exact = ops.N <= EXACT_RHO_CAP
    if exact:
        extra["purity_exact"], extra["purity_harmonics"] = purity_curve(ops, sigma, t_max, leak_tol)
    return FidelityCurve.from_samples(sigma, stats.pair_overlap, **extra)


def purity_curve(ops: FloquetOperators, sigma: float, t_max: int, trace_tol: float = LEAK_TOL):
    """Exact Tr rho_av^2 and (2<|m|>+1)/(2<n>+1) for t = 0..t_max."""
    P = np.empty(t_max + 1)
    approx = np.empty(t_max + 1)
    for t, rho in evolve_averaged_density(ops, sigma, t_max, trace_tol=trace_tol):
        P[t] = purity(rho)
        dist, _ = averaged_harmonics_distribution(rho)
        approx[t] = (2 * dist.mean + 1) / (2 * number_distribution(rho).mean + 1)
    return P, approx
