"""Deterministic Monte Carlo over noise histories.

Realizations are grouped in fixed-size blocks that depend only on the
realization count, never on the number of workers.  Each block is evolved
as one (N, B) matrix, its statistics land in a pre-indexed slot, and slots
are reduced in index order, so any worker count gives bit-identical results.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    LEAK_TOL,
    STRONG_NOISE_SIGMA,
    TAIL_FRACTION,
    TAIL_TOL,
    FloquetOperators,
    evolve_block,
    required_basis,
    tail_mass,
)
from .errors import TruncationError
from .fock import OscillatorParams
from .observables import harmonics_weights
from .seeding import derive_seed, gaussian_angles

__all__ = [
    "EnsembleSpec",
    "EnsembleResult",
    "SigmaStats",
    "ReferenceRun",
    "derive_seed",
    "reference_run",
    "run_ensemble",
    "self_averaging_report",
    "mc_density_matrix",
]

BLOCK_SIZE = 50


def trajectory_sigma(sigma: float) -> float:
    """Noise level actually sampled; infinity maps to STRONG_NOISE_SIGMA."""
    return STRONG_NOISE_SIGMA if math.isinf(sigma) else float(sigma)


@dataclass(frozen=True)
class EnsembleSpec:
    params: OscillatorParams
    sigmas: tuple
    t_max: int
    realizations: int = 1000
    base_seed: int = 0
    workers: int = 1
    distributions: bool = True
    pairs: bool = False
    block_size: int = BLOCK_SIZE
    leak_tol: float = LEAK_TOL
    tail_tol: float | None = TAIL_TOL

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.block_size < 2 or self.block_size % 2:
            raise ValueError("block_size must be even and >= 2")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("noise levels must be nonnegative")


@dataclass
class ReferenceRun:
    """Noise-free trajectory from the vacuum and its moments, t = 0..t_max."""

    amplitudes: np.ndarray  # (T+1, N)
    w: np.ndarray  # (T+1, N)
    mean_n: np.ndarray
    mean_abs_m: np.ndarray
    mean_m2: np.ndarray
    harmonics: np.ndarray  # (T+1, N)

    @property
    def t(self):
        return np.arange(len(self.mean_n))


def reference_run(ops: FloquetOperators, t_max: int, leak_tol: float = LEAK_TOL) -> ReferenceRun:
    amps = np.empty((t_max + 1, ops.N), dtype=complex)
    try:
        for t, psi in evolve_block(ops, np.zeros((t_max, 1)), leak_tol=leak_tol):
            amps[t] = psi[:, 0]
    except TruncationError as exc:
        raise TruncationError(str(exc).replace("column 0", "noise-free run", 1),
                              required_basis=exc.required_basis, where=(None, 0, exc.where[1])) from exc
    w = amps.real**2 + amps.imag**2
    W = harmonics_weights(w)
    m = np.arange(ops.N, dtype=float)
    return ReferenceRun(amps, w, w @ m, W @ m, W @ (m * m), W)


@dataclass
class SigmaStats:
    """Per-history statistics for one noise level; arrays are (K, T+1)."""

    sigma: float
    fidelity: np.ndarray
    mean_n: np.ndarray
    mean_abs_m: np.ndarray
    mean_m2: np.ndarray
    tail: np.ndarray  # (T+1,) mean tail mass
    avg_w: np.ndarray | None = None  # (T+1, N)
    avg_W: np.ndarray | None = None  # (T+1, N)
    pair_overlap: np.ndarray | None = None  # (K // 2, T+1)

    @property
    def realizations(self) -> int:
        return self.fidelity.shape[0]

    @staticmethod
    def mean(samples):
        return samples.mean(axis=0)

    @staticmethod
    def stderr(samples):
        K = samples.shape[0]
        if K < 2:
            return np.zeros(samples.shape[1:])
        return samples.std(axis=0, ddof=1) / np.sqrt(K)


@dataclass
class EnsembleResult:
    spec: EnsembleSpec
    reference: ReferenceRun
    stats: list = field(default_factory=list)

    def for_sigma(self, sigma: float) -> SigmaStats:
        for s in self.stats:
            if s.sigma == sigma:
                return s
        raise KeyError(sigma)


def _run_block(ops, spec, ref_amps, sigma_index, start, stop):
    sigma = trajectory_sigma(spec.sigmas[sigma_index])
    T, N, B = spec.t_max, ops.N, stop - start
    seeds = [derive_seed(spec.base_seed, sigma_index, k) for k in range(start, stop)]
    angles = np.empty((T, B))
    for j, seed in enumerate(seeds):
        angles[:, j] = gaussian_angles(sigma, T, seed)

    out = {
        "fidelity": np.empty((B, T + 1)),
        "mean_n": np.empty((B, T + 1)),
        "mean_abs_m": np.empty((B, T + 1)),
        "mean_m2": np.empty((B, T + 1)),
        "tail": np.empty(T + 1),
    }
    if spec.distributions:
        out["w"] = np.empty((T + 1, N))
        out["W"] = np.empty((T + 1, N))
    if spec.pairs:
        out["pairs"] = np.empty((B // 2, T + 1))

    m = np.arange(N, dtype=float)
    try:
        for t, psi in evolve_block(ops, angles, leak_tol=spec.leak_tol):
            w = (psi.real**2 + psi.imag**2).T
            W = harmonics_weights(w)
            out["mean_n"][:, t] = w @ m
            out["mean_abs_m"][:, t] = W @ m
            out["mean_m2"][:, t] = W @ (m * m)
            ov = ref_amps[t].conj() @ psi
            out["fidelity"][:, t] = ov.real**2 + ov.imag**2
            out["tail"][t] = tail_mass(w).sum()
            if spec.distributions:
                out["w"][t] = w.sum(axis=0)
                out["W"][t] = W.sum(axis=0)
            if spec.pairs:
                ov = np.einsum("ij,ij->j", psi[:, 0:B - 1:2].conj(), psi[:, 1:B:2])
                out["pairs"][:, t] = ov.real**2 + ov.imag**2
    except TruncationError as exc:
        col, t = exc.where
        raise TruncationError(
            str(exc).replace(f"column {col}", f"sigma={spec.sigmas[sigma_index]:g}, realization {start + col}", 1),
            required_basis=exc.required_basis,
            where=(spec.sigmas[sigma_index], start + col, t),
        ) from exc
    return out


def run_ensemble(spec: EnsembleSpec, ops: FloquetOperators | None = None) -> EnsembleResult:
    """Evolve ``spec.realizations`` noise histories per noise level.

    Pass prebuilt ``ops`` to avoid rebuilding the kick operator.
    """
    if ops is None:
        ops = FloquetOperators(spec.params)
    elif ops.params != spec.params:
        raise ValueError("operators were built for different parameters")

    reference = reference_run(ops, spec.t_max, spec.leak_tol)
    K = spec.realizations
    jobs = [
        (s_idx, start, min(start + spec.block_size, K))
        for s_idx in range(len(spec.sigmas))
        for start in range(0, K, spec.block_size)
    ]

    def work(job):
        return _run_block(ops, spec, reference.amplitudes, *job)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            blocks = list(pool.map(work, jobs))
    else:
        blocks = [work(job) for job in jobs]

    result = EnsembleResult(spec, reference)
    for s_idx, sigma in enumerate(spec.sigmas):
        mine = [b for job, b in zip(jobs, blocks) if job[0] == s_idx]
        stats = SigmaStats(
            sigma=sigma,
            fidelity=np.concatenate([b["fidelity"] for b in mine]),
            mean_n=np.concatenate([b["mean_n"] for b in mine]),
            mean_abs_m=np.concatenate([b["mean_abs_m"] for b in mine]),
            mean_m2=np.concatenate([b["mean_m2"] for b in mine]),
            tail=_ordered_sum([b["tail"] for b in mine]) / K,
        )
        if spec.distributions:
            stats.avg_w = _ordered_sum([b["w"] for b in mine]) / K
            stats.avg_W = _ordered_sum([b["W"] for b in mine]) / K
        if spec.pairs:
            stats.pair_overlap = np.concatenate([b["pairs"] for b in mine])
        result.stats.append(stats)

    if spec.tail_tol is not None:
        _refuse_truncated(None, tail_mass(reference.w), reference.mean_n, spec.tail_tol, ops.N)
        for stats in result.stats:
            _refuse_truncated(stats.sigma, stats.tail, stats.mean(stats.mean_n), spec.tail_tol, ops.N)
    return result


def _refuse_truncated(sigma, tail, mean_n, tol, N):
    bad = np.nonzero(tail > tol)[0]
    if bad.size:
        t = int(bad[0])
        label = "noise-free run" if sigma is None else f"sigma={sigma:g}"
        need = required_basis(float(np.max(mean_n)))
        raise TruncationError(
            f"{label}: at t={t} the top {TAIL_FRACTION:.0%} of the N={N} basis holds "
            f"{tail[t]:.2e} > {tol:g}; use N >= {need}",
            required_basis=need,
            where=(sigma, None, t),
        )


def _ordered_sum(parts):
    total = np.array(parts[0], dtype=float)
    for p in parts[1:]:
        total = total + p
    return total


@dataclass
class SelfAveragingReport:
    sigma: float
    rel_std_n: np.ndarray  # (T+1,), zero at t = 0
    rel_std_m: np.ndarray
    rel_std_fidelity: np.ndarray
    threshold: float

    @property
    def flagged(self) -> list:
        """Times at which <n> or <|m|> fluctuate across histories beyond the threshold."""
        bad = (self.rel_std_n > self.threshold) | (self.rel_std_m > self.threshold)
        return [int(t) for t in np.nonzero(bad)[0]]


def _rel_std(samples):
    mean = samples.mean(axis=0)
    std = samples.std(axis=0, ddof=1) if samples.shape[0] > 1 else np.zeros_like(mean)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(mean > 0, std / np.where(mean > 0, mean, 1.0), 0.0)
    return r


def self_averaging_report(result: EnsembleResult, threshold: float = 0.05) -> list:
    """Relative across-history spread of <n>, <|m|> and fidelity for each noise level."""
    if result.spec.realizations < 10:
        raise ValueError("self-averaging diagnostics need at least 10 realizations")
    return [
        SelfAveragingReport(s.sigma, _rel_std(s.mean_n), _rel_std(s.mean_abs_m),
                            _rel_std(s.fidelity), threshold)
        for s in result.stats
    ]


def mc_density_matrix(ops: FloquetOperators, sigma: float, t: int, realizations: int,
                      base_seed: int = 0, sigma_index: int = 0, block_size: int = BLOCK_SIZE,
                      leak_tol: float = LEAK_TOL) -> np.ndarray:
    """Average of |psi_xi(t)><psi_xi(t)| over independent noise histories.

    The O(K N^2) alternative to the exact recursion for the averaged density
    matrix, using the same seed derivation as :func:`run_ensemble`.
    """
    sigma = trajectory_sigma(sigma)
    rho = np.zeros((ops.N, ops.N), dtype=complex)
    for start in range(0, realizations, block_size):
        stop = min(start + block_size, realizations)
        angles = np.stack(
            [gaussian_angles(sigma, t, derive_seed(base_seed, sigma_index, k)) for k in range(start, stop)],
            axis=1,
        )
        psi = None
        for _, psi in evolve_block(ops, angles, leak_tol=leak_tol):
            pass
        rho += psi @ psi.conj().T
    return rho / realizations
