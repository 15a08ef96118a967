"""Diagnostics of a state: excitation and harmonics distributions, geometric
coarse-grained profiles, Shannon and von Neumann entropies, purity.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dynamics import PureState
from .errors import DegenerateInput, FitError
from .fock import hermitian_eigenvalues

KINDS = ("number", "harmonics", "averaged-harmonics", "markov-diagonal")

EIGEN_CLAMP = 1e-10


@dataclass(frozen=True)
class Distribution:
    """Nonnegative weights over an integer index (n or m) with cached moments."""

    weights: np.ndarray
    kind: str = "number"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    def __len__(self):
        return len(self.weights)

    @cached_property
    def index(self) -> np.ndarray:
        return np.arange(len(self.weights), dtype=float)

    @cached_property
    def total(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def mean(self) -> float:
        """First moment; for harmonics distributions this is <|m|>."""
        return float(self.index @ self.weights)

    @property
    def mean_abs(self) -> float:
        # Indices are nonnegative, so <|m|> and <m> coincide.
        return self.mean

    @cached_property
    def second_moment(self) -> float:
        return float((self.index**2) @ self.weights)


def _as_amplitudes(state):
    if isinstance(state, PureState):
        return state.amplitudes
    return np.asarray(state)


def number_distribution(state) -> Distribution:
    """w_n = <n|rho|n> from a PureState, amplitude vector, or density matrix."""
    a = _as_amplitudes(state)
    if a.ndim == 2:
        w = np.real(np.diagonal(a)).copy()
    else:
        w = a.real**2 + a.imag**2
    return Distribution(w, "number")


def harmonics_weights(w) -> np.ndarray:
    """Pure-state harmonics weights (2 - delta_m0) sum_n w_n w_{n+m}, normalized.

    Works on the last axis, so a (..., N) stack of number distributions is
    transformed in one call.
    """
    w = np.asarray(w, dtype=float)
    N = w.shape[-1]
    size = 1 << (2 * N - 1).bit_length()
    spec = np.fft.rfft(w, n=size, axis=-1)
    acf = np.fft.irfft(spec.real**2 + spec.imag**2, n=size, axis=-1)[..., :N]
    np.maximum(acf, 0.0, out=acf)
    acf[..., 1:] *= 2.0
    total = w.sum(axis=-1, keepdims=True) ** 2
    return acf / total


def harmonics_distribution(state) -> Distribution:
    """Harmonics distribution of a pure state (number of theta-harmonics of its Wigner function)."""
    w = number_distribution(state).weights
    return Distribution(harmonics_weights(w), "harmonics")


def _diagonal_sums(rho: np.ndarray) -> np.ndarray:
    # sum over |n - n'| = m of |rho_{n n'}|^2; Hermiticity makes this
    # (2 - delta_m0) * sum_n |rho_{n+m, n}|^2.
    N = rho.shape[0]
    a = rho.real**2 + rho.imag**2
    i = np.arange(N)
    lag = np.abs(np.subtract.outer(i, i)).ravel()
    return np.bincount(lag, weights=a.ravel(), minlength=N)


def averaged_harmonics_distribution(rho) -> tuple[Distribution, float]:
    """Harmonics distribution of a mixed state, normalized by its purity.

    Returns ``(distribution, purity)``.
    """
    rho = np.asarray(rho)
    sums = _diagonal_sums(rho)
    p = float(sums.sum())
    if p < 1e-12:
        raise DegenerateInput(f"purity {p:.3e} too small to normalize the harmonics distribution")
    return Distribution(sums / p, "averaged-harmonics"), p


def geometric_profile(mean: float, length: int, kind: str = "number") -> Distribution:
    """Coarse-grained exponential profile parameterized by ``mean``, q = mean / (mean + 1).

    ``kind="number"`` gives w_n = q^n / (mean + 1), whose first moment is
    exactly ``mean``.  ``kind="harmonics"`` gives (2 - delta_m0) q^m / (2 mean + 1);
    its first moment is mean + mean / (2 mean + 1), so ``mean`` matches
    <|m|> only up to about 1/2.
    """
    if mean < 0:
        raise ValueError(f"mean must be nonnegative, got {mean}")
    idx = np.arange(length, dtype=float)
    if mean == 0:
        w = np.zeros(length)
        w[0] = 1.0
        return Distribution(w, kind)
    q = mean / (mean + 1.0)
    decay = np.exp(idx * np.log(q))
    if kind == "number":
        return Distribution(decay / (mean + 1.0), "number")
    if kind == "harmonics":
        w = 2.0 * decay / (2.0 * mean + 1.0)
        w[0] *= 0.5
        return Distribution(w, "harmonics")
    raise ValueError(f"geometric profiles come in 'number' or 'harmonics' kind, not {kind!r}")


def fit_geometric_slope(profile, rel_threshold: float = 1e-6, min_points: int = 10) -> float:
    """Mean of the geometric law that best matches the profile's exponential decay.

    Weighted least squares of ln w against the index, each point weighted by
    w itself, over the points with w > rel_threshold * max(w).  The m = 0
    entry of a harmonics profile carries half the prefactor of the others
    and is left out.  The fitted ratio q gives mean = q / (1 - q).
    """
    if isinstance(profile, Distribution):
        w, kind = profile.weights, profile.kind
    else:
        w, kind = np.asarray(profile, dtype=float), "number"
    idx = np.arange(len(w), dtype=float)
    use = w > rel_threshold * w.max()
    if kind in ("harmonics", "averaged-harmonics"):
        use[0] = False
    if use.sum() < min_points:
        raise FitError(f"only {int(use.sum())} usable points, need {min_points}")
    x, y, wt = idx[use], np.log(w[use]), w[use]
    xm = np.average(x, weights=wt)
    ym = np.average(y, weights=wt)
    slope = np.sum(wt * (x - xm) * (y - ym)) / np.sum(wt * (x - xm) ** 2)
    if slope >= 0:
        raise FitError(f"profile does not decay (slope {slope:.3g})")
    q = np.exp(slope)
    return float(q / (1.0 - q))


def shannon_entropy(weights) -> float:
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    w = w[w > 0]
    return float(-(w * np.log(w)).sum())


def information_entropy(profile) -> float:
    """Shannon entropy in nats of a distribution (0 ln 0 = 0)."""
    return shannon_entropy(profile)


def coarse_grained_information_entropy(mean: float) -> float:
    """Shannon entropy of the geometric harmonics profile with first moment ``mean``.

    Closed form of the infinite sum; no truncation.
    """
    if mean <= 0:
        return 0.0
    p0 = 1.0 / (2 * mean + 1)
    c = 2.0 * p0
    log_q = np.log(mean) - np.log1p(mean)
    # sum_{m>=1} q^m = mean,  sum_{m>=1} m q^m = mean (mean + 1)
    return float(-p0 * np.log(p0) - c * mean * np.log(c) - c * mean * (mean + 1) * log_q)


def geometric_number_entropy(mean: float) -> float:
    """Shannon entropy of the geometric number profile: (mu+1) ln(mu+1) - mu ln mu."""
    if mean <= 0:
        return 0.0
    return float((mean + 1) * np.log1p(mean) - mean * np.log(mean))


def clamped_spectrum(rho) -> np.ndarray:
    """Eigenvalues of a density matrix with rounding-level negatives set to zero."""
    lam = hermitian_eigenvalues(rho)
    if lam[-1] < -EIGEN_CLAMP:
        raise ValueError(f"density matrix has eigenvalue {lam[-1]:.3e} < -{EIGEN_CLAMP:g}")
    return np.clip(lam, 0.0, None)


def von_neumann_entropy(rho) -> float:
    """-Tr rho ln rho in nats."""
    return shannon_entropy(clamped_spectrum(rho))


def purity(rho) -> float:
    """Tr rho^2.  Accepts a density matrix, a PureState, or an amplitude vector."""
    a = _as_amplitudes(rho)
    if a.ndim == 1:
        return float(np.vdot(a, a).real ** 2)
    return float(np.sum(a.real**2 + a.imag**2))
