"""Time evolution: noisy pure-state trajectories, the noise-averaged density
matrix recursion, and the strong-noise Markov chain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import TruncationError
from .fock import (
    Displacement,
    OscillatorParams,
    build_dephasing,
    build_displacement,
    build_number_phase,
)
from .seeding import gaussian_angles

# Noise level standing in for sigma = infinity in Monte Carlo runs: the
# off-diagonal dephasing factor is then at most exp(-32).
STRONG_NOISE_SIGMA = 8.0

LEAK_TOL = 1e-6
TAIL_TOL = 1e-8
TAIL_FRACTION = 0.05


@dataclass
class PureState:
    """Amplitudes over |0..N-1> plus the norm lost through the basis edge."""

    amplitudes: np.ndarray
    leaked: float = 0.0

    @classmethod
    def vacuum(cls, N: int) -> "PureState":
        amps = np.zeros(N, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class NoiseHistory:
    sigma: float
    seed: int
    angles: np.ndarray = field(repr=False)

    @property
    def t(self) -> int:
        return len(self.angles)


class FloquetOperators:
    """Immutable bundle of the one-period operators for a parameter set."""

    def __init__(self, params: OscillatorParams, phases=None, kick: Displacement | None = None):
        self.params = params
        self.phases = build_number_phase(params) if phases is None else phases
        self.kick = build_displacement(params) if kick is None else kick
        self.phases.setflags(write=False)
        self.kick.matrix.setflags(write=False)

    @property
    def N(self) -> int:
        return self.params.N

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense Floquet matrix, phase (row) times kick."""
        m = self.phases[:, None] * self.kick.matrix
        m.setflags(write=False)
        return m

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """Apply F to a vector or to the columns of an (N, K) block."""
        out = self.kick.matrix @ amplitudes
        if out.ndim == 1:
            out *= self.phases
        else:
            out *= self.phases[:, None]
        return out


def tail_mass(weights, fraction: float = TAIL_FRACTION) -> np.ndarray:
    """Probability held by the top ``fraction`` of the basis (last axis)."""
    w = np.asarray(weights)
    start = int(np.floor(w.shape[-1] * (1 - fraction)))
    return w[..., start:].sum(axis=-1)


def check_tail(weights, t: int, tol: float = TAIL_TOL, fraction: float = TAIL_FRACTION):
    """Refuse distributions whose upper basis edge is populated beyond ``tol``."""
    w = np.asarray(weights, dtype=float)
    tail = float(np.max(tail_mass(w, fraction)))
    if tail > tol:
        N = w.shape[-1]
        mean = float(np.max(w @ np.arange(N)))
        raise TruncationError(
            f"at t={t} the top {fraction:.0%} of the N={N} basis holds {tail:.2e} > {tol:g}; "
            f"use N >= {required_basis(mean)}",
            required_basis=required_basis(mean),
        )


def required_basis(mean_n: float) -> int:
    """Rule-of-thumb basis size for a geometric profile with mean ``mean_n``."""
    return int(np.ceil(20 * max(mean_n, 1.0)))


def floquet_step(state: PureState, ops: FloquetOperators, leak_tol: float = LEAK_TOL) -> PureState:
    before = state.norm2
    amps = ops.apply(state.amplitudes)
    after = float(np.vdot(amps, amps).real)
    leaked = state.leaked + max(before - after, 0.0)
    if leaked > leak_tol:
        raise TruncationError(
            f"state leaked {leaked:.2e} of its norm through the N={ops.N} basis edge",
            required_basis=2 * ops.N,
        )
    return PureState(amps, leaked)


def sample_noise_history(sigma: float, t: int, seed: int) -> NoiseHistory:
    """Gaussian kick angles for one noise history."""
    if t < 1:
        raise ValueError(f"history length must be >= 1, got {t}")
    return NoiseHistory(float(sigma), int(seed), gaussian_angles(sigma, t, seed))


def noisy_trajectory(initial: PureState, history: NoiseHistory, ops: FloquetOperators,
                     leak_tol: float = LEAK_TOL) -> list[PureState]:
    """States after each of the ``history.t`` periods exp(-i xi_tau n) F."""
    n = np.arange(ops.N)
    state = initial
    out = []
    for xi in history.angles:
        state = floquet_step(state, ops, leak_tol)
        if xi != 0.0:
            state.amplitudes *= np.exp(-1j * xi * n)
        out.append(state)
    return out


def evolve_block(ops: FloquetOperators, angles: np.ndarray, initial=None,
                 leak_tol: float = LEAK_TOL):
    """Evolve K pure states side by side.

    Parameters
    ----------
    angles : (t_max, K) array
        Column k is the noise history of realization k.
    initial : (N,) or (N, K) array, optional
        Defaults to the vacuum for every column.

    Yields
    ------
    (t, amplitudes) for t = 0..t_max, with amplitudes of shape (N, K).
    Raises TruncationError with ``where=(column, t)`` on excess leakage.
    """
    angles = np.asarray(angles, dtype=float)
    t_max, K = angles.shape
    N = ops.N
    if initial is None:
        psi = np.zeros((N, K), dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.array(initial, dtype=complex)
        if psi.ndim == 1:
            psi = np.repeat(psi[:, None], K, axis=1)
    norm0 = np.einsum("ij,ij->j", psi.real, psi.real) + np.einsum("ij,ij->j", psi.imag, psi.imag)
    yield 0, psi
    n = np.arange(N, dtype=float)
    for t in range(1, t_max + 1):
        psi = ops.apply(psi)
        xi = angles[t - 1]
        if np.any(xi != 0.0):
            psi *= np.exp(-1j * np.outer(n, xi))
        norm = np.einsum("ij,ij->j", psi.real, psi.real) + np.einsum("ij,ij->j", psi.imag, psi.imag)
        leaked = norm0 - norm
        worst = int(np.argmax(leaked))
        if leaked[worst] > leak_tol:
            raise TruncationError(
                f"column {worst} leaked {leaked[worst]:.2e} of its norm by t={t} (N={N})",
                required_basis=2 * N,
                where=(worst, t),
            )
        yield t, psi


def averaged_density_step(rho: np.ndarray, ops: FloquetOperators, mask: np.ndarray) -> np.ndarray:
    """One period of the noise-averaged density matrix: mask * (F rho F^+)."""
    U = ops.matrix
    out = U @ rho @ U.conj().T
    out *= mask
    # Restore exact Hermiticity lost to rounding in the two products.
    out = 0.5 * (out + out.conj().T)
    return out


def evolve_averaged_density(ops: FloquetOperators, sigma: float, t_max: int, rho0=None,
                            trace_tol: float = LEAK_TOL):
    """Yield (t, rho) for t = 0..t_max from the exact averaging recursion.

    O(N^3) per step; meant for N up to about a thousand.  Raises
    TruncationError when the trace has dropped by more than ``trace_tol``.
    """
    N = ops.N
    if rho0 is None:
        rho = np.zeros((N, N), dtype=complex)
        rho[0, 0] = 1.0
    else:
        rho = np.array(rho0, dtype=complex)
    mask = build_dephasing(sigma, N)
    tr0 = float(np.trace(rho).real)
    yield 0, rho
    for t in range(1, t_max + 1):
        rho = averaged_density_step(rho, ops, mask)
        loss = tr0 - float(np.trace(rho).real)
        if loss > trace_tol:
            raise TruncationError(
                f"averaged density matrix lost {loss:.2e} of its trace by t={t} (N={N})",
                required_basis=2 * N,
                where=(t,),
            )
        yield t, rho


def markov_matrix(params_or_ops, tol: float = 1e-8) -> np.ndarray:
    """Strong-noise transition kernel Q[n, n'] = |<n| D(i g0/sqrt(hbar)) |n'>|^2.

    Raises TruncationError if an interior column (n' < N - pad/2) does not
    sum to one within ``tol``.
    """
    if isinstance(params_or_ops, FloquetOperators):
        kick = params_or_ops.kick
    else:
        kick = build_displacement(params_or_ops)
    D = kick.matrix
    Q = D.real**2 + D.imag**2
    interior = max(Q.shape[0] - kick.pad // 2, 1)
    dev = float(np.abs(Q[:, :interior].sum(axis=0) - 1.0).max())
    if dev > tol:
        raise TruncationError(f"interior column sums of Q deviate from 1 by {dev:.2e}")
    return Q


def markov_trajectory(w0, Q: np.ndarray, t_max: int) -> np.ndarray:
    """Rows are w^(d)(t) for t = 0..t_max."""
    w = np.asarray(getattr(w0, "weights", w0), dtype=float)
    out = np.empty((t_max + 1, w.shape[0]))
    out[0] = w
    for t in range(1, t_max + 1):
        w = Q @ w
        out[t] = w
    return out


def markov_propagate(w0, Q: np.ndarray, t: int) -> np.ndarray:
    """Diagonal occupation after ``t`` steps of the strong-noise Markov chain.

    ``w0`` may be an array or a :class:`~kicked_oscillator.observables.Distribution`.
    """
    w = np.asarray(getattr(w0, "weights", w0), dtype=float)
    for _ in range(t):
        w = Q @ w
    return w
