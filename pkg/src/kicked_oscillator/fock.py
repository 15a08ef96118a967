"""Fock-basis operators for the kicked quartic oscillator.

One period of the motion is the Floquet map

    F = exp(-i (omega0 n + hbar n^2)) D(i g0 / sqrt(hbar)),

a displacement (kick) followed by free rotation with a quartic term.  Both
factors are built here in a truncated basis |0>, ..., |N-1>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, TruncationError


@dataclass(frozen=True)
class OscillatorParams:
    """Physical constants and basis size.

    ``pad`` is the number of extra basis states used while constructing
    the kick; ``None`` selects :func:`default_pad`.
    """

    omega0: float = 1.0
    hbar: float = 1.0
    g0: float = 2.0
    basis_size: int = 2048
    pad: int | None = None

    def __post_init__(self):
        if int(self.basis_size) != self.basis_size or self.basis_size < 2:
            raise ValueError(f"basis_size must be an integer >= 2, got {self.basis_size}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        # g0 = 0 is allowed: it is the trivial (identity-kick) model.
        if not self.g0 >= 0:
            raise ValueError(f"g0 must be nonnegative, got {self.g0}")
        if self.pad is not None and self.pad < 0:
            raise ValueError(f"pad must be nonnegative, got {self.pad}")

    @property
    def N(self) -> int:
        return int(self.basis_size)

    @property
    def kick_strength(self) -> float:
        """Modulus of the displacement amplitude, g0 / sqrt(hbar)."""
        return self.g0 / math.sqrt(self.hbar)

    @property
    def diffusion_rate(self) -> float:
        """Growth of <n> per kick in the diffusive regime, g0^2 / hbar."""
        return self.g0**2 / self.hbar

    @property
    def resolved_pad(self) -> int:
        return default_pad(self) if self.pad is None else int(self.pad)

    def with_basis(self, basis_size: int) -> "OscillatorParams":
        return OscillatorParams(self.omega0, self.hbar, self.g0, basis_size, self.pad)


def default_pad(params: OscillatorParams) -> int:
    """Padding that insulates the N x N kick block from the truncation edge.

    A kick of strength g moves |n> by about 2 g sqrt(n) + g^2 quanta, so the
    construction basis is extended by a margin proportional to that reach.
    """
    g = params.kick_strength
    return max(64, math.ceil(8 * g * g + 6 * g * math.sqrt(params.N)))


@dataclass(frozen=True)
class Displacement:
    """Top-left N x N block of a displacement operator.

    Attributes
    ----------
    matrix : (N, N) complex ndarray
    unitarity_defect : float
        max | ||column||^2 - 1 | over the interior columns j < N - pad/2.
        Columns closer to the edge legitimately lose norm out of the block.
    padding_defect : float
        Largest weight that any column j < N places in the outer half of the
        padded construction basis.  Large values mean ``pad`` is too small.
    pad : int
    """

    matrix: np.ndarray
    unitarity_defect: float
    padding_defect: float
    pad: int

    @property
    def N(self) -> int:
        return self.matrix.shape[0]


def build_number_phase(params: OscillatorParams) -> np.ndarray:
    """Diagonal of exp(-i (omega0 n + hbar n^2)) for n = 0..N-1."""
    n = np.arange(params.N, dtype=float)
    return np.exp(-1j * (params.omega0 * n + params.hbar * n * n))


def build_displacement(params: OscillatorParams, amplitude: complex | None = None,
                       tol: float = 1e-8) -> Displacement:
    """Displacement operator D(alpha) = exp(alpha a^+ - alpha^* a) in the Fock basis.

    The default amplitude is the kick ``i g0 / sqrt(hbar)``.  For
    alpha = i r exp(i phi) we have D(alpha) = R exp(i r X) R^+ with
    X = a + a^+ and R = exp(i phi n).  The tridiagonal X is diagonalized in
    an (N + pad)-dimensional basis and its spectrum exponentiated; only the
    N x N block is kept.

    Raises
    ------
    TruncationError
        If ``padding_defect`` exceeds ``tol``.
    """
    N = params.N
    pad = params.resolved_pad
    if amplitude is None:
        amplitude = 1j * params.kick_strength
    r = abs(amplitude)
    if r == 0:
        return Displacement(np.eye(N, dtype=complex), 0.0, 0.0, pad)

    M = N + pad
    try:
        lam, V = eigh_tridiagonal(np.zeros(M), np.sqrt(np.arange(1, M, dtype=float)))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"tridiagonal eigensolver failed for M={M}") from exc
    c, s = np.cos(r * lam), np.sin(r * lam)
    top = V[:N]
    block = (top * c) @ top.T + 1j * ((top * s) @ top.T)

    outer = V[N + pad // 2:]
    if outer.shape[0]:
        spill = ((outer * c) @ top.T) ** 2 + ((outer * s) @ top.T) ** 2
        padding_defect = float(spill.sum(axis=0).max())
    else:
        padding_defect = 0.0

    phi = np.angle(amplitude) - np.pi / 2
    if phi != 0.0:
        rot = np.exp(1j * phi * np.arange(N))
        block = rot[:, None] * block * rot.conj()[None, :]

    interior = max(N - pad // 2, 1)
    norms = np.einsum("ij,ij->j", block[:, :interior].real, block[:, :interior].real)
    norms += np.einsum("ij,ij->j", block[:, :interior].imag, block[:, :interior].imag)
    defect = float(np.abs(norms - 1.0).max())

    if padding_defect > tol:
        raise TruncationError(
            f"kick construction reaches the padding edge (defect {padding_defect:.2e} > {tol:g}); "
            f"increase pad above {pad}",
            required_basis=None,
        )
    return Displacement(block, defect, padding_defect, pad)


def build_dephasing(sigma: float, N: int) -> np.ndarray:
    """Noise-averaging mask exp(-sigma^2 (n' - n)^2 / 2).

    ``sigma = inf`` gives the identity matrix (the elementwise limit).
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if np.isinf(sigma):
        return np.eye(N)
    d = np.arange(N, dtype=float)
    d = np.subtract.outer(d, d)
    return np.exp(-0.5 * sigma * sigma * d * d)


def hermitian_eigenvalues(matrix, herm_tol: float = 1e-10) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted in descending order."""
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    asym = np.abs(a - a.conj().T).max() if a.size else 0.0
    if asym > herm_tol:
        raise ValueError(f"matrix is not Hermitian (max |A - A^+| = {asym:.3e})")
    try:
        vals = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    return vals[::-1]
