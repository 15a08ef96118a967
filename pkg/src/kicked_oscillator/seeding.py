"""Stateless seed derivation and counter-based Gaussian streams.

Every noise realization draws from its own Philox generator keyed by a seed
derived from (base_seed, sigma_index, realization_index).  Nothing is shared
between realizations, so results do not depend on scheduling order.
"""
import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # SplitMix64 finalizer; a bijection on 64-bit integers.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, sigma_index: int, realization_index: int) -> int:
    """64-bit seed for one realization.

    Each input is folded in with a SplitMix64 round, so for a fixed
    (base_seed, sigma_index) the map over ``realization_index`` is injective.
    """
    if sigma_index < 0 or realization_index < 0:
        raise ValueError("indices must be nonnegative")
    h = _splitmix64(base_seed & _MASK64)
    h = _splitmix64(h ^ (sigma_index & _MASK64))
    return _splitmix64(h ^ (realization_index & _MASK64))


def gaussian_angles(sigma: float, t: int, seed: int) -> np.ndarray:
    """``t`` i.i.d. N(0, sigma^2) kick angles from the Philox stream keyed by ``seed``."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return np.zeros(t)
    rng = np.random.Generator(np.random.Philox(seed))
    return sigma * rng.standard_normal(t)
