import math

import numpy as np
import pytest

from kicked_oscillator import (
    STRONG_NOISE_SIGMA,
    FloquetOperators,
    OscillatorParams,
    PureState,
    TruncationError,
    averaged_density_step,
    build_dephasing,
    evolve_averaged_density,
    evolve_block,
    floquet_step,
    markov_matrix,
    markov_propagate,
    markov_trajectory,
    noisy_trajectory,
    number_distribution,
    sample_noise_history,
)
from kicked_oscillator.dynamics import check_tail, required_basis, tail_mass

from .conftest import random_state


def poisson(mu, n):
    return np.exp(-mu + n * np.log(mu) - np.array([math.lgamma(k + 1) for k in n]))


def test_phases_examples(ops64):
    assert ops64.phases[0] == 1
    assert ops64.phases[1] == pytest.approx(complex(-0.41615, -0.90930), abs=1e-5)
    assert np.abs(np.abs(ops64.phases) - 1).max() < 1e-12


def test_operators_are_read_only(ops64):
    with pytest.raises(ValueError):
        ops64.phases[0] = 2
    with pytest.raises(ValueError):
        ops64.matrix[0, 0] = 2


def test_one_step_from_vacuum_is_poissonian(ops256):
    s = floquet_step(PureState.vacuum(256), ops256)
    w = number_distribution(s).weights
    assert w[0] == pytest.approx(math.exp(-4), abs=1e-12)
    assert np.abs(w[:60] - poisson(4.0, np.arange(60))).max() < 1e-13
    assert abs(s.norm2 - 1) < 1e-10


def test_step_matches_dense_matrix(ops64, rng):
    psi = random_state(rng, 64, support=20)
    assert np.allclose(floquet_step(PureState(psi), ops64).amplitudes, ops64.matrix @ psi, atol=1e-14)


def test_trivial_kick_keeps_vacuum():
    ops = FloquetOperators(OscillatorParams(g0=0.0, basis_size=8))
    s = PureState.vacuum(8)
    for _ in range(5):
        s = floquet_step(s, ops)
    assert np.array_equal(s.amplitudes, PureState.vacuum(8).amplitudes)


def test_zero_angles_give_noise_free_trajectory(ops256):
    hist = sample_noise_history(0.0, 6, seed=1)
    noisy = noisy_trajectory(PureState.vacuum(256), hist, ops256)
    s = PureState.vacuum(256)
    for k in range(6):
        s = floquet_step(s, ops256)
        assert np.array_equal(noisy[k].amplitudes, s.amplitudes)


def test_noisy_trajectory_reproducible_and_matches_block(ops256):
    hist = sample_noise_history(0.05, 6, seed=99)
    again = sample_noise_history(0.05, 6, seed=99)
    assert np.array_equal(hist.angles, again.angles)
    traj = noisy_trajectory(PureState.vacuum(256), hist, ops256)
    block = dict(evolve_block(ops256, hist.angles[:, None]))
    for t in range(1, 7):
        assert np.allclose(block[t][:, 0], traj[t - 1].amplitudes, atol=1e-13)
        assert abs(traj[t - 1].norm2 - 1) < 1e-9 * t


def test_noise_kick_leaves_number_distribution_alone(ops256):
    quiet = dict(evolve_block(ops256, np.zeros((4, 1))))[4][:, 0]
    angles = np.zeros((4, 1))
    angles[-1, 0] = 0.7
    loud = dict(evolve_block(ops256, angles))[4][:, 0]
    assert np.allclose(np.abs(quiet), np.abs(loud), atol=1e-14)


def test_block_columns_are_independent(ops256):
    rng = np.random.default_rng(3)
    angles = 0.1 * rng.normal(size=(5, 3))
    full = dict(evolve_block(ops256, angles))[5]
    single = dict(evolve_block(ops256, angles[:, 1:2]))[5][:, 0]
    assert np.allclose(full[:, 1], single, atol=1e-13)


def test_history_validation():
    with pytest.raises(ValueError):
        sample_noise_history(0.1, 0, seed=0)
    with pytest.raises(ValueError):
        sample_noise_history(-0.1, 3, seed=0)
    assert np.array_equal(sample_noise_history(0.0, 4, seed=5).angles, np.zeros(4))


def test_gaussian_angle_statistics():
    a = sample_noise_history(0.256, 100_000, seed=2024).angles
    assert abs(a.mean()) < 3 * 0.256 / math.sqrt(1e5)
    assert a.var() == pytest.approx(0.065536, rel=0.05)


def test_leak_raises_with_location():
    ops = FloquetOperators(OscillatorParams(basis_size=64))
    with pytest.raises(TruncationError) as info:
        for _ in evolve_block(ops, np.zeros((20, 2))):
            pass
    assert info.value.where[1] > 1
    assert info.value.required_basis == 128
    with pytest.raises(TruncationError):
        s = PureState.vacuum(64)
        for _ in range(20):
            s = floquet_step(s, ops)


def test_tail_check():
    w = np.zeros(100)
    w[0] = 1 - 1e-6
    w[99] = 1e-6
    assert tail_mass(w) == pytest.approx(1e-6)
    with pytest.raises(TruncationError) as info:
        check_tail(w, t=3)
    assert info.value.required_basis == required_basis(w @ np.arange(100))
    check_tail(w, t=3, tol=1e-5)


def test_density_step_sigma0_stays_pure(ops64, rng):
    psi = random_state(rng, 64, support=10)
    rho = averaged_density_step(np.outer(psi, psi.conj()), ops64, build_dephasing(0.0, 64))
    phi = ops64.matrix @ psi
    assert np.allclose(rho, np.outer(phi, phi.conj()), atol=1e-13)
    assert abs(np.trace(rho @ rho).real - 1) < 1e-8


def test_density_step_infinite_sigma_keeps_diagonal(ops64):
    rho = np.diag(np.r_[0.5, 0.3, 0.2, np.zeros(61)]).astype(complex)
    out = averaged_density_step(rho, ops64, build_dephasing(math.inf, 64))
    assert np.count_nonzero(out - np.diag(np.diag(out))) == 0


def test_averaged_density_invariants(ops256):
    for t, rho in evolve_averaged_density(ops256, 0.032, 6):
        assert np.abs(rho - rho.conj().T).max() < 1e-10
        assert abs(np.trace(rho).real - 1) < 1e-9
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_strong_noise_recursion_is_markov(ops256):
    Q = markov_matrix(ops256)
    w = markov_trajectory(PureState.vacuum(256).amplitudes.real, Q, 5)
    for t, rho in evolve_averaged_density(ops256, STRONG_NOISE_SIGMA, 5):
        a = np.abs(rho) ** 2
        assert a.sum() - np.trace(a) < 1e-10
        assert np.abs(np.diag(rho).real - w[t]).max() < 1e-8


def test_markov_matrix_properties(ops256):
    Q = markov_matrix(ops256)
    assert Q[0, 0] == pytest.approx(0.0183156389, abs=1e-10)
    assert np.array_equal(Q, Q.T) or np.abs(Q - Q.T).max() < 1e-14
    assert Q.min() >= 0
    interior = 256 - ops256.kick.pad // 2
    assert np.abs(Q[:, :interior].sum(axis=0) - 1).max() < 1e-8
    assert np.array_equal(markov_matrix(OscillatorParams(g0=0.0, basis_size=12)), np.eye(12))


def test_markov_propagation(ops256):
    Q = markov_matrix(ops256)
    w0 = np.eye(256)[0]
    assert np.array_equal(markov_propagate(w0, Q, 0), w0)
    w1 = markov_propagate(number_distribution(PureState.vacuum(256)), Q, 1)
    assert w1[0] == pytest.approx(math.exp(-4), abs=1e-12)
    traj = markov_trajectory(w0, Q, 4)
    assert np.allclose(traj[4], markov_propagate(w0, Q, 4), rtol=0, atol=1e-15)


def test_markov_diffusion_law():
    ops = FloquetOperators(OscillatorParams(basis_size=2048))
    traj = markov_trajectory(np.eye(2048)[0], markov_matrix(ops), 25)
    mean = traj @ np.arange(2048)
    t = np.arange(1, 26)
    assert np.abs(mean[1:] / (4 * t) - 1).max() < 0.05
