import math

import numpy as np
import pytest
from scipy.special import i0e

from kicked_oscillator import (
    DegenerateInput,
    FitError,
    FloquetOperators,
    InsufficientRealizations,
    OscillatorParams,
    decoherence_time,
    fidelity_mc,
    fidelity_strong,
    fidelity_weak,
    markov_matrix,
    reference_run,
    reversibility_mc,
    scaling_fit,
    sigma_critical,
    strong_path_sum,
)
from kicked_oscillator.fidelity import FidelityCurve, purity_curve, scaling_fit_value, sigma_critical_diffusion


@pytest.fixture(scope="module")
def ops512():
    return FloquetOperators(OscillatorParams(basis_size=512))


def test_noise_free_fidelity_is_one(ops256):
    c = fidelity_mc(ops256, 0.0, 5, realizations=4)
    assert np.allclose(c.F, 1.0, atol=1e-13)
    assert c.F[0] == 1.0


def test_fidelity_starts_at_one(ops256):
    c = fidelity_mc(ops256, 0.2, 4, realizations=10)
    assert c.F[0] == pytest.approx(1.0, abs=1e-14)


def test_requires_two_realizations(ops256):
    with pytest.raises(InsufficientRealizations):
        fidelity_mc(ops256, 0.1, 3, realizations=1)
    with pytest.raises(InsufficientRealizations):
        reversibility_mc(ops256, 0.1, 3, realizations=1)


def test_weak_law_one_kick():
    # <m^2> of the one-kick Poisson(4) state is 2 Var = 8
    ref = reference_run(FloquetOperators(OscillatorParams(basis_size=128)), 1)
    assert ref.mean_m2[1] == pytest.approx(8.0, rel=1e-10)
    assert fidelity_weak(0.1, ref.mean_m2, 1) == pytest.approx(1 - 0.5 * 0.01 * 8.0, rel=1e-10)
    assert fidelity_weak(0.0, ref.mean_m2, 1) == 1.0


def test_weak_law_matches_monte_carlo(ops256):
    T = 5
    sched = sigma_critical(ops256, T)
    sigma = 0.3 * sched.at(T)
    c = fidelity_mc(ops256, sigma, T, realizations=200, seed=2)
    weak = fidelity_weak(sigma, reference_run(ops256, T).mean_m2)
    allowance = 3 * c.stderr + (sigma / sched.exact[-1]) ** 4
    assert np.all(np.abs(c.F[1:] - weak[1:]) < allowance[1:])


def test_sigma_c_closed_forms():
    p = OscillatorParams()
    assert sigma_critical_diffusion(p, 1) == pytest.approx(0.25)
    assert sigma_critical_diffusion(p, 10) == pytest.approx(1 / (4 * math.sqrt(385)))
    assert sigma_critical_diffusion(p, 10) == pytest.approx(0.01274, abs=1e-5)


def test_sigma_c_schedule(ops512):
    sched = sigma_critical(ops512, 10, sigmas=(0.0, 0.032, math.inf))
    assert sched.at(1) == pytest.approx(0.5, rel=1e-10)
    assert np.all(np.diff(sched.exact) < 0)
    assert np.all(np.diff(sched.approx) < 0)
    assert list(sched.t_dec) == [0.032]
    with pytest.raises(ValueError):
        sigma_critical(ops512, 0)


def test_decoherence_time_examples():
    p = OscillatorParams()
    assert decoherence_time(p, 0.032) == pytest.approx(38.27, abs=0.01)
    assert decoherence_time(p, 0.256) == pytest.approx(4.79, abs=0.01)
    assert decoherence_time(p, 0.064) == pytest.approx(decoherence_time(p, 0.032) / 2)
    with pytest.raises(DegenerateInput):
        decoherence_time(p, 0.0)
    with pytest.raises(DegenerateInput):
        decoherence_time(OscillatorParams(g0=0.0), 0.1)


def test_strong_fidelity_early_times(ops256):
    F = fidelity_strong(ops256, 3)
    assert F[0] == 1.0
    assert F[1] == pytest.approx(i0e(8.0), rel=1e-10)  # sum of squared Poisson(4) weights
    assert F[1] == pytest.approx(0.14343, abs=1e-5)


@pytest.mark.xfail(strict=True, reason="sum of squared Poisson(4) weights is 0.14343, not 0.1009")
def test_strong_fidelity_one_kick_listed_value(ops256):
    assert fidelity_strong(ops256, 1)[1] == pytest.approx(0.1009, abs=1e-3)


def test_strong_path_sum_equals_distribution_overlap(ops256):
    F = fidelity_strong(ops256, 6, Q=markov_matrix(ops256))
    for t in range(7):
        assert abs(strong_path_sum(ops256, t) - F[t]) < 1e-12


def test_scaling_fit_values():
    assert scaling_fit_value(0.0) == 1.0
    assert scaling_fit_value(1.0) == 0.5
    assert np.allclose(scaling_fit_value(np.array([1e-6, 3.0])), [1.0, 0.1])


def test_scaling_fit_needs_two_levels(ops256):
    c = FidelityCurve.from_samples(0.01, np.ones((3, 4)))
    with pytest.raises(FitError):
        scaling_fit([c], sigma_critical(ops256, 3))


def test_clamping_and_raw_bounds():
    samples = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-12]])
    c = FidelityCurve.from_samples(0.1, samples)
    assert c.F.max() <= 1.0
    assert c.F_raw[1] > 1.0


def test_ordering_and_sandwich(ops512):
    T, K = 8, 100
    sigmas = (0.004, 0.032, 0.256)
    curves = [fidelity_mc(ops512, s, T, realizations=K, seed=5) for s in sigmas]
    for c in curves:
        assert np.all(c.F_raw >= -3 * c.stderr) and np.all(c.F_raw <= 1 + 3 * c.stderr)
    for a, b in zip(curves, curves[1:]):
        assert np.all(b.F <= a.F + 3 * np.hypot(a.stderr, b.stderr))
    strong = fidelity_strong(ops512, T)
    weak = fidelity_weak(0.004, reference_run(ops512, T).mean_m2)
    for c in curves:
        assert np.all(c.F >= strong - 3 * c.stderr)
    assert np.all(curves[0].F <= weak + 3 * curves[0].stderr + 1e-3)


def test_scaling_report_breakdown(ops512):
    T = 8
    sched = sigma_critical(ops512, T)
    curves = [fidelity_mc(ops512, s, T, realizations=60, seed=6) for s in (0.004, 0.032)]
    rep = scaling_fit(curves, sched)
    assert rep.rms < 0.1
    assert all(e.valid.all() for e in rep.entries)
    assert rep.breakdown_sigma(threshold=1.0) is None


def test_reversibility_noise_free(ops256):
    c = reversibility_mc(ops256, 0.0, 4, realizations=3)
    assert np.allclose(c.F, 1.0, atol=1e-13)
    assert np.allclose(c.purity_exact, 1.0, atol=1e-10)


def test_reversibility_matches_purity(ops256):
    c = reversibility_mc(ops256, 0.1, 5, realizations=150, seed=8)
    assert np.all(np.abs(c.F - c.purity_exact) < 3 * c.stderr + 1e-12)


def test_strong_purity_is_markov_collision_probability(ops256):
    from kicked_oscillator import markov_trajectory
    P, approx = purity_curve(ops256, math.inf, 5)
    wd = markov_trajectory(np.eye(256)[0], markov_matrix(ops256), 5)
    assert np.allclose(P, (wd**2).sum(axis=1), atol=1e-12)
    assert np.allclose(approx, 1 / (2 * (wd @ np.arange(256)) + 1), atol=1e-12)
    # reversibility and sensitivity agree in the strong-noise limit, approximately
    assert np.allclose(P[1:], fidelity_strong(ops256, 5)[1:], rtol=0.1)
