"""Kicked quartic oscillator under persistent dephasing noise."""

from .dynamics import (
    STRONG_NOISE_SIGMA,
    FloquetOperators,
    NoiseHistory,
    PureState,
    averaged_density_step,
    evolve_averaged_density,
    evolve_block,
    floquet_step,
    markov_matrix,
    markov_propagate,
    markov_trajectory,
    noisy_trajectory,
    sample_noise_history,
)
from .ensemble import (
    EnsembleResult,
    EnsembleSpec,
    mc_density_matrix,
    reference_run,
    run_ensemble,
    self_averaging_report,
)
from .errors import (
    ConvergenceError,
    DegenerateInput,
    FitError,
    InsufficientRealizations,
    TruncationError,
)
from .fidelity import (
    CriticalSchedule,
    FidelityCurve,
    decoherence_time,
    fidelity_from_ensemble,
    fidelity_mc,
    fidelity_strong,
    fidelity_weak,
    reversibility_mc,
    scaling_fit,
    sigma_critical,
    strong_path_sum,
)
from .fock import (
    OscillatorParams,
    build_dephasing,
    build_displacement,
    build_number_phase,
    hermitian_eigenvalues,
)
from .observables import (
    Distribution,
    averaged_harmonics_distribution,
    coarse_grained_information_entropy,
    fit_geometric_slope,
    geometric_profile,
    harmonics_distribution,
    information_entropy,
    number_distribution,
    purity,
    von_neumann_entropy,
)
from .seeding import derive_seed

__version__ = "0.1.0"
