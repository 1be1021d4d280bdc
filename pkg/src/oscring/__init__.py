"""Purity of one oscillator in a ring of coupled oscillators, as a probe of
non-Markovian reduced dynamics."""

__version__ = "0.1.0"

from .errors import OscRingError
from .model import (
    DftBasis,
    ModelParams,
    ModeSpectrum,
    PropagatorDiagonals,
    dft_matrix,
    ground_state_matrix,
    normal_mode_frequencies,
    propagator_diagonals,
)
from .gaussian import (
    Evolver,
    GaussianState,
    evolve,
    from_mode_basis,
    to_mode_basis,
    validate_state,
)
from .reduction import ReducedState, covariance_purity, purity, reduce
from .experiment import (
    BathProfile,
    ExperimentConfig,
    PurityTrace,
    WidthTable,
    bath_profile,
    bezier_smooth,
    build_initial_omega,
    dispersion_width,
    purity_trace,
    run_experiment,
    solve_uniform_coupling,
)
