"""Qubit-register simulation of N-path interferometers with which-path detectors.

The package splits into five layers.  ``statevec`` holds the generic pure and
mixed qubit-register simulator, ``circuit`` builds and runs the interferometer
circuits, ``quantifiers`` computes which-path information and the two
interference visibilities from detector overlaps, ``estimator`` reproduces the
finite-shot measurement protocols for the same quantities, and ``noise`` adds
the three-parameter imperfection model with its least-squares fit.  The
``runner`` module wraps everything in a command-line interface.
"""

from .statevec import (
    Controlled,
    DiagonalPhase,
    MixedState,
    MultiControlled,
    PureState,
    SimulationError,
    Single,
    apply_gate,
    init_mixed,
    init_pure,
    outcome_probabilities,
    partial_trace,
    sample_counts,
    to_mixed,
)
from .circuit import (
    IDEAL_NOISE,
    DetectorReadout,
    InterferometerSpec,
    NoiseParams,
    ParticleReadout,
    build_circuit,
    coupled_state,
    detector_unitary,
    run,
    ry,
    splitter_matrix,
    sweep_particle_distributions,
)
from .quantifiers import (
    CoherenceBounds,
    DualityReport,
    OverlapMatrix,
    distinguishability,
    duality_check,
    overlap_matrix,
    overlap_matrix_for,
    reduced_particle_state,
    visibility_coherence,
    visibility_purity,
)
from .estimator import (
    EstimateResult,
    FitError,
    FringeData,
    SineFit,
    binary_phase_grid,
    coherence_visibility_from_probability,
    distinguishability_from_probabilities,
    estimate_D,
    estimate_VC,
    estimate_VP,
    fit_sine,
    phase_average_oracle,
    purity_visibility_from_probabilities,
    record_fringes,
)
from .noise import (
    PARAM_BOUNDS,
    PARAM_NAMES,
    QUANTITIES,
    FitResult,
    Observation,
    apply_noise_model,
    fit_noise_params,
    model_curves,
)
from .runner import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    format_uncertainty,
    load_config,
    report,
    resolve_config,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # statevec
    "SimulationError",
    "Single",
    "Controlled",
    "MultiControlled",
    "DiagonalPhase",
    "PureState",
    "MixedState",
    "init_pure",
    "init_mixed",
    "to_mixed",
    "apply_gate",
    "partial_trace",
    "outcome_probabilities",
    "sample_counts",
    # circuit
    "NoiseParams",
    "IDEAL_NOISE",
    "splitter_matrix",
    "ry",
    "InterferometerSpec",
    "ParticleReadout",
    "DetectorReadout",
    "detector_unitary",
    "build_circuit",
    "run",
    "coupled_state",
    "sweep_particle_distributions",
    # quantifiers
    "OverlapMatrix",
    "CoherenceBounds",
    "DualityReport",
    "overlap_matrix",
    "overlap_matrix_for",
    "distinguishability",
    "reduced_particle_state",
    "visibility_purity",
    "visibility_coherence",
    "duality_check",
    # estimator
    "EstimateResult",
    "FringeData",
    "SineFit",
    "FitError",
    "estimate_D",
    "estimate_VC",
    "estimate_VP",
    "phase_average_oracle",
    "record_fringes",
    "fit_sine",
    "binary_phase_grid",
    "distinguishability_from_probabilities",
    "coherence_visibility_from_probability",
    "purity_visibility_from_probabilities",
    # noise
    "QUANTITIES",
    "PARAM_NAMES",
    "PARAM_BOUNDS",
    "Observation",
    "FitResult",
    "apply_noise_model",
    "model_curves",
    "fit_noise_params",
    # runner
    "EXPERIMENTS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "resolve_config",
    "run_experiment",
    "report",
    "format_uncertainty",
]
