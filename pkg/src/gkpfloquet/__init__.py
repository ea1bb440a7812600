"""Floquet engineering of grid (GKP) states in a driven superconducting oscillator."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DecoderError,
    GkpFloquetError,
    IntegratorError,
    NumericsError,
    SqueezingUndefinedError,
    TruncationError,
)
from .fock import (
    DensityMatrix,
    FockSpace,
    StateVector,
    displacement,
    hermite_functions,
    momentum_wavefunction,
    position_wavefunction,
    rotation,
)
from .hamiltonians import (
    CircuitParams,
    DriveFunction,
    ModelParams,
    circuit_map,
    drive_value,
    driven_hamiltonian,
    gkp_hamiltonian,
    truncated_gkp_hamiltonian,
)
from .floquet import (
    FloquetSolution,
    GkpPair,
    IntegratorConfig,
    effective_hamiltonian,
    floquet_states,
    harmonic_propagator,
    kicked_propagator,
    select_gkp_states,
)
from .metrics import (
    GkpDecoder,
    LogicalState,
    SqueezingReport,
    decode,
    decoder_for,
    logical_fidelity,
    marginals,
    squeezing,
    stabilizer_expectation,
    wigner,
)
from .evolve import JumpRecord, SplitStepEngine, TrajectoryState
from .prep import (
    DEFAULT_CENTER,
    DEFAULT_SLOPE,
    OMEGA_INITIAL,
    PreparationRun,
    RampSchedule,
    SuperpositionRun,
    TimelineRecord,
    align_to_drive,
    chirped_coefficients,
    chirped_drive_value,
    drive_phase,
    phase_integral,
    prepare,
    prepare_superposition,
    ramp_frequency,
    write_timeline_csv,
)
from .noise import (
    FluxNoiseConfig,
    FluxNoiseTrace,
    NoiseConfig,
    apply_flux_noise,
    ensemble_prepare,
    flux_noise_trace,
    trajectory_evolve,
    write_trajectory_csv,
)
from .config import (
    ExperimentConfig,
    SweepSpec,
    WignerSpec,
    config_from_dict,
    config_hash,
    load_config,
)
from .experiments import execute, run_oracle
from . import reference_states

__all__ = [
    "__version__",
    "ConfigError",
    "DecoderError",
    "GkpFloquetError",
    "IntegratorError",
    "NumericsError",
    "SqueezingUndefinedError",
    "TruncationError",
    "DensityMatrix",
    "FockSpace",
    "StateVector",
    "displacement",
    "hermite_functions",
    "momentum_wavefunction",
    "position_wavefunction",
    "rotation",
    "CircuitParams",
    "DriveFunction",
    "ModelParams",
    "circuit_map",
    "drive_value",
    "driven_hamiltonian",
    "gkp_hamiltonian",
    "truncated_gkp_hamiltonian",
    "FloquetSolution",
    "GkpPair",
    "IntegratorConfig",
    "effective_hamiltonian",
    "floquet_states",
    "harmonic_propagator",
    "kicked_propagator",
    "select_gkp_states",
    "GkpDecoder",
    "LogicalState",
    "SqueezingReport",
    "decode",
    "decoder_for",
    "logical_fidelity",
    "marginals",
    "squeezing",
    "stabilizer_expectation",
    "wigner",
    "JumpRecord",
    "SplitStepEngine",
    "TrajectoryState",
    "DEFAULT_CENTER",
    "DEFAULT_SLOPE",
    "OMEGA_INITIAL",
    "PreparationRun",
    "RampSchedule",
    "SuperpositionRun",
    "TimelineRecord",
    "align_to_drive",
    "chirped_coefficients",
    "chirped_drive_value",
    "drive_phase",
    "phase_integral",
    "prepare",
    "prepare_superposition",
    "ramp_frequency",
    "write_timeline_csv",
    "FluxNoiseConfig",
    "FluxNoiseTrace",
    "NoiseConfig",
    "apply_flux_noise",
    "ensemble_prepare",
    "flux_noise_trace",
    "trajectory_evolve",
    "write_trajectory_csv",
    "ExperimentConfig",
    "SweepSpec",
    "WignerSpec",
    "config_from_dict",
    "config_hash",
    "load_config",
    "execute",
    "run_oracle",
    "reference_states",
]
