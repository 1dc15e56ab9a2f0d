"""PIELM solver kit for tunnelling-induced pile deflection."""

from .elm import ElmBasis, ElmConfig, feature_derivatives, features, init_basis
from .experiments import (
    SERIES,
    DataSeries,
    StudyConfig,
    StudyReport,
    UndefinedReferenceError,
    relative_l2,
    run_architecture_sweep,
    run_data_study,
    run_repeatability,
    run_study,
    run_validation,
    table1_problem,
)
from .fdm import FdmConfig, FdmSolution, assemble_fdm, sample_pseudo_observations, solve_fdm
from .fileio import ConfigError, RunSetup, load_setup, load_study, read_data_csv, read_profile_csv, write_profile_csv
from .physics import (
    BoundaryCondition,
    DomainError,
    PileProperties,
    PileSoilProblem,
    SoilProperties,
    TunnelGeometry,
    external_load,
    shear_layer_modulus,
    soil_displacement,
    soil_displacement_curvature,
    subgrade_modulus,
)
from .solver import (
    LossSystem,
    MonitoredDataset,
    ResponseProfile,
    SolverConfig,
    TrainedSolution,
    assemble_system,
    constrained_derivative,
    constrained_value,
    evaluate,
    solve,
    train,
)

__version__ = "0.1.0"
