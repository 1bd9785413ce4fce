"""Numerical laboratory for the multiscale linear transport equation.

Two finite-difference solvers (an even/odd-parity diffusive relaxation
scheme that stays uniformly stable as the scaling parameter epsilon
vanishes, and a standard explicit upwind scheme), their all-at-once
space-time linear systems, and the spectral/cost analysis machinery used
to compare classical iteration counts with sparse-access quantum
linear-solver query estimates.
"""

__version__ = "0.1.0"

from .quadrature import QuadratureRule, gauss_rule
from .model import (
    AP,
    EXPLICIT,
    CflViolationError,
    DivergenceError,
    GridConfig,
    KineticField,
    ParityField,
    UnsupportedConfigurationError,
    ValidationReport,
    cfl_limit,
    density,
    initial_kinetic_field,
    initial_parity_field,
    load_config,
    parity_transform,
    resolve_config,
    validate_config,
)
from .ap_scheme import (
    ApStepMatrices,
    ap_evolve,
    ap_step_matrices,
    boundary_forcing,
    relaxation_step,
    transport_step,
)
from .explicit_scheme import (
    ExplicitStepMatrix,
    boundary_vector,
    explicit_evolve,
    explicit_matrix,
    explicit_step,
)
from .assembly import (
    BlockSystem,
    FourierMatrix,
    FourierSymbols,
    assemble_ap_system,
    assemble_explicit_system,
    assemble_fourier_matrix,
    export_matrix_market,
    fourier_symbols,
    sparsity,
)
from .spectral import (
    PerturbationReport,
    RegressionResult,
    SpectrumReport,
    alpha_bound,
    perturbation_check,
    scaling_regression,
    singular_extremes,
)
from .complexity import (
    CSV_HEADER,
    ComplexityRow,
    classical_cost,
    qlsa_queries,
    rows_to_csv,
    sweep_epsilon,
)
