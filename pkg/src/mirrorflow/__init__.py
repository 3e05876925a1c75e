"""Distributed mirror descent with integral feedback.

Simulates a network of agents jointly minimizing a sum of local convex
costs: each agent runs mirror descent in dual space while an integral
term accumulates neighborhood disagreement, driving the network to
exact consensus at the global optimum without diminishing step sizes.
Alongside the simulator: feedback-free baselines, a linearized
stability certificate with spectral and determinant checks, convergence
diagnostics, and a config-driven command line.
"""

from .exceptions import (
    AsymmetricInputError,
    ConfigError,
    DataFormatError,
    DimensionMismatchError,
    DisconnectedGraphError,
    DomainViolationError,
    DuplicateEdgeError,
    EdgeIndexError,
    EigensolverError,
    InsufficientDataError,
    InsufficientTailError,
    InvalidParameterError,
    MirrorflowError,
    NumericalOverflowError,
    RankDeficientError,
    SelfLoopError,
    SingularFactorError,
    SingularHessianError,
)
from .graph import (
    Graph,
    SpectralDecomposition,
    build_graph,
    complete_graph,
    cycle_graph,
    kron_identity,
    random_connected_graph,
    spectral_decomposition,
)
from .mirror import (
    DistanceGenerator,
    Domain,
    bregman,
    euclidean_dgf,
    negative_entropy_dgf,
)
from .objective import (
    CostSet,
    QuadraticCost,
    closed_form_optimum,
    load_table,
    make_cost_set,
    partition_dataset,
    synthetic_costset_with_optimum,
    synthetic_quadratic_costset,
    synthetic_regression_table,
)
from .dynamics import (
    Equilibrium,
    NetworkState,
    ReducedState,
    ReducedTrajectory,
    Trajectory,
    centralized_mirror_descent,
    consensus_component_residual,
    consensus_error,
    default_step_size,
    equilibrium_state,
    euler_step,
    initial_state,
    reconstruct_state,
    reconstruct_trajectory,
    reduce_state,
    simulate,
    simulate_no_feedback,
    simulate_reduced,
    vector_field,
)
from .stability import (
    DeterminantCheck,
    LinearizedSystem,
    RateComparison,
    StabilityReport,
    assemble_linearization,
    check_hl_positive_definite,
    check_stability,
    determinant_check,
    deviation_norms,
    eigenvalues,
    empirical_rate_vs_theory,
    pencil_residuals,
    symmetric_pencil,
)
from .metrics import (
    ConvergenceCurve,
    RateFit,
    curve_from_trajectory,
    export_csv,
    fit_exponential_rate,
    import_csv,
)
from .config import (
    BaselineSpec,
    DatasetProblem,
    DgfSpec,
    DynamicsSpec,
    ExperimentConfig,
    GraphSpec,
    OutputSpec,
    StabilitySpec,
    SyntheticProblem,
    config_from_dict,
    config_hash,
    construct_cost_set,
    construct_dgf,
    construct_graph,
    construct_x0,
    default_config_toml,
    load_config,
)
from .estimator import MirrorDescentRegressor

__version__ = "0.1.0"

__all__ = [
    "AsymmetricInputError",
    "BaselineSpec",
    "ConfigError",
    "ConvergenceCurve",
    "CostSet",
    "DataFormatError",
    "DatasetProblem",
    "DeterminantCheck",
    "DgfSpec",
    "DimensionMismatchError",
    "DisconnectedGraphError",
    "DistanceGenerator",
    "Domain",
    "DomainViolationError",
    "DuplicateEdgeError",
    "DynamicsSpec",
    "EdgeIndexError",
    "EigensolverError",
    "Equilibrium",
    "ExperimentConfig",
    "Graph",
    "GraphSpec",
    "InsufficientDataError",
    "InsufficientTailError",
    "InvalidParameterError",
    "LinearizedSystem",
    "MirrorDescentRegressor",
    "MirrorflowError",
    "NetworkState",
    "NumericalOverflowError",
    "OutputSpec",
    "QuadraticCost",
    "RankDeficientError",
    "RateComparison",
    "RateFit",
    "ReducedState",
    "ReducedTrajectory",
    "SelfLoopError",
    "SingularFactorError",
    "SingularHessianError",
    "SpectralDecomposition",
    "StabilityReport",
    "StabilitySpec",
    "SyntheticProblem",
    "Trajectory",
    "assemble_linearization",
    "bregman",
    "build_graph",
    "centralized_mirror_descent",
    "check_hl_positive_definite",
    "check_stability",
    "closed_form_optimum",
    "complete_graph",
    "config_from_dict",
    "config_hash",
    "consensus_component_residual",
    "consensus_error",
    "construct_cost_set",
    "construct_dgf",
    "construct_graph",
    "construct_x0",
    "curve_from_trajectory",
    "cycle_graph",
    "default_config_toml",
    "default_step_size",
    "determinant_check",
    "deviation_norms",
    "eigenvalues",
    "empirical_rate_vs_theory",
    "equilibrium_state",
    "euclidean_dgf",
    "euler_step",
    "export_csv",
    "fit_exponential_rate",
    "import_csv",
    "initial_state",
    "kron_identity",
    "load_config",
    "load_table",
    "make_cost_set",
    "negative_entropy_dgf",
    "partition_dataset",
    "pencil_residuals",
    "random_connected_graph",
    "reconstruct_state",
    "reconstruct_trajectory",
    "reduce_state",
    "simulate",
    "simulate_no_feedback",
    "simulate_reduced",
    "spectral_decomposition",
    "symmetric_pencil",
    "synthetic_costset_with_optimum",
    "synthetic_quadratic_costset",
    "synthetic_regression_table",
    "vector_field",
]
