"""Key rates and finite-size analysis for relay-based CV QKD.

Asymptotic and finite-size secret-key rates for continuous-variable
measurement-device-independent QKD under two-mode Gaussian attacks, plus a
Monte Carlo validation of the channel-parameter estimators.
"""

from .channel import (
    ChannelParams,
    db_to_transmissivity,
    eve_cm,
    NoiseVars,
    noise_from_attack,
    optimal_two_mode_attack,
)
from .errors import (
    ConfigurationError,
    CVMDIError,
    DatasetError,
    DomainError,
    NumericalDegeneracyError,
    PhysicalityError,
)
from .estimation import (
    estimate_channel,
    estimate_covariances,
    estimate_excess_noise,
    estimate_transmissivities,
    EstimationReport,
    excess_noise_variance,
    QuadratureDataset,
    report_from_parameters,
    transmissivities_per_quadrature,
    transmissivity_variance,
    worst_case,
)
from .finite_size import (
    finite_size_key_rate,
    finite_size_penalty,
    FiniteSizeParams,
    projected_key_rate,
)
from .gaussian import (
    entropy_term,
    is_physical,
    symplectic_eigenvalues,
    symplectic_form,
    tmsv_cm,
    von_neumann_entropy,
)
from .keyrate import (
    asymptotic_key_rate,
    ConditionalState,
    conditional_cms,
    holevo_bound,
    key_rate_breakdown,
    mutual_information,
    ProtocolParams,
    RateBreakdown,
)
from .optimizer import (
    default_r_grid,
    default_v_m_grid,
    optimize_asymptotic,
    optimize_key_rate,
    OptimizationResult,
    OptimizationSpec,
)
from .simulator import run_trials, sample_dataset, SimulationSpec, TrialStatistics

__version__ = "0.1.0"

__all__ = [
    "asymptotic_key_rate",
    "ChannelParams",
    "conditional_cms",
    "ConditionalState",
    "ConfigurationError",
    "CVMDIError",
    "DatasetError",
    "db_to_transmissivity",
    "default_r_grid",
    "default_v_m_grid",
    "DomainError",
    "entropy_term",
    "estimate_channel",
    "estimate_covariances",
    "estimate_excess_noise",
    "estimate_transmissivities",
    "EstimationReport",
    "eve_cm",
    "excess_noise_variance",
    "finite_size_key_rate",
    "finite_size_penalty",
    "FiniteSizeParams",
    "holevo_bound",
    "is_physical",
    "key_rate_breakdown",
    "mutual_information",
    "NoiseVars",
    "noise_from_attack",
    "NumericalDegeneracyError",
    "optimal_two_mode_attack",
    "OptimizationResult",
    "OptimizationSpec",
    "optimize_asymptotic",
    "optimize_key_rate",
    "PhysicalityError",
    "projected_key_rate",
    "ProtocolParams",
    "QuadratureDataset",
    "RateBreakdown",
    "report_from_parameters",
    "run_trials",
    "sample_dataset",
    "SimulationSpec",
    "symplectic_eigenvalues",
    "symplectic_form",
    "tmsv_cm",
    "transmissivities_per_quadrature",
    "transmissivity_variance",
    "TrialStatistics",
    "von_neumann_entropy",
    "worst_case",
]
