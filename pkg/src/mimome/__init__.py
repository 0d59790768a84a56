"""Secrecy capacities of fast Rayleigh-fading multi-antenna wiretap channels.

Monte-Carlo estimation of ergodic secrecy rates under statistical
transmitter CSI, closed-form optimal transmit covariances (uniform under a
total power budget, diagonal under per-antenna budgets with single-antenna
receivers), a barrier/Newton solver for the general per-antenna problem,
and independent verification oracles (grid search, scalar quadrature,
finite differences, property suite).
"""

from .channel import (
    ChannelSpec,
    SampleSet,
    load_samples,
    sample,
    same_marginal_h,
    save_samples,
    wishart_eigen_samples,
)
from .errors import (
    ConstraintError,
    ConvergenceError,
    DomainError,
    KKTError,
    LineSearchError,
)
from .oracle import GridSpec, grid_search, property_suite, scalar_quadrature_rate
from .rates import (
    PerAntennaPower,
    RateEstimate,
    TotalPower,
    capacity_misose_per_antenna,
    capacity_total,
    capacity_wishart_form,
    misose_scalar_objective,
    per_sample_transformed,
    rate_difference,
    secrecy_rate,
    snr_slope,
    transformed_rate,
    zero_capacity,
)
from .solver import NewtonState, SolverConfig, TransformedSampleObjective, optimize

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "SampleSet",
    "sample",
    "same_marginal_h",
    "wishart_eigen_samples",
    "save_samples",
    "load_samples",
    "RateEstimate",
    "TotalPower",
    "PerAntennaPower",
    "secrecy_rate",
    "rate_difference",
    "transformed_rate",
    "per_sample_transformed",
    "capacity_total",
    "capacity_misose_per_antenna",
    "capacity_wishart_form",
    "misose_scalar_objective",
    "zero_capacity",
    "snr_slope",
    "SolverConfig",
    "NewtonState",
    "TransformedSampleObjective",
    "optimize",
    "GridSpec",
    "grid_search",
    "scalar_quadrature_rate",
    "property_suite",
    "ConstraintError",
    "DomainError",
    "KKTError",
    "LineSearchError",
    "ConvergenceError",
]
