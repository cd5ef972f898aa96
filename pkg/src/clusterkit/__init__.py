"""clusterkit: exact enumeration, saddle-point asymptotics and Boltzmann
sampling for expansive weighted (multi)sets of clusters."""

from .asymptotics import (
    AdmissibilityReport,
    AsymptoticEstimate,
    GumbelScaling,
    RegimePrediction,
    SmallestLimit,
    bivariate_set_estimate,
    coeff_estimate_multiset,
    coeff_estimate_set,
    count_estimate,
    euler_maclaurin_sum_asympt,
    gumbel_scaling,
    h_admissibility_diagnostics,
    hayman_coeff_general,
    karamata_prediction,
    llt_pmf_prediction,
    moment_estimate,
    power_law_scaling,
    smallest_cluster_limit,
)
from .errors import (
    ClusterkitError,
    ContractViolationError,
    DivergenceError,
    InvalidParameterError,
    OutOfRangeError,
    RejectionBudgetError,
    ScopeError,
    SizeLimitError,
    UnreachableTargetError,
    UnsupportedOrderError,
)
from .harness import (
    ExperimentReport,
    MetricRow,
    chi2_structure_gof,
    chi2_two_sample,
    verify_bivariate,
    verify_coefficients,
    verify_gumbel,
    verify_llt,
    verify_moments,
    verify_smallest,
)
from .saddle import (
    SaddlePoint,
    hayman_functionals,
    size_power_sum,
    size_power_sum_multi,
    solve_multiset_saddle,
    solve_ratio_saddle,
    solve_set_saddle,
)
from .sampling import (
    SamplerConfig,
    boltzmann_sample_multiset,
    boltzmann_sample_set,
    boltzmann_sample_structures,
    dp_sample_structures,
    exact_dp_sampler,
    predicted_acceptance,
    sample,
    stream,
    structure_statistics,
)
from .series import (
    ClusterStructure,
    LogSeries,
    ProbabilityTable,
    bivariate_multiset_coeffs,
    bivariate_multiset_table,
    bivariate_set_coeffs,
    bivariate_set_table,
    brute_force_structure_sum,
    cluster_series,
    coeff,
    euler_transform,
    exact_distribution,
    exact_structure_law,
    full_series,
    largest_cdf,
    repetition_sum_series,
    restricted_series,
    series_exp,
    series_product,
    smallest_survival,
)
from .weights import (
    HSpec,
    OscillationReport,
    WeightSequence,
    make_explicit_weights,
    make_power_weights,
    verify_oscillating_bounds,
    weight_at,
)

__version__ = "0.1.0"
