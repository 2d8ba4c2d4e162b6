"""Numerical laboratory for occupation measures of mollified small increments.

Self-similar processes (Brownian, symmetric alpha-stable, fractional
Brownian) are filtered through bounded-variation kernels at small scales;
the package builds the resulting occupation, space-time, process-level and
discrete empirical measures, the closed-form second-order theory, and the
associated large-deviation rate functions.
"""

from .errors import (
    ConfigError,
    CoverageError,
    DegenerateEstimatorError,
    NormalizationError,
    ParameterError,
    QuadratureError,
    ResolutionError,
    SeedMismatchError,
    SynthesisError,
    WscheborError,
)
from .paths import (
    GridPath,
    ProcessDescriptor,
    fbm_covariance,
    simulate,
    simulate_brownian,
    simulate_fbm,
    simulate_stable,
)
from .mollifiers import (
    KernelClassReport,
    SignedKernel,
    bessel_k0,
    classify,
    fourier,
    kernel_by_id,
    kernel_fbm_ou,
    kernel_fbm_ou_value,
    kernel_ou_bessel,
    kernel_ou_bessel_value,
    kernel_ou_exponential,
    kernel_psi1,
    kernel_psi2,
    kernel_triangle,
)
from .increments import (
    IncrementProcess,
    dot_increment,
    dpsi_window,
    normalized_increment,
    smooth,
    unit_scale_process,
)
from .measures import (
    EmpiricalMeasure,
    MeasurePath,
    SpaceTimeHistogram,
    dbl_distance,
    f_map,
    fixed_lag_second_order,
    ks_critical_value,
    ks_distance,
    ks_two_sample,
    occupation_measure,
    second_difference_sd,
    space_time_measure,
    wasserstein1,
)
from .spectral import (
    SpectralDensity,
    covariance_from_density,
    periodogram,
    sigma_sq,
    spectral_density,
    verify_ou_match,
)
from .ldp import (
    CGFEstimate,
    RateCurve,
    default_dictionary,
    dv_rate,
    estimate_cgf,
    exponential_tilt,
    legendre_dual_on_grid,
    log_moment_generating,
    moment_rate,
    space_time_rate,
)
from .levelproc import (
    PathSampleCloud,
    char_functional,
    char_functional_limit,
    extract_cloud,
    l2_ball_frequency,
    wiener_ball_probability,
)
from .discrete import (
    LagSchedule,
    coupled_pair,
    coupling_distance,
    custom_schedule,
    discrete_measure,
    over_log_schedule,
    power_schedule,
    validate_ldp_schedule,
    validate_lln_schedule,
)
from .cli import ExperimentConfig, list_experiments, run, seed_split

__version__ = "0.1.0"
