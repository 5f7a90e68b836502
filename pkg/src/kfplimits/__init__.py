"""Degenerate drift-diffusion semigroups, heat-type Besov seminorms,
fractional powers, and small-order limit experiments."""

from .operators import (
    OperatorSpec,
    DriftRegime,
    StabilityRegime,
    SpectralClassification,
    HypoellipticityReport,
    build_operator,
    check_hypoellipticity,
    classify_spectrum,
    catalog,
    CATALOG_NAMES,
)
from .covariance import (
    CovarianceState,
    covariance,
    volume,
    k_infinity,
    gaussian_shift_and_factor,
    matrix_exp,
)
from .functions import (
    TestFunction,
    gaussian_bump,
    indicator_interval,
    indicator_box,
    constant,
)
from .semigroup import (
    SemigroupQuadrature,
    MCEstimate,
    apply_semigroup,
    apply_semigroup_centered_p,
    kernel_density,
    adjoint_mass,
    sde_sample,
    invariant_mean,
)
from .seminorms import (
    SeminormConfig,
    SeminormEstimate,
    besov_seminorm,
    besov_split,
    far_mass_measured,
    far_tail_closed_form,
    gagliardo_seminorm,
    heat_equivalence_constant,
    s_perimeter,
)
from .fractional import (
    FractionalConfig,
    FractionalField,
    NormEstimate,
    PointwiseSweep,
    ResolventSeries,
    balakrishnan_condition,
    balakrishnan_weight_check,
    fractional_field,
    fractional_l1_norm,
    fractional_power,
    lp_limit_error,
    pointwise_limit_sweep,
    resolvent_apply,
)
from .experiments import (
    ExperimentConfig,
    LimitReport,
    ConfigError,
    parse_config,
    run_experiment,
    emit_report,
)

__version__ = "0.1.0"
