"""Simpson's paradox detection and its resolution under a common cause."""
from .common_cause import (
    BKernel,
    CauseModel,
    CauseView,
    Target,
    association_sign,
    compose,
    invert,
    search_ternary,
    theorem1_grid,
    theorem1_scan,
)
from .contingency import (
    JointTable,
    Ordering,
    ParadoxReport,
    ParadoxStatus,
    alternative_criteria,
    conditional,
    detect_simpson,
    from_counts,
    necessary_conditions,
)
from .datasets import LabeledTable, coarse_grain, load, load_fixture, reconstruct_joint, save
from .frequency import DirichletSpec, FrequencyEstimate, estimate_frequency, sample, sample_paradox_tables
from .gaussian import (
    CovarianceTriple,
    GaussianCauseModel,
    conditional_cov_a_given_b,
    detect_continuous_simpson,
    marginal_covariance,
    matrix_identity_suite,
    minimal_case,
    two_component_counterexample,
)

__version__ = "0.1.0"
