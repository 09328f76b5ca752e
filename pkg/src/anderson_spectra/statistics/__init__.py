"""Empirical spectral statistics."""

from .counts import (
    CountRecord,
    IndependenceTest,
    PoissonCountTest,
    independence_test,
    interval_counts,
    large_deviation_check,
    minami_estimator,
    poisson_bins,
    poisson_count_test,
    wegner_estimator,
)
from .spacings import (
    PointSample,
    count_in_boxes,
    count_ratio,
    counting,
    dcs,
    dcs_limit,
    dls,
    dls_macroscopic,
    joint_process,
    limit_g,
    local_process,
    nearest_center_distances,
    poisson_nn_survival,
    unfold,
)
from .stepfunction import StepFunction, sup_distance

__all__ = [
    "CountRecord",
    "IndependenceTest",
    "PoissonCountTest",
    "PointSample",
    "StepFunction",
    "count_in_boxes",
    "count_ratio",
    "counting",
    "dcs",
    "dcs_limit",
    "dls",
    "dls_macroscopic",
    "independence_test",
    "interval_counts",
    "joint_process",
    "large_deviation_check",
    "limit_g",
    "local_process",
    "minami_estimator",
    "nearest_center_distances",
    "poisson_bins",
    "poisson_count_test",
    "poisson_nn_survival",
    "sup_distance",
    "unfold",
    "wegner_estimator",
]
