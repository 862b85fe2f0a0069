"""Semi-supervised model-based clustering with Gaussian mixtures.

The main entry points are :func:`ssclust.select.model_search`, which fits
and ranks mixtures by the unlabeled-sample BIC, and :func:`ssclust.ssem.fit`
for a single semi-supervised EM run.
"""

from .errors import (
    DataFormatError,
    DegenerateTestError,
    EmptyComponentError,
    InsufficientDataError,
    NoViableModelError,
    SingularModelError,
    SSClustError,
    UndefinedPenaltyError,
    UnderflowError,
)
from .gaussian import CovModel, GaussianComponent, log_density, mstep_covariances
from .init import ss_kmeanspp
from .metrics import answering_time, ari, hellinger, line_difference_test
from .select import (
    ModelScore,
    SearchResult,
    bic,
    bic_prime,
    bic_star,
    count_params,
    model_search,
)
from .ssem import Dataset, FitResult, GmmParams, e_step, fit, m_step, map_labels

__version__ = "0.1.0"

__all__ = [
    "CovModel",
    "DataFormatError",
    "Dataset",
    "DegenerateTestError",
    "EmptyComponentError",
    "FitResult",
    "GaussianComponent",
    "GmmParams",
    "InsufficientDataError",
    "ModelScore",
    "NoViableModelError",
    "SSClustError",
    "SearchResult",
    "SingularModelError",
    "UndefinedPenaltyError",
    "UnderflowError",
    "answering_time",
    "ari",
    "bic",
    "bic_prime",
    "bic_star",
    "count_params",
    "e_step",
    "fit",
    "hellinger",
    "line_difference_test",
    "log_density",
    "m_step",
    "map_labels",
    "model_search",
    "mstep_covariances",
    "ss_kmeanspp",
]
