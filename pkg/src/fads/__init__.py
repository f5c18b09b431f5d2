"""Maximum-likelihood exploratory factor analysis for data on the unit sphere.

Fits the projected-normal factor model by two alternating
expectation-conditional-maximization algorithms (a duet-latent-variable
form and a faster profile form), selects the number of factors by eBIC,
and provides factor scores, standard errors, loading rotations, and an
exact Monte Carlo goodness-of-fit test against the Langevin
(von Mises-Fisher) model.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .data import (
    SphericalDataset,
    l2_normalize,
    sqrt_composition,
    tfidf_weight,
)
from .estep import EStepCache, ZMoments, estep_r, estep_z
from .exceptions import ConvergenceError, DomainError, NumericError
from .fitters import (
    FitConfig,
    FitReport,
    cm_mu,
    fads_d_fit,
    fads_p_fit,
    multistart,
    normal_form,
    random_init,
    squarem_accelerate,
)
from .gof import MCTestResult, mc_gof_test
from .inference import (
    CorrelationScaleParams,
    FactorScores,
    FrobeniusMetrics,
    StdErrors,
    factor_scores,
    relative_frobenius_metrics,
    standard_errors,
    to_correlation_scale,
)
from .krylov import PartialEigen, SymmetricAction, lanczos_topq, w_action, woodbury_solve
from .langevin import LangevinParams, langevin_fit, sample_langevin
from .pn import MomentTriple, PNParams, moment_triple, pn_logpdf, sample_pn
from .rotation import RotatedLoadings, rotate
from .selection import SelectionPath, ebic, ebic_gamma, fit_path
from .simulate import simulate_dataset, simulate_truth

__all__ = [
    "BACKEND",
    "ConvergenceError",
    "CorrelationScaleParams",
    "DomainError",
    "EStepCache",
    "FactorScores",
    "FitConfig",
    "FitReport",
    "FrobeniusMetrics",
    "LangevinParams",
    "MCTestResult",
    "MomentTriple",
    "NumericError",
    "PNParams",
    "PartialEigen",
    "RotatedLoadings",
    "SelectionPath",
    "SphericalDataset",
    "StdErrors",
    "SymmetricAction",
    "ZMoments",
    "cm_mu",
    "ebic",
    "ebic_gamma",
    "estep_r",
    "estep_z",
    "factor_scores",
    "fads_d_fit",
    "fads_p_fit",
    "fit_path",
    "l2_normalize",
    "langevin_fit",
    "lanczos_topq",
    "mc_gof_test",
    "moment_triple",
    "multistart",
    "normal_form",
    "pn_logpdf",
    "random_init",
    "relative_frobenius_metrics",
    "rotate",
    "sample_langevin",
    "sample_pn",
    "simulate_dataset",
    "simulate_truth",
    "sqrt_composition",
    "squarem_accelerate",
    "standard_errors",
    "tfidf_weight",
    "to_correlation_scale",
    "w_action",
    "woodbury_solve",
]
