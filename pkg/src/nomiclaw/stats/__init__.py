from nomiclaw.stats.agreement import KappaResult, UndefinedKappa, cohens_kappa, kappa_from_table, theme_persistence_or
from nomiclaw.stats.distributions import chi2_sf, gammaincc, norm_sf, norm_two_sided
from nomiclaw.stats.gee import GeeResult, SingularCovarianceError, gee_logit_exchangeable, win_gee
from nomiclaw.stats.glm import FitResult, design_matrix, glm_logit, win_glm
from nomiclaw.stats.multivariate import ClusterTree, PcaResult, cut, pca, ward_cluster
from nomiclaw.stats.significance import (
    TestResult,
    benjamini_hochberg,
    chi_square_gof,
    pairwise_win_tests,
    two_prop_z,
)

__all__ = [
    "ClusterTree",
    "FitResult",
    "GeeResult",
    "KappaResult",
    "PcaResult",
    "SingularCovarianceError",
    "TestResult",
    "UndefinedKappa",
    "benjamini_hochberg",
    "chi2_sf",
    "chi_square_gof",
    "cohens_kappa",
    "cut",
    "design_matrix",
    "gammaincc",
    "gee_logit_exchangeable",
    "glm_logit",
    "kappa_from_table",
    "norm_sf",
    "norm_two_sided",
    "pairwise_win_tests",
    "pca",
    "theme_persistence_or",
    "two_prop_z",
    "ward_cluster",
    "win_gee",
    "win_glm",
]
