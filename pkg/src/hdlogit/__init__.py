"""High-dimensional logistic regression with exact asymptotic corrections.

When p/n is a nonvanishing fraction, the logistic MLE is biased, its
spread exceeds the inverse Fisher information, and twice the
log-likelihood ratio is a rescaled (not plain) chi-square.  This
package solves the asymptotic fixed point that quantifies all three
effects, estimates the signal strength from data by probing the
separation frontier, and exposes corrected estimates, standard errors,
and p-values, both as a function library and as an sklearn-style
estimator.
"""

from .amp import AmpState, AmpTrajectory, amp_run, psi, simulation_init
from .boundary import BoundaryPoint, g_mle, g_mle_inverse, positive_part_mse
from .errors import (
    DataFormatError,
    FrontierNotReachedError,
    HdlogitError,
    NonConvergenceError,
    OutsideExistenceRegionError,
    SeparatedDataError,
)
from .estimator import AdjustedLogisticRegression
from .glm import (
    Dataset,
    FitResult,
    classical_se_plugin,
    classical_se_theoretical,
    fit_mle,
    gradient,
    hessian,
    llr_statistic,
    load_binary,
    load_csv,
    neg_log_likelihood,
    save_binary,
    save_csv,
)
from .inference import (
    AdjustedInference,
    adjust,
    chi2_survival,
    corrected_se,
    debias,
    debiased_predict,
    lrt_pvalue,
)
from .probe_frontier import ProbeFrontierResult, estimate_gamma, subsample
from .quadrature import BivariateGaussianSpec, QuadratureRule, expect_bivariate, gh_rule
from .scalars import ProxResult, prox_rho, prox_rho_deriv, prox_rho_vec, rho, rho_double_prime, rho_prime
from .separation import check_separation, separation_lp_margin
from .simulate import (
    ExperimentConfig,
    ExperimentResult,
    gen_beta,
    gen_gaussian_design,
    gen_response,
    gen_snp_design,
    null_indices,
    run_experiment,
)
from .state_evolution import SolutionTriple, solve_lambda, solve_reduced, solve_system, variance_map_step

__version__ = "0.1.0"

__all__ = [
    "AdjustedInference",
    "AdjustedLogisticRegression",
    "AmpState",
    "AmpTrajectory",
    "BivariateGaussianSpec",
    "BoundaryPoint",
    "Dataset",
    "DataFormatError",
    "ExperimentConfig",
    "ExperimentResult",
    "FitResult",
    "FrontierNotReachedError",
    "HdlogitError",
    "NonConvergenceError",
    "OutsideExistenceRegionError",
    "ProbeFrontierResult",
    "ProxResult",
    "QuadratureRule",
    "SeparatedDataError",
    "SolutionTriple",
    "adjust",
    "amp_run",
    "check_separation",
    "chi2_survival",
    "classical_se_plugin",
    "classical_se_theoretical",
    "corrected_se",
    "debias",
    "debiased_predict",
    "estimate_gamma",
    "expect_bivariate",
    "fit_mle",
    "g_mle",
    "g_mle_inverse",
    "gen_beta",
    "gen_gaussian_design",
    "gen_response",
    "gen_snp_design",
    "gh_rule",
    "gradient",
    "hessian",
    "llr_statistic",
    "load_binary",
    "load_csv",
    "lrt_pvalue",
    "neg_log_likelihood",
    "null_indices",
    "positive_part_mse",
    "prox_rho",
    "prox_rho_deriv",
    "prox_rho_vec",
    "psi",
    "rho",
    "rho_double_prime",
    "rho_prime",
    "run_experiment",
    "save_binary",
    "save_csv",
    "separation_lp_margin",
    "simulation_init",
    "solve_lambda",
    "solve_reduced",
    "solve_system",
    "subsample",
    "variance_map_step",
]
