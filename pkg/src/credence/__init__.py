"""Bayesian logistic prediction models with deployable posterior
uncertainty: shrinkage priors under a Laplace/normal approximation,
posterior-mean predictions, credible intervals, net-benefit decisions,
and a synthetic-evaluation harness."""

from .data import Dataset, Standardization, TermSpec, Transform, load_csv, standardize
from .decision import Threshold, net_benefit, snb, treat_decision
from .glm import FitOptions, FitResult, covariance, fit_firth, fit_logistic
from .metrics import (
    MetricReport,
    c_statistic,
    calibration_slope,
    cri_coverage,
    mse_vs_truth,
    oe_ratio,
    posterior_cdf_calibration,
)
from .modelio import from_document, load_model, save_model, to_document
from .predict import (
    LinearPredictorDist,
    PredictionSummary,
    credible_interval,
    linear_predictor_dist,
    posterior_density,
    posterior_mean_mackay,
    posterior_mean_quadrature,
    predict,
)
from .priors import (
    PackagedModel,
    PriorSpec,
    fit_bayes_ridge,
    fit_flat,
    fit_jeffreys,
    fit_logf,
    fit_model,
)
from .projection import ProjectedModel, kl_bernoulli, pseudo_true_fit, self_project
from .simulate import (
    Population,
    ScenarioConfig,
    gen_population,
    run_scenario,
    solve_intercept,
    split_sample_harness,
)

__version__ = "0.1.0"
