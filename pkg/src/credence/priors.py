"""The four prior strategies, each packaging a deployable model.

A deployed model is a coefficient vector plus a covariance matrix under
the Laplace/normal approximation of the posterior:

* flat       -- the unpenalised MLE; covariance from the observed
                information (no shrinkage).
* jeffreys   -- Firth's bias-reduced fit; tuning-free global shrinkage
                applied to all coefficients including the intercept.
* log-F(m,m) -- user-chosen shrinkage on selected coefficients via two
                weight-m/2 pseudo-observations per penalised term; the
                intercept is spared by default.
* ridge      -- zero-mean Gaussian prior on standardized slopes with the
                precision chosen by maximizing a Laplace approximation of
                the marginal likelihood, and the uncertainty in log(lambda)
                propagated into the covariance as a rank-one correction.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import glm
from .data import Standardization, standardize
from .errors import (
    DomainError,
    NotPositiveDefinite,
    RangeError,
    Separation,
)
from .numerics import check_symmetric, cholesky

DEFAULT_QUADRATURE_ORDER = 30
LOG_LAMBDA_BOUNDS = (-8.0, 8.0)
GOLDEN_TOL = 1e-4
CURVATURE_STEP = 1e-3
FLAT_MARGINAL_VAR = 4.0  # fallback Var(log lambda) when L'' >= 0


@dataclass(frozen=True)
class PriorSpec:
    """Which prior to fit and its hyperparameters."""

    variant: str
    m: float = 2.0
    skip: tuple = ()
    penalize_intercept: bool = False
    log_lambda_bounds: tuple = LOG_LAMBDA_BOUNDS

    def __post_init__(self):
        if self.variant not in ("flat", "jeffreys", "logf", "ridge"):
            raise DomainError(f"unknown prior variant {self.variant!r}")
        if self.variant == "logf" and not self.m > 0:
            raise RangeError("log-F strength m must be positive")


@dataclass(frozen=True)
class PackagedModel:
    """Deployed artifact: coefficients, covariance, link, terms, prior."""

    terms: tuple
    beta: np.ndarray
    sigma: np.ndarray
    prior: dict
    link: str = "logit"
    quadrature_k: int = DEFAULT_QUADRATURE_ORDER
    diagnostics: dict = field(default_factory=dict)
    standardization: Optional[Standardization] = None
    schema_version: str = "1"

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        sigma = check_symmetric(self.sigma)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma", sigma)
        if self.link != "logit":
            raise DomainError("packaged models are logit-link only")
        if beta.shape[0] != len(self.terms) + 1:
            raise ValueError("beta length must equal number of terms + 1")
        if sigma.shape != (beta.shape[0], beta.shape[0]):
            raise ValueError("sigma shape must match beta")
        # covariance must be at least positive semi-definite (fitters
        # guarantee strict definiteness; zero matrices are legal for
        # degenerate/projected deployments)
        eigmin = float(np.linalg.eigvalsh(sigma)[0])
        if eigmin < -1e-8 * max(1.0, float(np.max(np.abs(sigma)))):
            raise NotPositiveDefinite("sigma has a negative eigenvalue")
        beta.setflags(write=False)
        sigma.setflags(write=False)

    @property
    def term_names(self):
        return [t.name for t in self.terms]

    def fingerprint(self):
        digest = hashlib.sha256()
        digest.update(self.beta.tobytes())
        digest.update(self.sigma.tobytes())
        for t in self.terms:
            digest.update(t.name.encode())
            digest.update(t.kind.encode())
        return digest.hexdigest()[:12]


def _diagnostics(fit, ds, options=None):
    # the paper states no convergence tolerances; the ones used are the
    # engine's own and travel with the model
    opts = options or glm.FitOptions()
    return {
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
        "deviance": float(fit.deviance),
        "n": int(ds.n),
        "score_tolerance": float(opts.tol),
        "max_iterations": int(opts.max_iter),
    }


def fit_flat(ds, options=None):
    """Unpenalised MLE; the posterior is proportional to the likelihood."""
    try:
        fit = glm.fit_logistic(ds, options)
    except Separation as exc:
        raise Separation(
            f"{exc} -- the flat-prior posterior is improper here; "
            "refit with --prior jeffreys or --prior logf"
        ) from exc
    return PackagedModel(
        terms=ds.terms,
        beta=fit.beta,
        sigma=glm.covariance(fit),
        prior={"variant": "flat"},
        diagnostics=_diagnostics(fit, ds, options),
    )


def fit_jeffreys(ds, options=None):
    """Jeffreys prior |I(beta)|^(1/2), fitted as Firth's bias-reduced
    logistic regression; finite under separation."""
    fit = glm.fit_firth(ds, options)
    return PackagedModel(
        terms=ds.terms,
        beta=fit.beta,
        sigma=glm.covariance(fit),
        prior={"variant": "jeffreys"},
        diagnostics=_diagnostics(fit, ds, options),
    )


def logf_augmented_arrays(ds, m, skip=(), penalize_intercept=False):
    """Design/response/weight arrays with two weight-m/2 pseudo-rows per
    penalised coefficient (x_j = 1, all other columns zero, y = 0 and 1)."""
    skip = set(skip)
    unknown = skip - {t.name for t in ds.terms}
    if unknown:
        raise DomainError(f"cannot skip unknown terms: {sorted(unknown)}")
    columns = []
    if penalize_intercept:
        columns.append(0)
    columns += [j + 1 for j, t in enumerate(ds.terms) if t.name not in skip]
    k = ds.X.shape[1]
    rows = np.zeros((2 * len(columns), k))
    y_aug = np.zeros(2 * len(columns))
    for r, j in enumerate(columns):
        rows[2 * r, j] = 1.0
        rows[2 * r + 1, j] = 1.0
        y_aug[2 * r + 1] = 1.0
    X = np.vstack([ds.X, rows])
    y = np.concatenate([ds.y, y_aug])
    w = np.concatenate([ds.w, np.full(2 * len(columns), m / 2.0)])
    data_rows = np.zeros(len(y), dtype=bool)
    data_rows[: ds.n] = True
    return X, y, w, data_rows, columns


def fit_logf(ds, m=2.0, skip=(), penalize_intercept=False, options=None):
    """Symmetric log-F(m, m) prior via data augmentation.

    Larger m shrinks harder; the intercept is left unpenalised unless
    requested. Augmentation rows never enter reported in-sample metrics.
    """
    if not m > 0:
        raise RangeError("log-F strength m must be positive")
    X, y, w, data_rows, columns = logf_augmented_arrays(
        ds, m, skip, penalize_intercept
    )
    fit = glm.irls(X, y, w, options=options, separation_rows=data_rows)
    diag = _diagnostics(fit, ds, options)
    eta = ds.X @ fit.beta
    diag["deviance"] = -2.0 * float(
        np.sum(ds.w * (ds.y * eta - np.logaddexp(0.0, eta)))
    )
    diag["augmentation_rows"] = int(2 * len(columns))
    return PackagedModel(
        terms=ds.terms,
        beta=fit.beta,
        sigma=glm.covariance(fit),
        prior={
            "variant": "logf",
            "m": float(m),
            "penalized_columns": [int(c) for c in columns],
        },
        diagnostics=diag,
    )


def _golden_section_max(f, lo, hi, tol):
    """Golden-section search for the maximum of a unimodal scalar function."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


class _RidgeObjective:
    """Laplace-approximate log marginal likelihood over log(lambda) for a
    standardized design with unpenalised intercept. Caches warm starts."""

    def __init__(self, zds, options):
        self.zds = zds
        self.options = options
        k = zds.X.shape[1]
        self.selector = np.eye(k)
        self.selector[0, 0] = 0.0
        self.n_penalized = k - 1
        self._warm = None

    def fit_at(self, log_lambda):
        lam = float(np.exp(log_lambda))
        fit = glm.irls(
            self.zds.X,
            self.zds.y,
            self.zds.w,
            options=self.options,
            penalty=lam * self.selector,
            start=self._warm,
        )
        self._warm = fit.beta
        return lam, fit

    def value(self, log_lambda):
        lam, fit = self.fit_at(log_lambda)
        eta = self.zds.X @ fit.beta
        loglik = float(np.sum(self.zds.w * (self.zds.y * eta - np.logaddexp(0.0, eta))))
        slopes = fit.beta[1:]
        _, logdet = cholesky(fit.information)
        return (
            loglik
            - 0.5 * lam * float(slopes @ slopes)
            + 0.5 * self.n_penalized * log_lambda
            - 0.5 * logdet
        )


def fit_bayes_ridge(ds, options=None, log_lambda_bounds=LOG_LAMBDA_BOUNDS,
                    fixed_log_lambda=None):
    """Gaussian prior on standardized slopes with data-driven precision.

    Maximizes the Laplace-approximate log marginal likelihood in
    log(lambda) by golden-section search plus one Newton polish, then
    propagates Var(log lambda) = -1/L'' into the coefficient covariance
    as the rank-one correction g g' Var(log lambda) with
    g = -lambda * H^-1 P beta. Reported coefficients and covariance are on
    the natural scale; lambda applies to the standardized scale.

    ``fixed_log_lambda`` skips the search (no hyperparameter uncertainty);
    used for boundary probes and testing.
    """
    if ds.p < 2:
        raise DomainError("bayesian ridge requires at least 2 non-intercept terms")
    zds, record = standardize(ds)
    objective = _RidgeObjective(zds, options)

    flat_marginal = False
    if fixed_log_lambda is not None:
        log_lam = float(fixed_log_lambda)
        var_log_lambda = 0.0
    else:
        lo, hi = log_lambda_bounds
        log_lam = _golden_section_max(objective.value, lo, hi, GOLDEN_TOL)
        h = CURVATURE_STEP
        f0 = objective.value(log_lam)
        f_plus = objective.value(log_lam + h)
        f_minus = objective.value(log_lam - h)
        d1 = (f_plus - f_minus) / (2.0 * h)
        d2 = (f_plus - 2.0 * f0 + f_minus) / (h * h)
        if d2 < 0.0:
            polished = log_lam - d1 / d2
            if abs(polished - log_lam) < 0.5 and lo <= polished <= hi:
                log_lam = polished
                f0 = objective.value(log_lam)
                f_plus = objective.value(log_lam + h)
                f_minus = objective.value(log_lam - h)
                d2 = (f_plus - 2.0 * f0 + f_minus) / (h * h)
        if d2 < 0.0:
            var_log_lambda = -1.0 / d2
        else:
            flat_marginal = True
            var_log_lambda = FLAT_MARGINAL_VAR

    lam, fit = objective.fit_at(log_lam)
    H = check_symmetric(fit.information)
    try:
        factor = cho_factor(H, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("penalised information not PD") from exc
    H_inv = cho_solve(factor, np.eye(H.shape[0]))
    H_inv = 0.5 * (H_inv + H_inv.T)
    g = -lam * H_inv @ (objective.selector @ fit.beta)
    sigma_std = H_inv + var_log_lambda * np.outer(g, g)

    A = record.coefficient_map()
    beta_nat = A @ fit.beta
    sigma_nat = A @ sigma_std @ A.T
    sigma_nat = 0.5 * (sigma_nat + sigma_nat.T)

    diag = _diagnostics(fit, ds, options)
    diag["flat_marginal"] = flat_marginal
    return PackagedModel(
        terms=ds.terms,
        beta=beta_nat,
        sigma=sigma_nat,
        prior={
            "variant": "ridge",
            "lambda_hat": float(lam),
            "var_log_lambda": float(var_log_lambda),
        },
        diagnostics=diag,
        standardization=record,
    )


def fit_model(ds, spec, options=None):
    """Dispatch a PriorSpec to the matching fitter."""
    if spec.variant == "flat":
        return fit_flat(ds, options)
    if spec.variant == "jeffreys":
        return fit_jeffreys(ds, options)
    if spec.variant == "logf":
        return fit_logf(
            ds,
            m=spec.m,
            skip=spec.skip,
            penalize_intercept=spec.penalize_intercept,
            options=options,
        )
    return fit_bayes_ridge(ds, options, log_lambda_bounds=spec.log_lambda_bounds)
