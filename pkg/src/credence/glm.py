"""Weighted logistic fitting by IRLS, with soft labels and a Firth variant.

The core engine works on raw arrays so that callers (log-F augmentation,
projection refits) can bypass the all-ones-intercept invariant of
:class:`~credence.data.Dataset`. Public entry points take a Dataset.

Deviance convention: soft-label cross-entropy with the y*log(y) reference
terms dropped (an affine shift that does not move the maximizer).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    NonConvergence,
    NotPositiveDefinite,
    RankDeficient,
    Separation,
)
from .numerics import check_symmetric, cholesky, sigmoid

# Separation heuristics: the spec-level rule (coefficients past 1e3 with a
# non-vanishing score) plus the practical signature of a divergent MLE --
# score convergence with huge coefficients and every hard-labelled row
# fitted essentially perfectly.
BETA_DIVERGENCE_LIMIT = 1e3
BETA_SUSPECT_LIMIT = 10.0
PERFECT_FIT_RESIDUAL = 1e-5


@dataclass(frozen=True)
class FitOptions:
    """Convergence controls for the IRLS loop.

    ``tol`` bounds the max absolute component of the (penalised) score at
    the reported optimum.
    """

    tol: float = 1e-8
    max_iter: int = 100
    max_halving: int = 20

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1 or self.max_halving < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass(frozen=True)
class FitResult:
    """Coefficients plus the curvature needed to package a posterior."""

    beta: np.ndarray
    information: np.ndarray
    deviance: float
    converged: bool
    iterations: int

    def covariance(self):
        return covariance(self)


def _log_likelihood(eta, y, w):
    # y*eta - log(1 + exp(eta)), stable for any eta:
    # log(1 + e^eta) = max(eta, 0) + log1p(e^-|eta|)
    log1pexp = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
    return float(np.sum(w * (y * eta - log1pexp)))


def _initial_beta(X, y, w):
    beta = np.zeros(X.shape[1])
    ybar = float(np.sum(w * y) / np.sum(w))
    ybar = min(max(ybar, 1e-3), 1.0 - 1e-3)
    beta[0] = np.log(ybar / (1.0 - ybar))
    return beta


def _leverage(A, factor):
    # diagonal of A (A^T A)^-1 A^T for the weighted design A = sqrt(W) X
    solved = cho_solve(factor, A.T)
    return np.einsum("ij,ji->i", A, solved)


def _factor_info(info, first_iteration):
    """Cholesky of the information, with escalating jitter as a damped-
    Newton fallback. Failure on the first iteration (well-conditioned
    weights) means the design itself is rank-deficient."""
    try:
        return cho_factor(info, lower=True), info
    except np.linalg.LinAlgError as exc:
        if first_iteration:
            raise RankDeficient(
                "information matrix is singular at the starting point; "
                "check for collinear or duplicated columns"
            ) from exc
    scale = float(np.trace(info)) / info.shape[0]
    for jitter in (1e-10, 1e-8, 1e-6, 1e-4, 1e-2):
        damped = info + jitter * scale * np.eye(info.shape[0])
        try:
            return cho_factor(damped, lower=True), damped
        except np.linalg.LinAlgError:
            continue
    raise RankDeficient("information matrix is numerically singular")


def irls(
    X,
    y,
    w=None,
    options=None,
    penalty=None,
    firth=False,
    separation_rows=None,
    start=None,
):
    """Maximize the (optionally penalised) weighted soft-label log-likelihood.

    Parameters
    ----------
    X, y, w
        Raw design matrix (any columns), responses in [0, 1], weights.
    penalty
        Optional PSD matrix P adding a -1/2 beta' P beta term to the
        log-likelihood (used for Gaussian/ridge priors).
    firth
        Add the +1/2 log det I(beta) Jeffreys penalty; the score gains the
        hat-diagonal adjustment and separation becomes fittable.
    separation_rows
        Boolean mask of rows eligible for the perfect-fit separation check
        (log-F fits exclude their augmentation rows).

    Returns a FitResult whose ``information`` is X'WX plus the penalty
    matrix when one is given. For Firth fits the information is the Fisher
    information at the penalised estimate, the standard basis for
    bias-reduced covariance estimates.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float).ravel()
    opts = options or FitOptions()
    n, k = X.shape
    if n < k:
        raise RankDeficient(f"{n} rows cannot identify {k} coefficients")
    if penalty is not None:
        penalty = check_symmetric(penalty)

    def objective(beta):
        eta = X @ beta
        ll = _log_likelihood(eta, y, w)
        if penalty is not None:
            ll -= 0.5 * float(beta @ penalty @ beta)
        if firth:
            p = sigmoid(eta)
            wvec = w * p * (1.0 - p)
            info = (X * wvec[:, None]).T @ X
            try:
                ll += 0.5 * cholesky(info)[1]
            except NotPositiveDefinite:
                return -np.inf
        return ll

    if start is not None:
        beta = np.array(start, dtype=float)
        if beta.shape != (k,):
            raise RankDeficient(f"warm start has shape {beta.shape}, expected ({k},)")
    else:
        beta = _initial_beta(X, y, w)
    current = objective(beta)
    converged = False
    iterations = 0

    for iteration in range(1, opts.max_iter + 1):
        iterations = iteration
        eta = X @ beta
        p = sigmoid(eta)
        wvec = w * p * (1.0 - p)
        A = np.sqrt(wvec)[:, None] * X
        info = A.T @ A
        if penalty is not None:
            info = info + penalty
        factor, info_used = _factor_info(info, first_iteration=(iteration == 1))

        residual = w * (y - p)
        score = X.T @ residual
        if firth:
            h = _leverage(A, factor)
            score = score + X.T @ (h * (0.5 - p))
        if penalty is not None:
            score = score - penalty @ beta

        if np.max(np.abs(score)) <= opts.tol:
            converged = True
            iterations = iteration - 1
            break

        if (
            np.max(np.abs(beta)) > BETA_DIVERGENCE_LIMIT
            and np.max(np.abs(score)) > opts.tol
        ):
            raise Separation(
                "coefficients diverged past 1e3 with a non-vanishing score"
            )

        step = cho_solve(factor, score)
        slack = 1e-10 * max(1.0, abs(current))
        value = objective(beta + step)
        if not (np.isfinite(value) and value >= current + slack):
            # No clear gain at the full step (e.g. Firth's adjusted score
            # makes Fisher-scoring overshoot on tiny designs): halve
            # greedily and keep the best point seen.
            best_step = step if np.isfinite(value) else None
            best_value = value if np.isfinite(value) else -np.inf
            trial_step = step
            for _ in range(opts.max_halving):
                trial_step = 0.5 * trial_step
                v = objective(beta + trial_step)
                if not np.isfinite(v):
                    continue
                if v > best_value:
                    best_step, best_value = trial_step, v
                else:
                    break
            if best_step is None or best_value < current - slack:
                raise NonConvergence(
                    f"step-halving found no ascent at iteration {iteration}"
                )
            step, value = best_step, best_value
        beta = beta + step
        current = value

    eta = X @ beta
    p = sigmoid(eta)
    if not converged:
        raise NonConvergence(f"no convergence in {opts.max_iter} iterations")

    if not firth and penalty is None:
        _check_separation(beta, y, p, separation_rows)

    wvec = w * p * (1.0 - p)
    info = (wvec[:, None] * X).T @ X
    if penalty is not None:
        info = info + penalty
    info = 0.5 * (info + info.T)
    deviance = -2.0 * _log_likelihood(eta, y, w)
    return FitResult(
        beta=beta,
        information=info,
        deviance=deviance,
        converged=converged,
        iterations=iterations,
    )


def _check_separation(beta, y, p, rows):
    """Post-convergence separation screen for unpenalised fits.

    A score that vanished only because fitted probabilities saturated at
    their hard labels is a divergent MLE, not a maximum.
    """
    if np.max(np.abs(beta)) <= BETA_SUSPECT_LIMIT:
        return
    mask = np.ones(len(y), dtype=bool) if rows is None else np.asarray(rows, bool)
    hard = mask & ((y == 0.0) | (y == 1.0))
    if not np.any(hard):
        return
    if np.max(np.abs(y[hard] - p[hard])) < PERFECT_FIT_RESIDUAL:
        raise Separation(
            "fitted probabilities reached their labels while coefficients "
            "diverged; the maximum likelihood estimate does not exist"
        )


def fit_logistic(ds, options=None):
    """Weighted soft-label logistic regression on a Dataset."""
    if ds.n < ds.p + 1:
        raise RankDeficient(f"need at least {ds.p + 1} rows, got {ds.n}")
    return irls(ds.X, ds.y, ds.w, options=options)


def fit_firth(ds, options=None):
    """Bias-reduced (Jeffreys-penalised) logistic regression.

    Finite estimates exist even under complete separation. The leverage
    adjustment is recomputed at every iteration.
    """
    if ds.n < ds.p + 1:
        raise RankDeficient(f"need at least {ds.p + 1} rows, got {ds.n}")
    return irls(ds.X, ds.y, ds.w, options=options, firth=True)


def covariance(fit):
    """Coefficient covariance: inverse information via Cholesky."""
    if not fit.converged:
        raise NonConvergence("covariance requested for a non-converged fit")
    info = check_symmetric(fit.information)
    try:
        factor = cho_factor(info, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            "information matrix is not positive-definite"
        ) from exc
    sigma = cho_solve(factor, np.eye(info.shape[0]))
    return 0.5 * (sigma + sigma.T)
