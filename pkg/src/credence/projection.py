"""Self-projection: refit a simple equation to posterior-mean soft labels.

Minimizing the case-mix-averaged Bernoulli KL divergence between the
posterior means and a candidate equation reduces to a soft-label MLE, so
the projected model needs exactly one inverse-link evaluation at
deployment while approximating the posterior mean.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import glm
from .errors import (
    IdentityLinkOutOfRange,
    MissingColumn,
    NonConvergence,
    RangeError,
)
from .numerics import sigmoid
from .predict import batch_posterior_mean


def kl_bernoulli(p, q):
    """Bernoulli KL divergence in nats; 0*log(0) handled as 0.

    Infinite divergence (q at a boundary with p != q) is an error.
    """
    if not 0.0 <= p <= 1.0:
        raise RangeError(f"p must be in [0, 1], got {p}")
    if q <= 0.0 or q >= 1.0:
        if p == q:
            return 0.0
        raise RangeError(f"divergence is infinite for q = {q}")
    total = 0.0
    if p > 0.0:
        total += p * np.log(p / q)
    if p < 1.0:
        total += (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    # the divergence is provably non-negative; rounding can leave ~1e-18
    # below zero when p is essentially q
    return max(float(total), 0.0)


def mean_kl(p, q, w=None):
    """Weighted mean Bernoulli KL over aligned arrays (boundaries in q
    rejected as in :func:`kl_bernoulli`)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise RangeError("divergence is infinite for boundary q")
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(p > 0.0, p * np.log(p / q), 0.0)
        right = np.where(p < 1.0, (1.0 - p) * np.log((1.0 - p) / (1.0 - q)), 0.0)
    kl = left + right
    if w is None:
        return max(float(np.mean(kl)), 0.0)
    w = np.asarray(w, dtype=float)
    return max(float(np.sum(w * kl) / np.sum(w)), 0.0)


@dataclass(frozen=True)
class ProjectedModel:
    """Simple equation approximating a source model's posterior means."""

    terms: tuple
    beta: np.ndarray
    link: str
    source_fingerprint: str
    mean_residual_kl: float
    source_indices: tuple

    def __post_init__(self):
        if self.link not in ("logit", "identity"):
            raise RangeError(f"unsupported projection link {self.link!r}")
        beta = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "beta", beta)
        beta.setflags(write=False)
        if self.mean_residual_kl < 0:
            raise RangeError("mean residual KL cannot be negative")

    def _design_from_source(self, F):
        F = np.asarray(F, dtype=float)
        one_row = F.ndim == 1
        if one_row:
            F = F.reshape(1, -1)
        cols = [np.ones(F.shape[0])]
        for term, idx in zip(self.terms, self.source_indices):
            cols.append(term.apply_transform(F[:, idx]))
        return np.column_stack(cols), one_row

    def predict_probs(self, F):
        """Predictions for source-shaped raw feature rows (one inverse-link
        evaluation per row)."""
        X, one_row = self._design_from_source(F)
        eta = X @ self.beta
        out = sigmoid(eta) if self.link == "logit" else eta
        return float(out[0]) if one_row else out

    def predict_one(self, x):
        return self.predict_probs(np.asarray(x, dtype=float))


def _posterior_means_on(model, ds):
    mu = ds.X @ model.beta
    var = np.einsum("ij,jk,ik->i", ds.X, model.sigma, ds.X)
    sigma = np.sqrt(np.maximum(var, 0.0))
    return batch_posterior_mean(mu, sigma, model.quadrature_k)


def _fit_identity_link(X, y, w, options=None):
    """Fisher scoring for the binomial likelihood with identity link,
    keeping fitted values strictly inside (0, 1)."""
    opts = options or glm.FitOptions()
    eps = 1e-10

    def feasible(beta):
        h = X @ beta
        return np.all(h > eps) and np.all(h < 1.0 - eps)

    # start from the feasible constant fit, moved toward the least-squares
    # solution as far as feasibility allows
    beta_const = np.zeros(X.shape[1])
    beta_const[0] = float(np.clip(np.average(y, weights=w), 1e-6, 1 - 1e-6))
    beta_ls, *_ = np.linalg.lstsq(X * np.sqrt(w)[:, None], y * np.sqrt(w), rcond=None)
    beta = beta_ls
    t = 1.0
    while not feasible(beta):
        t *= 0.5
        if t < 1e-8:
            beta = beta_const
            break
        beta = (1.0 - t) * beta_const + t * beta_ls

    boundary = 1e-6

    def check_interior(h):
        if np.min(h) < boundary or np.max(h) > 1.0 - boundary:
            raise IdentityLinkOutOfRange(
                "identity-link fit pushed predictions onto the (0, 1) boundary"
            )

    for _ in range(opts.max_iter):
        h = X @ beta
        wvec = w / (h * (1.0 - h))
        score = X.T @ (w * (y - h) / (h * (1.0 - h)))
        if np.max(np.abs(score)) <= opts.tol:
            check_interior(h)
            return beta
        info = (X * wvec[:, None]).T @ X
        try:
            step = cho_solve(cho_factor(info, lower=True), score)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence("identity-link information singular") from exc
        halvings = 0
        while not feasible(beta + step):
            step *= 0.5
            halvings += 1
            if halvings > opts.max_halving:
                raise IdentityLinkOutOfRange(
                    "identity-link fit cannot keep predictions inside (0, 1)"
                )
        beta = beta + step
    check_interior(X @ beta)
    raise NonConvergence("identity-link projection did not converge")


def self_project(model, case_mix, terms=None, link="logit", options=None):
    """Project a packaged model onto a simple equation over the case mix.

    Responses are the model's posterior means on ``case_mix`` (quadrature
    at the model's recorded order); the candidate equation is fit by the
    soft-label MLE, which minimizes the mean Bernoulli KL divergence over
    the candidate family. ``terms`` selects a subset of the source terms
    (default: all).
    """
    names = list(terms) if terms is not None else [t.name for t in model.terms]
    model_names = [t.name for t in model.terms]
    unknown = [n for n in names if n not in model_names]
    if unknown:
        raise MissingColumn(f"projection terms not in source model: {unknown}")

    sub = case_mix.select_terms(names)
    pbar = _posterior_means_on(model, case_mix.select_terms(model_names))

    if link == "logit":
        fit = glm.irls(sub.X, pbar, sub.w, options=options)
        dot_beta = fit.beta
        fitted = sigmoid(sub.X @ dot_beta)
    elif link == "identity":
        dot_beta = _fit_identity_link(sub.X, pbar, sub.w, options=options)
        fitted = sub.X @ dot_beta
        if np.any(fitted <= 0.0) or np.any(fitted >= 1.0):
            raise IdentityLinkOutOfRange(
                "identity-link projection produced out-of-range fitted values"
            )
    else:
        raise RangeError(f"unsupported projection link {link!r}")

    residual = mean_kl(pbar, fitted, sub.w)
    indices = tuple(model_names.index(n) for n in names)
    return ProjectedModel(
        terms=tuple(model.terms[i] for i in indices),
        beta=dot_beta,
        link=link,
        source_fingerprint=model.fingerprint(),
        mean_residual_kl=residual,
        source_indices=indices,
    )


def pseudo_true_fit(population, terms=None, options=None):
    """Soft-label MLE of true probabilities on candidate predictors.

    ``population`` is a Dataset whose responses are the true outcome
    probabilities; under a correctly specified candidate family this
    recovers the generating coefficients.
    """
    if np.any(population.y <= 0.0) or np.any(population.y >= 1.0):
        raise RangeError("population soft labels must lie strictly in (0, 1)")
    ds = population if terms is None else population.select_terms(list(terms))
    fit = glm.irls(ds.X, ds.y, ds.w, options=options)
    return fit.beta
