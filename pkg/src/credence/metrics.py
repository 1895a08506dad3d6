"""Model performance metrics: error, discrimination, calibration, utility,
and posterior-distribution assessment.

All metrics accept either hard labels or true probabilities as the
reference; the probability form integrates out Bernoulli noise (e.g. the
expected squared error p*(1-pi)^2 + (1-p)*pi^2).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import glm
from .decision import snb
from .errors import RangeError, SlopeUndefined, UndefinedMetric
from .numerics import std_normal_cdf

LOGIT_CLAMP = 1e-12  # keeps the calibration refit defined for 0/1 inputs


def _pair(pi, reference):
    pi = np.asarray(pi, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if pi.shape != ref.shape:
        raise RangeError("prediction and reference lengths differ")
    return pi, ref


def mse_vs_truth(pi, p):
    """Mean of E[(pi - Y)^2] = p(1-pi)^2 + (1-p) pi^2 over individuals."""
    pi, p = _pair(pi, p)
    if np.any((pi < 0) | (pi > 1)) or np.any((p < 0) | (p > 1)):
        raise RangeError("values must lie in [0, 1]")
    return float(np.mean(p * (1.0 - pi) ** 2 + (1.0 - p) * pi**2))


def c_statistic(pi, reference):
    """Concordance weighted by reference event/non-event mass.

    With hard labels this is the usual c-statistic (ties count 1/2); with
    probabilities each (i, j) pair carries weight p_i * (1 - p_j).
    Runs in O(n log n) via sorting and prefix sums.
    """
    pi, ref = _pair(pi, reference)
    total_p = float(np.sum(ref))
    total_q = float(np.sum(1.0 - ref))
    cross = float(np.sum(ref * (1.0 - ref)))
    denominator = total_p * total_q - cross
    if denominator <= 0.0:
        raise UndefinedMetric("c-statistic undefined for a degenerate reference")

    order = np.argsort(pi, kind="mergesort")
    pi_sorted = pi[order]
    p_sorted = ref[order]
    starts = np.flatnonzero(np.concatenate(([True], pi_sorted[1:] != pi_sorted[:-1])))
    group_p = np.add.reduceat(p_sorted, starts)
    group_q = np.add.reduceat(1.0 - p_sorted, starts)
    group_cross = np.add.reduceat(p_sorted * (1.0 - p_sorted), starts)
    # event mass in each tie group concords with non-event mass strictly
    # below it, and half-counts within its own group
    below = np.concatenate(([0.0], np.cumsum(group_q)[:-1]))
    numerator = float(
        np.sum(group_p * below) + 0.5 * np.sum(group_p * group_q - group_cross)
    )
    return numerator / denominator


def oe_ratio(reference, pi):
    """Observed over expected event totals."""
    pi, ref = _pair(pi, reference)
    expected = float(np.sum(pi))
    if expected <= 0.0:
        raise UndefinedMetric("O/E undefined with zero expected events")
    return float(np.sum(ref)) / expected


def calibration_slope(reference, pi, options=None):
    """Intercept and slope of the logistic recalibration
    logit(P(Y=1)) = a + b*logit(pi); reference may be soft."""
    pi, ref = _pair(pi, reference)
    clamped = np.clip(pi, LOGIT_CLAMP, 1.0 - LOGIT_CLAMP)
    eta = np.log(clamped / (1.0 - clamped))
    if float(np.var(eta)) <= 0.0:
        raise SlopeUndefined("calibration slope undefined for constant predictions")
    X = np.column_stack([np.ones(len(eta)), eta])
    # a 2-parameter refit does not need the fitting engine's full score
    # tolerance; 1e-6 leaves the slope accurate well past 1e-8
    opts = options or glm.FitOptions(tol=1e-6)
    fit = glm.irls(X, ref, options=opts)
    return float(fit.beta[0]), float(fit.beta[1])


def cri_coverage(cris, truths):
    """Proportion of intervals containing the truth (boundaries covered)."""
    cris = np.asarray(cris, dtype=float).reshape(-1, 2)
    truths = np.asarray(truths, dtype=float).ravel()
    if len(cris) != len(truths):
        raise RangeError("interval and truth lengths differ")
    inside = (cris[:, 0] <= truths) & (truths <= cris[:, 1])
    return float(np.mean(inside))


def posterior_cdf_calibration(dists, truths, probes=(0.1, 0.5, 0.9)):
    """Empirical CDF of Phi((logit(truth) - mu) / sigma) at the probes.

    When the posterior is calibrated these u-values are Uniform(0,1), so
    the ideal value at each probe x is x itself. ``dists`` may be a list of
    LinearPredictorDist or a (mu, sigma) array pair.
    """
    if isinstance(dists, tuple) and len(dists) == 2:
        mu = np.asarray(dists[0], dtype=float)
        sigma = np.asarray(dists[1], dtype=float)
    else:
        mu = np.array([d.mu for d in dists], dtype=float)
        sigma = np.array([d.sigma for d in dists], dtype=float)
    truths = np.asarray(truths, dtype=float).ravel()
    if len(mu) != len(truths):
        raise RangeError("distribution and truth lengths differ")
    probes = tuple(float(x) for x in probes)
    if any(not 0.0 < x < 1.0 for x in probes):
        raise RangeError("probes must lie strictly inside (0, 1)")
    if np.any(sigma <= 0.0):
        raise RangeError("posterior CDF calibration requires sigma > 0")
    if np.any((truths <= 0.0) | (truths >= 1.0)):
        raise RangeError("truths must lie strictly inside (0, 1)")
    u = std_normal_cdf((np.log(truths / (1.0 - truths)) - mu) / sigma)
    return {x: float(np.mean(u <= x)) for x in probes}


@dataclass(frozen=True)
class MetricReport:
    """One model's evaluation against one reference."""

    mse: float
    c_statistic: float
    oe_ratio: float
    calibration_intercept: float
    calibration_slope: float
    snb: dict
    coverage: Optional[float] = None
    cdf_hat: Optional[dict] = None


def compute_report(
    predictions,
    reference,
    thresholds,
    posterior=None,
    posterior_truths=None,
    cri_level=0.95,
    probes=(0.1, 0.5, 0.9),
):
    """Assemble a MetricReport.

    ``thresholds`` maps a label to a z value. ``posterior`` is an optional
    (mu, sigma) pair; when given with ``posterior_truths``, coverage of
    the central interval and the posterior CDF calibration are included.
    """
    a, b = calibration_slope(reference, predictions)
    report = dict(
        mse=mse_vs_truth(predictions, reference),
        c_statistic=c_statistic(predictions, reference),
        oe_ratio=oe_ratio(reference, predictions),
        calibration_intercept=a,
        calibration_slope=b,
        snb={label: snb(predictions, reference, z) for label, z in thresholds.items()},
    )
    if posterior is not None and posterior_truths is not None:
        from .numerics import sigmoid, std_normal_quantile

        mu, sigma = posterior
        zq = std_normal_quantile((1.0 + cri_level) / 2.0)
        lo = sigmoid(mu - zq * sigma)
        hi = sigmoid(mu + zq * sigma)
        report["coverage"] = cri_coverage(np.column_stack([lo, hi]), posterior_truths)
        report["cdf_hat"] = posterior_cdf_calibration(
            (mu, sigma), posterior_truths, probes
        )
    return MetricReport(**report)


def report_csv_header(threshold_labels, probes=(0.1, 0.5, 0.9)):
    """Stable column order for one-row-per-(scenario, method, prior) CSVs."""
    cols = [
        "scenario",
        "prior",
        "method",
        "mse",
        "c_statistic",
        "oe_ratio",
        "calibration_intercept",
        "calibration_slope",
    ]
    cols += [f"snb_{label}" for label in threshold_labels]
    cols += ["coverage"] + [f"cdf_{x}" for x in probes]
    return cols


def report_csv_row(scenario, prior, method, report, threshold_labels,
                   probes=(0.1, 0.5, 0.9)):
    row = [
        scenario,
        prior,
        method,
        report.mse,
        report.c_statistic,
        report.oe_ratio,
        report.calibration_intercept,
        report.calibration_slope,
    ]
    row += [report.snb.get(label, "") for label in threshold_labels]
    row.append("" if report.coverage is None else report.coverage)
    cdf = report.cdf_hat or {}
    row += ["" if cdf.get(x) is None else cdf[x] for x in probes]
    return row
