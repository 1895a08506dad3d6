"""Synthetic-population simulation engine and split-sample harness.

Populations are generated from Sobol latents mapped through the normal
quantile, with a one-factor equicorrelation drawn per replicate, random
binarization of half the columns, Laplace-distributed true coefficients,
and the intercept solved numerically to hit the target prevalence. All
population-level metrics are assessed against (pseudo-)true probabilities
so Bernoulli noise never enters the evaluation.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .data import Dataset, TermSpec
from .errors import NumericalError, ParseError, RangeError
from .metrics import compute_report, cri_coverage, posterior_cdf_calibration
from .numerics import SobolSequence, sigmoid, std_normal_quantile
from .predict import batch_posterior_mean
from .priors import fit_bayes_ridge, fit_flat, fit_jeffreys, fit_logf
from .projection import pseudo_true_fit, self_project

CORRELATION_LEVELS = (0.0, 0.25, 0.5, 0.75)
LAPLACE_SCALE = 0.5 / np.sqrt(2.0)  # SD 0.5
PREVALENCE_TOL = 1e-6
ESTIMATORS = ("plug_in", "pm_quadrature", "pm_mackay", "pm_projected")
PRIORS = ("flat", "jeffreys", "logf", "ridge")
CDF_PROBES = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class ScenarioConfig:
    """One cell of the synthetic factorial design.

    ``bernoulli_audit_seed`` exists only to make the Bernoulli-free
    property testable: population outcomes are never sampled, so changing
    it must leave every aggregate untouched.
    """

    true_predictors: int
    candidate_predictors: int
    prevalence: float
    epv: float
    replicates: int
    population_size: int = 10_000
    master_seed: int = 0
    threshold_percentiles: tuple = (25.0, 50.0, 75.0)
    logf_m: float = 2.0
    bernoulli_audit_seed: int = 0

    def __post_init__(self):
        if self.true_predictors < 1 or self.candidate_predictors < 1:
            raise RangeError("predictor counts must be positive")
        if not 0.0 < self.prevalence < 1.0:
            raise RangeError("prevalence must be in (0, 1)")
        if self.epv <= 0 or self.replicates < 1:
            raise RangeError("epv must be positive and replicates >= 1")
        if self.population_size < self.development_n:
            raise RangeError(
                f"population size {self.population_size} is below the "
                f"development sample size {self.development_n}"
            )
        for q in self.threshold_percentiles:
            if not 0.0 < q < 100.0:
                raise RangeError("threshold percentiles must be in (0, 100)")

    @property
    def development_n(self):
        return math.ceil(self.epv * self.candidate_predictors / self.prevalence)

    @property
    def latent_dim(self):
        return max(self.true_predictors, self.candidate_predictors)


@dataclass(frozen=True)
class Population:
    """Synthetic case mix with known truth."""

    predictors: np.ndarray
    true_beta: np.ndarray
    intercept: float
    probabilities: np.ndarray
    rho: float
    binary_mask: np.ndarray

    def __post_init__(self):
        p = self.probabilities
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise RangeError("true probabilities must lie strictly in (0, 1)")


@lru_cache(maxsize=8)
def _population_normals(dim, size):
    # The unscrambled Sobol block is identical for every replicate of a
    # scenario; cache its normal-quantile transform.
    seq = SobolSequence(dim, skip_zero=True)
    z = std_normal_quantile(seq.take(size))
    z.setflags(write=False)
    return z


def _one_factor(z, rho):
    # z has a shared-factor column 0 and idiosyncratic columns 1..d
    if rho == 0.0:
        return np.array(z[:, 1:])
    return np.sqrt(rho) * z[:, :1] + np.sqrt(1.0 - rho) * z[:, 1:]


def solve_intercept(coefficients, predictors, target):
    """Bisection for the intercept matching the target mean probability.

    The mean of sigmoid(b0 + X @ beta) is strictly increasing in b0, so a
    [-40, 40] bracket always works for targets inside (0, 1).
    """
    if not 0.0 < target < 1.0:
        raise RangeError("target prevalence must be in (0, 1)")
    eta = np.asarray(predictors, dtype=float) @ np.asarray(coefficients, dtype=float)

    def gap(b0):
        return float(np.mean(sigmoid(b0 + eta))) - target

    lo, hi = -40.0, 40.0
    if gap(lo) > 0.0 or gap(hi) < 0.0:
        raise NumericalError("intercept bracket failure")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) <= PREVALENCE_TOL:
            return mid
        if g > 0.0:
            hi = mid
        else:
            lo = mid
    raise NumericalError("intercept bisection did not reach tolerance")


def gen_population(cfg, replicate_seed, rho=None, binary_mask=None, coefficients=None):
    """Generate one replicate's population; keyword overrides support
    targeted tests of the generator's pieces."""
    d = cfg.latent_dim
    rng = np.random.default_rng(replicate_seed)
    drawn_rho = CORRELATION_LEVELS[rng.integers(len(CORRELATION_LEVELS))]
    drawn_mask = rng.random(d) < 0.5
    drawn_coef = rng.laplace(0.0, LAPLACE_SCALE, size=cfg.true_predictors)
    rho = drawn_rho if rho is None else float(rho)
    mask = drawn_mask if binary_mask is None else np.asarray(binary_mask, bool)
    beta = np.zeros(d)
    beta[: cfg.true_predictors] = (
        drawn_coef if coefficients is None else np.asarray(coefficients, float)
    )

    z = _population_normals(d + 1, cfg.population_size)
    latent = _one_factor(z, rho)
    X = np.where(mask[None, :], (latent > 0.0).astype(float), latent)
    intercept = solve_intercept(beta, X, cfg.prevalence)
    probs = sigmoid(intercept + X @ beta)
    return Population(
        predictors=X,
        true_beta=beta,
        intercept=intercept,
        probabilities=probs,
        rho=rho,
        binary_mask=mask,
    )


def _development_sample(cfg, pop, scramble_seed, outcome_rng):
    d = cfg.latent_dim
    seq = SobolSequence(d + 1, scramble_seed=scramble_seed)
    z = std_normal_quantile(np.clip(seq.take(cfg.development_n), 1e-12, 1 - 1e-12))
    latent = _one_factor(z, pop.rho)
    X = np.where(pop.binary_mask[None, :], (latent > 0.0).astype(float), latent)
    p_true = sigmoid(pop.intercept + X @ pop.true_beta)
    y = outcome_rng.binomial(1, p_true).astype(float)
    return X, y


def _candidate_terms(cfg):
    return tuple(TermSpec(f"x{j + 1}") for j in range(cfg.candidate_predictors))


def _fit_prior(name, ds, logf_m):
    if name == "flat":
        return fit_flat(ds)
    if name == "jeffreys":
        return fit_jeffreys(ds)
    if name == "logf":
        return fit_logf(ds, m=logf_m)
    if name == "ridge":
        return fit_bayes_ridge(ds)
    raise RangeError(f"unknown prior {name!r}")


def _replicate_seeds(cfg):
    root = np.random.SeedSequence(cfg.master_seed)
    return root.spawn(cfg.replicates)


def run_replicate(cfg, replicate_index):
    """All per-replicate work: population, development fit per prior,
    population predictions, metrics against pseudo-truth."""
    seed = _replicate_seeds(cfg)[replicate_index]
    structure_seed, dev_scramble, dev_outcome = seed.spawn(3)
    pop = gen_population(cfg, structure_seed)
    C = cfg.candidate_predictors
    terms = _candidate_terms(cfg)

    pop_candidate = pop.predictors[:, :C]
    population_ds = Dataset.from_features(pop_candidate, pop.probabilities, terms)
    pt_beta = pseudo_true_fit(population_ds)
    pseudo_true = sigmoid(pt_beta[0] + pop_candidate @ pt_beta[1:])

    X_dev, y_dev = _development_sample(
        cfg,
        pop,
        scramble_seed=int(dev_scramble.generate_state(1)[0]),
        outcome_rng=np.random.default_rng(dev_outcome),
    )
    dev_ds = Dataset.from_features(X_dev[:, :C], y_dev, terms)

    z_values = np.percentile(pop.probabilities, cfg.threshold_percentiles)
    thresholds = {
        f"p{int(q)}": float(z)
        for q, z in zip(cfg.threshold_percentiles, z_values)
    }

    reports = {}
    posterior_eval = {}
    failures = {}
    for prior in PRIORS:
        try:
            model = _fit_prior(prior, dev_ds, cfg.logf_m)
            mu = model.beta[0] + pop_candidate @ model.beta[1:]
            xt = np.column_stack([np.ones(len(pop_candidate)), pop_candidate])
            var = np.einsum("ij,jk,ik->i", xt, model.sigma, xt)
            sg = np.sqrt(np.maximum(var, 0.0))
            proj = self_project(model, dev_ds)
            estimates = {
                "plug_in": sigmoid(mu),
                "pm_quadrature": batch_posterior_mean(mu, sg, model.quadrature_k),
                "pm_mackay": sigmoid(mu / np.sqrt(1.0 + np.pi * sg**2 / 8.0)),
                "pm_projected": proj.predict_probs(pop_candidate),
            }
            for estimator, preds in estimates.items():
                reports[(prior, estimator)] = compute_report(
                    preds, pseudo_true, thresholds
                )
            posterior_eval[prior] = _posterior_assessment(mu, sg, pseudo_true)
        except NumericalError as exc:
            failures[prior] = f"{type(exc).__name__}: {exc}"
    return {
        "reports": reports,
        "posterior": posterior_eval,
        "failures": failures,
        "thresholds": thresholds,
        "events": float(np.sum(y_dev)),
    }


def _posterior_assessment(mu, sg, truths, level=0.95):
    zq = std_normal_quantile((1.0 + level) / 2.0)
    lo = sigmoid(mu - zq * sg)
    hi = sigmoid(mu + zq * sg)
    return {
        "coverage": cri_coverage(np.column_stack([lo, hi]), truths),
        "cdf_hat": posterior_cdf_calibration((mu, sg), truths, CDF_PROBES),
    }


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    rows: list
    failure_counts: dict
    replicates_used: dict
    threshold_labels: tuple
    mean_events: float


def _aggregate(cfg, replicate_results, threshold_labels):
    """Reduce per-replicate reports deterministically (replicate order,
    never completion order)."""
    rows = []
    failure_counts = {p: 0 for p in PRIORS}
    used = {p: 0 for p in PRIORS}
    for rep in replicate_results:
        for prior, msg in rep["failures"].items():
            failure_counts[prior] += 1
    for prior in PRIORS:
        ok = [r for r in replicate_results if prior not in r["failures"]]
        used[prior] = len(ok)
        if not ok:
            continue
        for estimator in ESTIMATORS:
            series = {
                "mse": [],
                "c_statistic": [],
                "oe_ratio": [],
                "calibration_intercept": [],
                "calibration_slope": [],
            }
            snb_series = {label: [] for label in threshold_labels}
            for r in ok:
                report = r["reports"][(prior, estimator)]
                series["mse"].append(report.mse)
                series["c_statistic"].append(report.c_statistic)
                series["oe_ratio"].append(report.oe_ratio)
                series["calibration_intercept"].append(report.calibration_intercept)
                series["calibration_slope"].append(report.calibration_slope)
                for label in threshold_labels:
                    snb_series[label].append(report.snb[label])
            rows += _stat_rows(prior, estimator, "mse", series["mse"], "mean_sd")
            rows += _stat_rows(
                prior, estimator, "c_statistic", series["c_statistic"], "mean_sd"
            )
            rows += _stat_rows(
                prior, estimator, "oe_ratio", series["oe_ratio"], "median_iqr"
            )
            rows += _stat_rows(
                prior,
                estimator,
                "calibration_intercept",
                series["calibration_intercept"],
                "mean_sd",
            )
            rows += _stat_rows(
                prior,
                estimator,
                "calibration_slope",
                series["calibration_slope"],
                "median_iqr",
            )
            for label in threshold_labels:
                rows += _stat_rows(
                    prior, estimator, "snb", snb_series[label], "mean_sd", label
                )
        coverage = [r["posterior"][prior]["coverage"] for r in ok]
        if coverage and coverage[0] is not None:
            rows += _stat_rows(prior, "posterior", "coverage", coverage, "mean_sd")
            for probe in CDF_PROBES:
                vals = [r["posterior"][prior]["cdf_hat"][probe] for r in ok]
                rows += _stat_rows(
                    prior, "posterior", f"cdf_{probe}", vals, "mean_sd"
                )
    return rows, failure_counts, used


def _stat_rows(prior, estimator, metric, values, mode, threshold=""):
    arr = np.asarray(values, dtype=float)
    out = []
    if mode == "mean_sd":
        stats = {
            "mean": float(np.mean(arr)),
            "sd": float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0,
        }
    else:
        stats = {
            "median": float(np.median(arr)),
            "q25": float(np.percentile(arr, 25)),
            "q75": float(np.percentile(arr, 75)),
        }
    for stat, value in stats.items():
        out.append(
            {
                "prior": prior,
                "estimator": estimator,
                "metric": metric,
                "threshold": threshold,
                "stat": stat,
                "value": value,
            }
        )
    return out


def run_scenario(cfg, jobs=1):
    """Execute every replicate of a scenario and aggregate.

    ``jobs`` > 1 runs replicates in parallel processes; results are
    identical to a serial run because each replicate owns its seeds and
    aggregation follows replicate order.
    """
    indices = range(cfg.replicates)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            replicate_results = list(
                pool.map(run_replicate, [cfg] * cfg.replicates, indices)
            )
    else:
        replicate_results = [run_replicate(cfg, i) for i in indices]
    labels = tuple(
        f"p{int(q)}" for q in cfg.threshold_percentiles
    )
    rows, failures, used = _aggregate(cfg, replicate_results, labels)
    events = float(np.mean([r["events"] for r in replicate_results]))
    return ScenarioResult(
        config=cfg,
        rows=rows,
        failure_counts=failures,
        replicates_used=used,
        threshold_labels=labels,
        mean_events=events,
    )


def split_sample_harness(
    ds,
    train_n,
    replicates,
    thresholds=(0.02, 0.05, 0.10),
    master_seed=0,
    logf_m=2.0,
):
    """Repeated random train/test splits of an external dataset.

    Metrics are computed against the held-out labels (truth is unknown
    here) at absolute decision thresholds; aggregation matches
    :func:`run_scenario`. Coverage is not assessable without truth.
    """
    if train_n >= ds.n:
        raise RangeError(f"train_n={train_n} must be below the {ds.n} rows")
    if train_n < ds.p + 2:
        raise RangeError("training split too small to fit the model")
    labels = tuple(f"t{z:g}" for z in thresholds)
    threshold_map = dict(zip(labels, thresholds))
    root = np.random.SeedSequence(master_seed)
    results = []
    for seed in root.spawn(replicates):
        rng = np.random.default_rng(seed)
        perm = rng.permutation(ds.n)
        tr, te = perm[:train_n], perm[train_n:]
        train = Dataset(X=ds.X[tr], y=ds.y[tr], terms=ds.terms, w=ds.w[tr])
        test_X = ds.X[te]
        test_y = ds.y[te]
        reports = {}
        failures = {}
        for prior in PRIORS:
            try:
                model = _fit_prior(prior, train, logf_m)
                mu = test_X @ model.beta
                var = np.einsum("ij,jk,ik->i", test_X, model.sigma, test_X)
                sg = np.sqrt(np.maximum(var, 0.0))
                proj = self_project(model, train)
                estimates = {
                    "plug_in": sigmoid(mu),
                    "pm_quadrature": batch_posterior_mean(mu, sg, model.quadrature_k),
                    "pm_mackay": sigmoid(mu / np.sqrt(1.0 + np.pi * sg**2 / 8.0)),
                    "pm_projected": proj.predict_probs(test_X[:, 1:]),
                }
                for estimator, preds in estimates.items():
                    reports[(prior, estimator)] = compute_report(
                        preds, test_y, threshold_map
                    )
            except NumericalError as exc:
                failures[prior] = f"{type(exc).__name__}: {exc}"
        results.append(
            {
                "reports": reports,
                "posterior": {p: {"coverage": None, "cdf_hat": None} for p in PRIORS},
                "failures": failures,
                "thresholds": threshold_map,
                "events": float(np.sum(ds.y[tr])),
            }
        )
    rows, failure_counts, used = _aggregate(None, results, labels)
    return ScenarioResult(
        config=None,
        rows=rows,
        failure_counts=failure_counts,
        replicates_used=used,
        threshold_labels=labels,
        mean_events=float(np.mean([r["events"] for r in results])),
    )


SCENARIO_KEYS = {
    "true_predictors": int,
    "candidate_predictors": int,
    "prevalence": float,
    "epv": float,
    "replicates": int,
    "population_size": int,
    "master_seed": int,
    "logf_m": float,
    "bernoulli_audit_seed": int,
}


def parse_scenario_config(path):
    """Parse a key = value scenario file (see README for the key list)."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {raw!r}", row=lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "threshold_percentiles":
                try:
                    values[key] = tuple(float(v) for v in value.split(","))
                except ValueError:
                    raise ParseError(f"bad percentile list {value!r}", row=lineno) from None
                continue
            if key not in SCENARIO_KEYS:
                raise ParseError(f"unknown scenario key {key!r}", row=lineno)
            try:
                values[key] = SCENARIO_KEYS[key](value)
            except ValueError:
                raise ParseError(
                    f"bad value {value!r} for {key}", row=lineno
                ) from None
    required = ("true_predictors", "candidate_predictors", "prevalence", "epv",
                "replicates")
    missing = [k for k in required if k not in values]
    if missing:
        raise ParseError(f"missing required scenario keys: {missing}")
    try:
        return ScenarioConfig(**values)
    except (RangeError, TypeError) as exc:
        raise ParseError(f"invalid scenario config: {exc}") from None


def write_results_csv(result, path):
    """Long-format results: one row per (prior, estimator, metric,
    threshold, statistic)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prior", "estimator", "metric", "threshold", "stat", "value"])
        for row in result.rows:
            writer.writerow(
                [
                    row["prior"],
                    row["estimator"],
                    row["metric"],
                    row["threshold"],
                    row["stat"],
                    f"{row['value']:.10g}",
                ]
            )


def summary_table(result):
    """Human-readable snapshot of the headline statistics."""
    lines = []
    cfg = result.config
    if cfg is not None:
        lines.append(
            f"scenario: true={cfg.true_predictors} candidate={cfg.candidate_predictors} "
            f"prevalence={cfg.prevalence} epv={cfg.epv} replicates={cfg.replicates} "
            f"dev_n={cfg.development_n}"
        )
    lines.append(f"mean development events: {result.mean_events:.1f}")
    for prior in PRIORS:
        nfail = result.failure_counts.get(prior, 0)
        lines.append(
            f"{prior}: replicates used {result.replicates_used.get(prior, 0)}"
            + (f" (failures {nfail})" if nfail else "")
        )
    index = {
        (r["prior"], r["estimator"], r["metric"], r["threshold"], r["stat"]): r["value"]
        for r in result.rows
    }
    header = f"{'prior':<9} {'estimator':<14} {'mse':>9} {'c':>7} {'o/e med':>8} {'slope med':>9}"
    lines.append(header)
    for prior in PRIORS:
        for estimator in ESTIMATORS:
            key = (prior, estimator, "mse", "", "mean")
            if key not in index:
                continue
            lines.append(
                f"{prior:<9} {estimator:<14} "
                f"{index[key]:>9.5f} "
                f"{index[(prior, estimator, 'c_statistic', '', 'mean')]:>7.4f} "
                f"{index[(prior, estimator, 'oe_ratio', '', 'median')]:>8.4f} "
                f"{index[(prior, estimator, 'calibration_slope', '', 'median')]:>9.4f}"
            )
    return "\n".join(lines)
