"""Fit all four priors on one synthetic cohort and walk one individual
through the whole deployment story: plug-in, posterior mean (quadrature
and MacKay), credible interval, self-projection, and the treat/no-treat
call at a 5% harm-benefit threshold.

    python scripts/running_example.py
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from credence.data import Dataset, TermSpec  # noqa: E402
from credence.decision import net_benefit, treat_decision  # noqa: E402
from credence.numerics import sigmoid  # noqa: E402
from credence.predict import (  # noqa: E402
    linear_predictor_dist,
    posterior_mean_mackay,
    posterior_mean_quadrature,
    credible_interval,
)
from credence.priors import (  # noqa: E402
    fit_bayes_ridge,
    fit_flat,
    fit_jeffreys,
    fit_logf,
)
from credence.projection import self_project  # noqa: E402


def build_cohort(n=1000, seed=11):
    rng = np.random.default_rng(seed)
    age = rng.normal(61, 12, n)
    anterior = (rng.random(n) < 0.4).astype(float)
    prev_mi = (rng.random(n) < 0.17).astype(float)
    pulse = rng.normal(76, 18, n)
    sbp = rng.normal(125, 22, n)
    eta = (
        -4.5 + 0.075 * age + 0.6 * anterior + 0.9 * prev_mi
        + 0.018 * pulse - 0.045 * np.minimum(sbp, 100.0)
    )
    y = (rng.random(n) < sigmoid(eta)).astype(float)
    terms = (
        TermSpec("age"),
        TermSpec("anterior_mi", kind="binary"),
        TermSpec("prev_mi", kind="binary"),
        TermSpec("pulse"),
        TermSpec("sbp"),
    )
    features = np.column_stack([age, anterior, prev_mi, pulse, np.minimum(sbp, 100.0)])
    return Dataset.from_features(features, y, terms), features


def main():
    cohort, features = build_cohort()
    print(f"cohort: n={cohort.n}, events={int(cohort.y.sum())} "
          f"({cohort.y.mean():.1%})\n")

    fits = {
        "flat": fit_flat(cohort),
        "jeffreys": fit_jeffreys(cohort),
        "log-F(2,2)": fit_logf(cohort, m=2.0),
        "ridge": fit_bayes_ridge(cohort),
    }

    names = ["(Intercept)"] + [t.name for t in cohort.terms]
    print(f"{'term':<14}" + "".join(f"{k:>14}" for k in fits))
    for j, name in enumerate(names):
        print(f"{name:<14}" + "".join(f"{m.beta[j]:>14.4f}" for m in fits.values()))

    patient = [61.0, 0.0, 0.0, 100.0, 83.0]
    z = 0.05
    print(f"\npatient {dict(zip(names[1:], patient))} at threshold {z:.0%}")
    print(f"{'prior':<12} {'PE':>8} {'PM':>8} {'MacKay':>8} "
          f"{'95% CrI':>18} {'decision':>9}")
    for label, model in fits.items():
        dist = linear_predictor_dist(model, patient)
        pe = float(sigmoid(dist.mu))
        pm = posterior_mean_quadrature(dist, model.quadrature_k)
        mk = posterior_mean_mackay(dist)
        lo, hi = credible_interval(dist)
        call = treat_decision(pm, z)
        print(f"{label:<12} {pe:>8.4f} {pm:>8.4f} {mk:>8.4f} "
              f"({lo:.4f}, {hi:.4f}) {call:>9}")

    projected = self_project(fits["flat"], cohort)
    pm_proj = projected.predict_one(patient)
    print(f"\nself-projection of the flat model: mean residual KL "
          f"{projected.mean_residual_kl:.2e} nats")
    print(f"projected single-evaluation PM for the patient: {pm_proj:.4f} "
          f"(net benefit at {z:.0%}: {net_benefit(pm_proj, z):+.5f})")


if __name__ == "__main__":
    main()
