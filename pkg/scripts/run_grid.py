"""Run a desk-scale slice of the synthetic factorial design.

The full design crosses true/candidate predictor counts {5, 10, 30},
prevalence {0.05, 0.15, 0.30} and EPV {5, 10, 30}. Running all 81 cells
at 200+ replicates is a batch job; by default this script runs the
correctly-specified 5-predictor face of the cube (9 cells) at a reduced
replicate count. One results.csv per cell lands under --out.

    python scripts/run_grid.py --out grid_results --replicates 50
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from credence.simulate import (  # noqa: E402
    ScenarioConfig,
    run_scenario,
    summary_table,
    write_results_csv,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="grid_results")
    parser.add_argument("--replicates", type=int, default=50)
    parser.add_argument("--predictors", type=int, nargs="+", default=[5])
    parser.add_argument("--prevalence", type=float, nargs="+",
                        default=[0.05, 0.15, 0.30])
    parser.add_argument("--epv", type=float, nargs="+", default=[5, 10, 30])
    parser.add_argument("--population", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=20240801)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    for p in args.predictors:
        for prevalence in args.prevalence:
            for epv in args.epv:
                cfg = ScenarioConfig(
                    true_predictors=p,
                    candidate_predictors=p,
                    prevalence=prevalence,
                    epv=epv,
                    replicates=args.replicates,
                    population_size=args.population,
                    master_seed=args.seed,
                )
                tag = f"p{p}_prev{prevalence:g}_epv{epv:g}"
                started = time.time()
                result = run_scenario(cfg, jobs=args.jobs)
                elapsed = time.time() - started
                write_results_csv(result, os.path.join(args.out, f"{tag}.csv"))
                print(f"== {tag} ({elapsed:.1f} s)")
                print(summary_table(result))
                print()


if __name__ == "__main__":
    main()
