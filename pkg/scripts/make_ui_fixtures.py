"""Regenerate the golden fixtures shared by the CLI tests and the
risk-explorer frontend tests.

Writes frontend/fixtures/model.json (a served model document) and
frontend/fixtures/golden.json (five feature vectors with the exact
numbers the CLI/service produces, pre-formatted to 6 decimals). The
frontend test suite asserts its rendering of the served payloads matches
these strings; tests/test_ui_golden.py asserts the committed files stay
in sync with the core.
"""

import json
import os
import sys

import numpy as np

ROOT = os.path.join(os.path.dirname(__file__), "..")
sys.path.insert(0, os.path.join(ROOT, "src"))

from credence import modelio  # noqa: E402
from credence.cli import summarize_rows  # noqa: E402
from credence.data import Dataset, TermSpec, Transform  # noqa: E402
from credence.numerics import sigmoid  # noqa: E402
from credence.priors import fit_flat  # noqa: E402
from credence.server import DENSITY_GRID, _summarize  # noqa: E402

FIXTURE_VECTORS = [
    {"age": 61.0, "anterior_mi": 0.0, "prev_mi": 0.0, "pulse": 100.0, "sbp": 83.0},
    {"age": 48.0, "anterior_mi": 1.0, "prev_mi": 0.0, "pulse": 70.0, "sbp": 120.0},
    {"age": 75.0, "anterior_mi": 1.0, "prev_mi": 1.0, "pulse": 95.0, "sbp": 98.0},
    {"age": 55.0, "anterior_mi": 0.0, "prev_mi": 1.0, "pulse": 64.0, "sbp": 135.0},
    {"age": 69.0, "anterior_mi": 0.0, "prev_mi": 0.0, "pulse": 82.0, "sbp": 105.0},
]


def build_model():
    rng = np.random.default_rng(2024)
    n = 1200
    age = rng.normal(61, 12, n)
    anterior = (rng.random(n) < 0.4).astype(float)
    prev = (rng.random(n) < 0.17).astype(float)
    pulse = rng.normal(76, 18, n)
    sbp = rng.normal(122, 20, n)
    eta = (-7.2 + 0.07 * age + 0.55 * anterior + 0.85 * prev
           + 0.016 * pulse - 0.04 * np.minimum(sbp, 100.0))
    y = (rng.random(n) < sigmoid(eta)).astype(float)
    terms = (
        TermSpec("age"),
        TermSpec("anterior_mi", kind="binary"),
        TermSpec("prev_mi", kind="binary"),
        TermSpec("pulse"),
        TermSpec("sbp", transform=Transform("cap_above", 100.0)),
    )
    features = np.column_stack([age, anterior, prev, pulse, sbp])
    return fit_flat(Dataset.from_features(features, y, terms))


def golden_payload(model):
    vectors = []
    for mapping in FIXTURE_VECTORS:
        x = np.array([mapping[t.name] for t in model.terms])
        record = summarize_rows(model, [x], "quadrature", 0.95)[0]
        payload = _summarize(model, x)
        vectors.append(
            {
                "features": mapping,
                "plug_in": record["plug_in"],
                "post_mean": record["post_mean"],
                "cri": [record["cri_lo"], record["cri_hi"]],
                "method": record["method"],
                "display": {
                    "plug_in": f"{record['plug_in']:.6f}",
                    "post_mean": f"{record['post_mean']:.6f}",
                    "cri_lo": f"{record['cri_lo']:.6f}",
                    "cri_hi": f"{record['cri_hi']:.6f}",
                },
                "density_first": payload["density"][0],
                "density_last": payload["density"][-1],
            }
        )
    return {
        "density_grid": [float(DENSITY_GRID[0]), float(DENSITY_GRID[-1]),
                         len(DENSITY_GRID)],
        "vectors": vectors,
    }


def main():
    out_dir = os.path.join(ROOT, "frontend", "fixtures")
    os.makedirs(out_dir, exist_ok=True)
    model = build_model()
    doc = modelio.to_document(model, created_at="2024-08-01T00:00:00+00:00")
    with open(os.path.join(out_dir, "model.json"), "w", encoding="utf-8") as fh:
        fh.write(modelio.dumps(doc))
    golden = golden_payload(model)
    with open(os.path.join(out_dir, "golden.json"), "w", encoding="utf-8") as fh:
        json.dump(golden, fh, indent=2)
        fh.write("\n")
    print(f"wrote fixtures for {len(golden['vectors'])} vectors to {out_dir}")


if __name__ == "__main__":
    main()
