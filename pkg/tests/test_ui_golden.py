"""The committed frontend fixtures must match what the core computes.

The frontend test suite renders from frontend/fixtures/golden.json; this
guard regenerates the numbers through the CLI/service path and fails if
the committed files have drifted.
"""

import json
import os
import sys

import numpy as np
import pytest

from credence import modelio
from credence.cli import summarize_rows

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "frontend", "fixtures")

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "scripts"))


@pytest.fixture(scope="module")
def committed():
    with open(os.path.join(FIXTURE_DIR, "model.json"), encoding="utf-8") as fh:
        model_doc = json.load(fh)
    with open(os.path.join(FIXTURE_DIR, "golden.json"), encoding="utf-8") as fh:
        golden = json.load(fh)
    return model_doc, golden


def test_model_document_parses(committed):
    model_doc, _ = committed
    model = modelio.from_document(model_doc)
    assert [t.name for t in model.terms] == [
        "age", "anterior_mi", "prev_mi", "pulse", "sbp",
    ]


def test_golden_vectors_match_core(committed):
    model_doc, golden = committed
    model = modelio.from_document(model_doc)
    assert len(golden["vectors"]) == 5
    for entry in golden["vectors"]:
        x = np.array([entry["features"][t.name] for t in model.terms])
        record = summarize_rows(model, [x], "quadrature", 0.95)[0]
        assert record["plug_in"] == pytest.approx(entry["plug_in"], abs=1e-12)
        assert record["post_mean"] == pytest.approx(entry["post_mean"], abs=1e-12)
        assert record["cri_lo"] == pytest.approx(entry["cri"][0], abs=1e-12)
        assert record["cri_hi"] == pytest.approx(entry["cri"][1], abs=1e-12)
        assert entry["display"]["plug_in"] == f"{record['plug_in']:.6f}"
        assert entry["display"]["post_mean"] == f"{record['post_mean']:.6f}"
        assert entry["display"]["cri_lo"] == f"{record['cri_lo']:.6f}"
        assert entry["display"]["cri_hi"] == f"{record['cri_hi']:.6f}"


def test_regeneration_is_stable(committed):
    from make_ui_fixtures import build_model, golden_payload

    model_doc, golden = committed
    rebuilt = modelio.to_document(
        build_model(), created_at=model_doc["provenance"]["created_at"]
    )
    assert modelio.dumps(rebuilt) == modelio.dumps(model_doc)
    regenerated = golden_payload(modelio.from_document(model_doc))
    assert regenerated["vectors"] == golden["vectors"]
