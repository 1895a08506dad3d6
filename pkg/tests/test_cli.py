import json
import os

import numpy as np
import pytest

from credence import modelio
from credence.cli import main
from credence.data import TermSpec
from credence.numerics import sigmoid
from credence.priors import PackagedModel


@pytest.fixture
def fixture_csv(tmp_path, rng):
    n = 400
    age = rng.normal(60, 10, n)
    bp = rng.normal(105, 12, n)
    prev = (rng.random(n) < 0.25).astype(float)
    eta = -4.6 + 0.07 * age + 0.9 * prev - 0.02 * np.minimum(bp, 100.0)
    y = (rng.random(n) < sigmoid(eta)).astype(int)
    path = tmp_path / "cohort.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("age,bp,prev_mi,died\n")
        for row in zip(age, bp, prev, y):
            fh.write(",".join(str(v) for v in row) + "\n")
    schema = tmp_path / "schema.json"
    schema.write_text(
        json.dumps(
            [
                {"name": "age"},
                {"name": "bp", "transform": {"type": "cap_above", "value": 100.0}},
                {"name": "prev_mi", "kind": "binary"},
            ]
        ),
        encoding="utf-8",
    )
    return str(path), str(schema)


def fit_fixture_model(tmp_path, fixture_csv, prior="flat", extra=()):
    csv_path, schema_path = fixture_csv
    out = str(tmp_path / f"model_{prior}.json")
    code = main(
        ["fit", csv_path, "--outcome", "died", "--schema", schema_path,
         "--prior", prior, "--out", out, *extra]
    )
    assert code == 0
    return out


class TestFit:
    @pytest.mark.parametrize("prior", ["flat", "jeffreys", "logf", "ridge"])
    def test_fits_each_prior(self, tmp_path, fixture_csv, prior, capsys):
        out = fit_fixture_model(tmp_path, fixture_csv, prior)
        doc = modelio.load_document(out)
        assert doc["prior"]["variant"] == prior
        printed = capsys.readouterr().out
        assert "(Intercept)" in printed and "estimate" in printed

    def test_logf_diagnostics_record_augmentation(self, tmp_path, fixture_csv):
        out = fit_fixture_model(
            tmp_path, fixture_csv, "logf", extra=["--logf-m", "2"]
        )
        doc = modelio.load_document(out)
        # two pseudo-rows per penalised term, three terms penalised
        assert doc["provenance"]["fit"]["augmentation_rows"] == 6
        assert doc["prior"]["m"] == 2.0

    def test_malformed_csv_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("age,died\n50,zero\n", encoding="utf-8")
        code = main(["fit", str(bad), "--outcome", "died"])
        assert code == 2
        assert "row 2" in capsys.readouterr().err

    def test_separated_data_exit_1_with_hint(self, tmp_path, capsys):
        path = tmp_path / "sep.csv"
        rows = ["x,y"] + [f"{v},{int(v > 0)}" for v in
                          np.linspace(-2, 2, 40).round(3) if abs(v) > 0.1]
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        code = main(["fit", str(path), "--outcome", "y", "--prior", "flat"])
        assert code == 1
        assert "jeffreys" in capsys.readouterr().err


class TestModelDocument:
    def test_round_trip_byte_identical(self, tmp_path, fixture_csv):
        out = fit_fixture_model(tmp_path, fixture_csv, "ridge")
        with open(out, "r", encoding="utf-8") as fh:
            text = fh.read()
        doc = modelio.loads(text)
        assert modelio.dumps(doc) == text

    def test_sigma_reconstructs_positive_definite(self, tmp_path, fixture_csv):
        out = fit_fixture_model(tmp_path, fixture_csv, "flat")
        model = modelio.load_model(out)
        assert isinstance(model, PackagedModel)
        np.linalg.cholesky(model.sigma)

    def test_schema_version_checked(self, tmp_path, fixture_csv):
        out = fit_fixture_model(tmp_path, fixture_csv, "flat")
        doc = modelio.load_document(out)
        doc["schema_version"] = "99"
        from credence.errors import ParseError

        with pytest.raises(ParseError):
            modelio.from_document(doc)


class TestPredict:
    def test_inline_with_threshold(self, tmp_path, fixture_csv, capsys):
        out = fit_fixture_model(tmp_path, fixture_csv, "flat")
        capsys.readouterr()  # drop the fit output
        code = main(
            ["predict", "--model", out,
             "--inline", "age=61,bp=120,prev_mi=0", "--threshold", "0.05"]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "plug_in,post_mean,cri_lo,cri_hi,method,decision"
        fields = lines[1].split(",")
        assert fields[5] in ("treat", "no-treat")

    def test_env_var_model_path(self, tmp_path, fixture_csv, capsys, monkeypatch):
        out = fit_fixture_model(tmp_path, fixture_csv, "flat")
        monkeypatch.setenv("CREDENCE_MODEL", out)
        code = main(["predict", "--inline", "age=61,bp=120,prev_mi=0"])
        assert code == 0

    def test_sigma_zero_model_pm_equals_plug_in(self, tmp_path, capsys):
        capsys.readouterr()
        terms = (TermSpec("x"),)
        model = PackagedModel(
            terms=terms, beta=np.array([-1.0, 0.5]), sigma=np.zeros((2, 2)),
            prior={"variant": "flat"},
        )
        path = str(tmp_path / "zero.json")
        modelio.save_model(model, path)
        code = main(["predict", "--model", path, "--inline", "x=2"])
        assert code == 0
        line = capsys.readouterr().out.strip().splitlines()[1].split(",")
        assert float(line[0]) == float(line[1]) == pytest.approx(sigmoid(0.0))

    def test_unit_normal_cri(self, tmp_path, capsys):
        # intercept-only model with eta ~ N(0, 1): the 95% interval is
        # invlogit(-/+1.95996)
        model = PackagedModel(
            terms=(), beta=np.array([0.0]), sigma=np.array([[1.0]]),
            prior={"variant": "flat"},
        )
        path = str(tmp_path / "unit.json")
        modelio.save_model(model, path)
        code = main(
            ["predict", "--model", path, "--input", _empty_features_csv(tmp_path)]
        )
        assert code == 0
        line = capsys.readouterr().out.strip().splitlines()[1].split(",")
        assert float(line[2]) == pytest.approx(0.12341, abs=1e-4)
        assert float(line[3]) == pytest.approx(0.87659, abs=1e-4)

    def test_threshold_tie_treats(self, tmp_path, fixture_csv, capsys):
        out = fit_fixture_model(tmp_path, fixture_csv, "flat")
        capsys.readouterr()
        code = main(["predict", "--model", out,
                     "--inline", "age=61,bp=120,prev_mi=0", "--format", "json"])
        assert code == 0
        pm = json.loads(capsys.readouterr().out)[0]["post_mean"]
        main(["predict", "--model", out, "--inline", "age=61,bp=120,prev_mi=0",
              "--threshold", repr(pm), "--format", "json"])
        decision = json.loads(capsys.readouterr().out)[0]["decision"]
        assert decision == "treat"

    def test_wrong_feature_exit_2(self, tmp_path, fixture_csv, capsys):
        out = fit_fixture_model(tmp_path, fixture_csv, "flat")
        assert main(["predict", "--model", out, "--inline", "age=61"]) == 2
        assert "missing" in capsys.readouterr().err

    def test_batch_csv_order_preserved(self, tmp_path, fixture_csv, capsys):
        out = fit_fixture_model(tmp_path, fixture_csv, "flat")
        capsys.readouterr()
        rows = tmp_path / "rows.csv"
        rows.write_text(
            "age,bp,prev_mi\n50,100,0\n60,100,0\n70,100,0\n", encoding="utf-8"
        )
        code = main(["predict", "--model", out, "--input", str(rows)])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()[1:]
        plug_ins = [float(l.split(",")[0]) for l in lines]
        assert plug_ins == sorted(plug_ins)  # age increases risk in fixture


def _empty_features_csv(tmp_path):
    path = tmp_path / "norow.csv"
    path.write_text("_\n0\n", encoding="utf-8")
    return str(path)


class TestProject:
    def test_project_and_predict_via_projected(self, tmp_path, fixture_csv,
                                               capsys):
        csv_path, _ = fixture_csv
        model_path = fit_fixture_model(tmp_path, fixture_csv, "flat")
        proj_path = str(tmp_path / "projected.json")
        code = main(["project", "--model", model_path, "--case-mix", csv_path,
                     "--out", proj_path])
        assert code == 0
        doc = modelio.load_document(proj_path)
        assert doc["prior"]["variant"] == "projected"
        assert doc["prior"]["mean_residual_kl"] >= 0.0
        capsys.readouterr()
        code = main(["predict", "--model", model_path, "--method", "projected",
                     "--projected-model", proj_path,
                     "--inline", "age=61,bp=120,prev_mi=0", "--format", "json"])
        assert code == 0
        record = json.loads(capsys.readouterr().out)[0]
        assert record["method"] == "projected"

    def test_projected_method_requires_file(self, tmp_path, fixture_csv):
        model_path = fit_fixture_model(tmp_path, fixture_csv, "flat")
        code = main(["predict", "--model", model_path, "--method", "projected",
                     "--inline", "age=61,bp=120,prev_mi=0"])
        assert code == 2

    def test_subset_projection(self, tmp_path, fixture_csv, capsys):
        csv_path, _ = fixture_csv
        model_path = fit_fixture_model(tmp_path, fixture_csv, "flat")
        proj_path = str(tmp_path / "sub.json")
        code = main(["project", "--model", model_path, "--case-mix", csv_path,
                     "--terms", "age,prev_mi", "--out", proj_path])
        assert code == 0
        doc = modelio.load_document(proj_path)
        assert [t["name"] for t in doc["terms"]] == ["age", "prev_mi"]


class TestSimulateCommand:
    def test_end_to_end(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text(
            "true_predictors = 3\ncandidate_predictors = 3\n"
            "prevalence = 0.2\nepv = 8\nreplicates = 2\n"
            "population_size = 1500\nmaster_seed = 21\n",
            encoding="utf-8",
        )
        out_dir = str(tmp_path / "results")
        code = main(["simulate", str(cfg), "--out", out_dir])
        assert code == 0
        assert os.path.exists(os.path.join(out_dir, "results.csv"))
        assert os.path.exists(os.path.join(out_dir, "summary.txt"))
        assert "pm_quadrature" in capsys.readouterr().out

    def test_config_error_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense == 3\n", encoding="utf-8")
        assert main(["simulate", str(cfg), "--out", str(tmp_path / "o")]) == 2
