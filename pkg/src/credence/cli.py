"""Command-line surface: fit, predict, project, simulate, serve.

Exit codes: 0 success, 1 numerical failure (non-convergence, separation,
singular covariance), 2 input error (bad files, bad flags, bad features).
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import modelio
from .data import (
    Dataset,
    TermSpec,
    Transform,
    csv_header,
    load_csv,
    load_feature_csv,
    validate_feature_value,
)
from .decision import treat_decision
from .errors import InputError, NumericalError
from .predict import predict
from .priors import PriorSpec, fit_model
from .projection import ProjectedModel, self_project
from .simulate import (
    parse_scenario_config,
    run_scenario,
    summary_table,
    write_results_csv,
)

MODEL_ENV_VAR = "CREDENCE_MODEL"


def _schema_from_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    terms = []
    for entry in entries:
        transform = entry.get("transform")
        if transform is not None:
            transform = Transform(kind=transform["type"], value=float(transform["value"]))
        terms.append(
            TermSpec(
                name=entry["name"],
                kind=entry.get("kind", "continuous"),
                transform=transform,
            )
        )
    return tuple(terms)


def _default_schema(csv_path, outcome):
    names = [h for h in csv_header(csv_path) if h != outcome]
    return tuple(TermSpec(name) for name in names)


def _prior_spec(args):
    skip = tuple(s for s in (args.logf_skip or "").split(",") if s)
    return PriorSpec(variant=args.prior, m=args.logf_m, skip=skip)


def cmd_fit(args):
    schema = (
        _schema_from_file(args.schema)
        if args.schema
        else _default_schema(args.csv, args.outcome)
    )
    ds = load_csv(args.csv, schema, args.outcome)
    model = fit_model(ds, _prior_spec(args))
    doc = modelio.save_model(model, args.out)
    se = np.sqrt(np.diag(model.sigma))
    names = ["(Intercept)"] + [t.name for t in model.terms]
    print(f"fitted {doc['prior']['variant']} prior on {ds.n} rows "
          f"({int(round(float(np.sum(ds.y))))} events)")
    print(f"{'term':<24} {'estimate':>12} {'se':>12}")
    for name, b, s in zip(names, model.beta, se):
        print(f"{name:<24} {b:>12.4f} {s:>12.4f}")
    if doc["prior"]["variant"] == "logf":
        print(f"log-F m={doc['prior']['m']:g}, "
              f"{doc['provenance']['fit']['augmentation_rows']} augmentation rows")
    if doc["prior"]["variant"] == "ridge":
        print(f"lambda_hat={doc['prior']['lambda_hat']:.6g}, "
              f"var_log_lambda={doc['prior']['var_log_lambda']:.6g}")
    print(f"model written to {args.out}")
    return 0


def _resolve_model_path(args):
    path = args.model or os.environ.get(MODEL_ENV_VAR)
    if not path:
        raise InputError(
            f"no model file given; pass --model or set {MODEL_ENV_VAR}"
        )
    return path


def _parse_inline(text, terms):
    values = {}
    for chunk in text.split(","):
        if "=" not in chunk:
            raise InputError(f"inline features must be name=value, got {chunk!r}")
        name, _, value = chunk.partition("=")
        values[name.strip()] = value.strip()
    return features_from_mapping(values, terms)


def features_from_mapping(mapping, terms):
    """Ordered raw feature vector from a name->value mapping."""
    known = {t.name for t in terms}
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise InputError(f"unknown feature(s): {unknown}")
    missing = sorted(known - set(mapping))
    if missing:
        raise InputError(f"missing feature(s): {missing}")
    return np.array(
        [validate_feature_value(t, mapping[t.name]) for t in terms], dtype=float
    )


def summarize_rows(model, rows, method, level, order=None, projected=None,
                   threshold=None):
    """Shared prediction core used by both the CLI and the HTTP service."""
    out = []
    for row in rows:
        if isinstance(model, ProjectedModel):
            value = float(model.predict_probs(row))
            record = {
                "plug_in": value,
                "post_mean": value,
                "cri_lo": value,
                "cri_hi": value,
                "method": "projected",
            }
        else:
            summary = predict(
                model, row, method=method, level=level, order=order,
                projected_model=projected,
            )
            record = {
                "plug_in": summary.plug_in,
                "post_mean": summary.post_mean,
                "cri_lo": summary.cri[0],
                "cri_hi": summary.cri[1],
                "method": summary.method,
            }
        if threshold is not None:
            record["decision"] = treat_decision(record["post_mean"], threshold)
        out.append(record)
    return out


def cmd_predict(args):
    model = modelio.load_model(_resolve_model_path(args))
    projected = None
    if args.method == "projected":
        if not args.projected_model:
            raise InputError("--method projected requires --projected-model")
        projected = modelio.load_model(args.projected_model)
        if not isinstance(projected, ProjectedModel):
            raise InputError("--projected-model file is not a projected model")
    if args.inline and args.input:
        raise InputError("give either --input CSV or --inline features, not both")
    if args.inline:
        rows = [_parse_inline(args.inline, model.terms)]
    elif args.input:
        rows = load_feature_csv(args.input, model.terms)
    else:
        raise InputError("no input rows; pass --input CSV or --inline features")

    records = summarize_rows(
        model, rows, args.method, args.level, projected=projected,
        threshold=args.threshold,
    )
    fields = ["plug_in", "post_mean", "cri_lo", "cri_hi", "method"]
    if args.threshold is not None:
        fields.append("decision")
    if args.format == "json":
        print(json.dumps(records, indent=2))
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(fields)
        for record in records:
            writer.writerow(
                [record[f] if isinstance(record[f], str) else repr(record[f])
                 for f in fields]
            )
    return 0


def cmd_project(args):
    model = modelio.load_model(_resolve_model_path(args))
    if isinstance(model, ProjectedModel):
        raise InputError("cannot project an already-projected model")
    features = load_feature_csv(args.case_mix, model.terms)
    case_mix = Dataset.from_features(
        features, np.full(len(features), 0.5), model.terms
    )
    terms = [s for s in (args.terms or "").split(",") if s] or None
    projected = self_project(model, case_mix, terms=terms, link=args.link)
    modelio.save_model(projected, args.out)
    print(
        f"projected onto {len(projected.terms)} terms ({projected.link} link); "
        f"mean residual KL = {projected.mean_residual_kl:.6g} nats"
    )
    print(f"projected model written to {args.out}")
    return 0


def cmd_simulate(args):
    cfg = parse_scenario_config(args.config)
    result = run_scenario(cfg, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    results_path = os.path.join(args.out, "results.csv")
    write_results_csv(result, results_path)
    table = summary_table(result)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    print(table)
    print(f"results written to {results_path}")
    return 0


def cmd_serve(args):
    import uvicorn

    from .server import create_app

    doc = modelio.load_document(_resolve_model_path(args))
    app = create_app(doc)
    uvicorn.run(app, host=args.bind, port=args.port, log_level="warning")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="credence",
        description="Bayesian logistic prediction models with deployable "
        "posterior uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model from a CSV")
    p_fit.add_argument("csv")
    p_fit.add_argument("--outcome", required=True)
    p_fit.add_argument("--schema", help="JSON term-spec file")
    p_fit.add_argument(
        "--prior", choices=["flat", "jeffreys", "logf", "ridge"], default="flat"
    )
    p_fit.add_argument("--logf-m", type=float, default=2.0)
    p_fit.add_argument("--logf-skip", help="comma-separated terms to leave unshrunk")
    p_fit.add_argument("--out", default="model.json")
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="predict for rows or inline features")
    p_pred.add_argument("--model")
    p_pred.add_argument("--input", help="CSV of feature rows")
    p_pred.add_argument("--inline", help="name=value,name=value")
    p_pred.add_argument(
        "--method", choices=["quadrature", "mackay", "projected"],
        default="quadrature",
    )
    p_pred.add_argument("--projected-model")
    p_pred.add_argument("--level", type=float, default=0.95)
    p_pred.add_argument("--threshold", type=float)
    p_pred.add_argument("--format", choices=["csv", "json"], default="csv")
    p_pred.set_defaults(func=cmd_predict)

    p_proj = sub.add_parser("project", help="self-project a fitted model")
    p_proj.add_argument("--model")
    p_proj.add_argument("--case-mix", required=True, help="CSV of feature rows")
    p_proj.add_argument("--terms", help="comma-separated term subset")
    p_proj.add_argument("--link", choices=["logit", "identity"], default="logit")
    p_proj.add_argument("--out", default="projected.json")
    p_proj.set_defaults(func=cmd_project)

    p_sim = sub.add_parser("simulate", help="run a synthetic scenario")
    p_sim.add_argument("config")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.set_defaults(func=cmd_simulate)

    p_serve = sub.add_parser("serve", help="serve a model over HTTP")
    p_serve.add_argument("--model")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--bind", default="127.0.0.1")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
