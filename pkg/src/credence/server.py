"""Read-only HTTP prediction service over a single immutable model.

Endpoints: GET /health, GET /model, POST /predict, POST /decision.
Malformed or missing features return 400 with per-field messages;
syntactically valid values outside a term's domain return 422.
"""

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import modelio
from .decision import net_benefit, treat_decision
from .predict import (
    credible_interval,
    linear_predictor_dist,
    posterior_density,
    posterior_mean_quadrature,
)
from .projection import ProjectedModel

DENSITY_GRID = np.linspace(0.005, 0.995, 101)


def _validate_features(payload, terms):
    """Split feature validation into malformed (400) and out-of-domain
    (422) families; returns (vector, error-dict, status)."""
    if not isinstance(payload, dict):
        return None, {"features": "must be an object of name: value"}, 400
    malformed = {}
    names = {t.name for t in terms}
    for name in payload:
        if name not in names:
            malformed[name] = "unknown feature"
    values = {}
    for term in terms:
        if term.name not in payload:
            malformed[term.name] = "missing"
            continue
        raw = payload[term.name]
        if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
            malformed[term.name] = "expected a number"
            continue
        try:
            values[term.name] = float(raw)
        except (TypeError, ValueError):
            malformed[term.name] = f"expected a number, got {raw!r}"
    if malformed:
        return None, malformed, 400
    out_of_domain = {}
    vector = []
    for term in terms:
        v = values[term.name]
        if not math.isfinite(v):
            out_of_domain[term.name] = "value must be finite"
            continue
        if term.kind == "binary" and v not in (0.0, 1.0):
            out_of_domain[term.name] = f"binary term accepts only 0 or 1, got {v}"
            continue
        if term.kind == "ordinal" and v != int(v):
            out_of_domain[term.name] = f"ordinal term requires an integer, got {v}"
            continue
        vector.append(v)
    if out_of_domain:
        return None, out_of_domain, 422
    return np.array(vector), None, 200


def _summarize(model, x, level=0.95):
    """Prediction payload for one feature vector (shared by both POST
    endpoints so CLI and HTTP numbers coincide)."""
    if isinstance(model, ProjectedModel):
        value = float(model.predict_probs(x))
        return {
            "plug_in": value,
            "post_mean": value,
            "cri": [value, value],
            "method": "projected",
            "density": None,
            "_dist": None,
        }
    dist = linear_predictor_dist(model, x)
    from .numerics import sigmoid

    plug_in = float(sigmoid(dist.mu))
    post_mean = posterior_mean_quadrature(dist, model.quadrature_k)
    lo, hi = credible_interval(dist, level)
    if dist.sigma > 0:
        dens = posterior_density(dist, DENSITY_GRID)
        density = [[float(p), float(f)] for p, f in zip(DENSITY_GRID, dens)]
    else:
        density = None
    return {
        "plug_in": plug_in,
        "post_mean": post_mean,
        "cri": [lo, hi],
        "method": f"quadrature({model.quadrature_k})",
        "density": density,
        "_dist": dist,
    }


def create_app(document):
    """Build the FastAPI app around one parsed model document."""
    model = modelio.from_document(document)
    app = FastAPI(title="credence model service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/model")
    def get_model():
        return modelio.public_document(document)

    async def _body(request):
        try:
            return await request.json(), None
        except Exception:
            return None, JSONResponse(
                {"errors": {"body": "request body must be JSON"}}, status_code=400
            )

    @app.post("/predict")
    async def predict_endpoint(request: Request):
        body, failure = await _body(request)
        if failure is not None:
            return failure
        if not isinstance(body, dict) or "features" not in body:
            return JSONResponse(
                {"errors": {"features": "missing"}}, status_code=400
            )
        x, errors, status = _validate_features(body["features"], model.terms)
        if errors is not None:
            return JSONResponse({"errors": errors}, status_code=status)
        payload = _summarize(model, x)
        payload.pop("_dist")
        return payload

    @app.post("/decision")
    async def decision_endpoint(request: Request):
        body, failure = await _body(request)
        if failure is not None:
            return failure
        if not isinstance(body, dict) or "features" not in body:
            return JSONResponse(
                {"errors": {"features": "missing"}}, status_code=400
            )
        if "threshold" not in body:
            return JSONResponse(
                {"errors": {"threshold": "missing"}}, status_code=400
            )
        try:
            z = float(body["threshold"])
        except (TypeError, ValueError):
            return JSONResponse(
                {"errors": {"threshold": "expected a number"}}, status_code=400
            )
        if not 0.0 < z < 1.0:
            return JSONResponse(
                {"errors": {"threshold": "must be strictly between 0 and 1"}},
                status_code=422,
            )
        x, errors, status = _validate_features(body["features"], model.terms)
        if errors is not None:
            return JSONResponse({"errors": errors}, status_code=status)
        payload = _summarize(model, x)
        post_mean = payload["post_mean"]
        return {
            "decision": treat_decision(post_mean, z),
            "post_mean": post_mean,
            "net_benefit": net_benefit(post_mean, z),
        }

    return app
