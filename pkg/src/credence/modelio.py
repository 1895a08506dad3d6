"""JSON model-exchange format.

A model document is the only export format: schema version, link, ordered
term specs, full-precision coefficients, the lower triangle of the
covariance matrix (row-major), prior metadata, quadrature order, and
provenance. Serialization is stable: serialize -> parse -> serialize is
byte-identical (floats use shortest round-trip decimal form).
"""

import json
from datetime import datetime, timezone

import numpy as np

from .data import TermSpec, Transform
from .errors import ParseError
from .priors import PackagedModel
from .projection import ProjectedModel

SCHEMA_VERSION = "1"
SOFTWARE = "credence 0.1.0"


def _term_to_json(term):
    transform = None
    if term.transform is not None:
        transform = {"type": term.transform.kind, "value": term.transform.value}
    return {"name": term.name, "kind": term.kind, "transform": transform}


def _term_from_json(obj):
    transform = obj.get("transform")
    if transform is not None:
        transform = Transform(kind=transform["type"], value=float(transform["value"]))
    return TermSpec(name=obj["name"], kind=obj.get("kind", "continuous"),
                    transform=transform)


def _lower_triangle(sigma):
    out = []
    for i in range(sigma.shape[0]):
        out.extend(float(v) for v in sigma[i, : i + 1])
    return out


def _from_lower_triangle(values, dim):
    expected = dim * (dim + 1) // 2
    if len(values) != expected:
        raise ParseError(
            f"sigma lower triangle has {len(values)} entries, expected {expected}"
        )
    sigma = np.zeros((dim, dim))
    k = 0
    for i in range(dim):
        for j in range(i + 1):
            sigma[i, j] = values[k]
            sigma[j, i] = values[k]
            k += 1
    return sigma


def to_document(model, created_at=None):
    """Build the JSON-ready dict for a packaged or projected model."""
    created = created_at or datetime.now(timezone.utc).isoformat(timespec="seconds")
    if isinstance(model, ProjectedModel):
        dim = len(model.beta)
        prior = {
            "variant": "projected",
            "source_fingerprint": model.source_fingerprint,
            "mean_residual_kl": float(model.mean_residual_kl),
            "source_indices": list(model.source_indices),
        }
        return {
            "schema_version": SCHEMA_VERSION,
            "link": model.link,
            "terms": [_term_to_json(t) for t in model.terms],
            "beta": [float(b) for b in model.beta],
            "sigma": _lower_triangle(np.zeros((dim, dim))),
            "prior": prior,
            "quadrature_k": 30,
            "provenance": {
                "created_at": created,
                "software": SOFTWARE,
                "fit": {},
            },
        }
    prior = dict(model.prior)
    if model.standardization is not None:
        prior["standardization"] = {
            "center": [float(c) for c in model.standardization.center],
            "scale": [float(s) for s in model.standardization.scale],
        }
    return {
        "schema_version": model.schema_version,
        "link": model.link,
        "terms": [_term_to_json(t) for t in model.terms],
        "beta": [float(b) for b in model.beta],
        "sigma": _lower_triangle(model.sigma),
        "prior": prior,
        "quadrature_k": int(model.quadrature_k),
        "provenance": {
            "created_at": created,
            "software": SOFTWARE,
            "fit": dict(model.diagnostics),
        },
    }


def from_document(doc):
    """Reconstruct a PackagedModel or ProjectedModel from a document."""
    if not isinstance(doc, dict):
        raise ParseError("model document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})"
        )
    try:
        terms = tuple(_term_from_json(t) for t in doc["terms"])
        beta = np.asarray([float(b) for b in doc["beta"]], dtype=float)
        prior = dict(doc["prior"])
        link = doc["link"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model document: {exc}") from exc
    if len(beta) != len(terms) + 1:
        raise ParseError("beta length must equal number of terms + 1")
    if prior.get("variant") == "projected":
        indices = tuple(int(i) for i in prior.get("source_indices", range(len(terms))))
        return ProjectedModel(
            terms=terms,
            beta=beta,
            link=link,
            source_fingerprint=prior.get("source_fingerprint", ""),
            mean_residual_kl=float(prior.get("mean_residual_kl", 0.0)),
            source_indices=indices,
        )
    sigma = _from_lower_triangle([float(v) for v in doc["sigma"]], len(beta))
    return PackagedModel(
        terms=terms,
        beta=beta,
        sigma=sigma,
        prior=prior,
        link=link,
        quadrature_k=int(doc.get("quadrature_k", 30)),
        diagnostics=dict(doc.get("provenance", {}).get("fit", {})),
    )


def dumps(doc):
    """Stable serialization (fixed key order, 2-space indent, newline)."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc


def save_model(model, path, created_at=None):
    doc = to_document(model, created_at=created_at)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))
    return doc


def load_document(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def load_model(path):
    return from_document(load_document(path))


def public_document(doc):
    """Served view of a document: provenance without fit internals."""
    out = dict(doc)
    provenance = dict(doc.get("provenance", {}))
    provenance.pop("fit", None)
    out["provenance"] = provenance
    return out
