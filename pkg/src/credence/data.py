"""Dataset representation, CSV ingestion, term transforms, standardization.

A :class:`Dataset` stores the design matrix with an explicit all-ones
intercept column, soft-label responses in [0, 1], and positive observation
weights. Instances are immutable after construction and safe to share.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConstantPredictor,
    DimensionMismatch,
    EmptyDataset,
    MissingColumn,
    ParseError,
    RangeError,
)

VALID_KINDS = ("continuous", "binary", "ordinal")


@dataclass(frozen=True)
class Transform:
    """Value transform attached to a term: cap_above(c) or cap_below(c)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("cap_above", "cap_below"):
            raise ValueError(f"unknown transform {self.kind!r}")
        if not math.isfinite(self.value):
            raise ValueError("transform parameter must be finite")

    def apply(self, x):
        if self.kind == "cap_above":
            return np.minimum(x, self.value)
        return np.maximum(x, self.value)


@dataclass(frozen=True)
class TermSpec:
    name: str
    kind: str = "continuous"
    transform: Optional[Transform] = None

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValueError(f"term kind must be one of {VALID_KINDS}, got {self.kind!r}")

    def apply_transform(self, x):
        return self.transform.apply(x) if self.transform is not None else x


def check_unique_names(terms):
    names = [t.name for t in terms]
    if len(set(names)) != len(names):
        raise ValueError("term names must be unique within a model")
    return tuple(terms)


@dataclass(frozen=True)
class Dataset:
    """Design matrix (first column all-ones), responses, weights, terms.

    Responses may be soft labels anywhere in [0, 1]; weights default to 1.
    """

    X: np.ndarray
    y: np.ndarray
    terms: tuple
    w: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        w = self.w
        w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)
        if X.ndim != 2:
            raise DimensionMismatch("design matrix must be 2-D")
        n, cols = X.shape
        if cols != len(self.terms) + 1:
            raise DimensionMismatch(
                f"design has {cols} columns but {len(self.terms)} terms + intercept expected"
            )
        if len(y) != n or len(w) != n:
            raise DimensionMismatch("responses/weights length does not match design rows")
        if n == 0:
            raise EmptyDataset("dataset has no rows")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise RangeError("dataset contains non-finite values")
        if not np.allclose(X[:, 0], 1.0):
            raise DimensionMismatch("first design column must be the all-ones intercept")
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise RangeError("responses must lie in [0, 1]")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise RangeError("weights must be positive and finite")
        check_unique_names(self.terms)
        X.setflags(write=False)
        y.setflags(write=False)
        w.setflags(write=False)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        """Number of non-intercept terms."""
        return self.X.shape[1] - 1

    @classmethod
    def from_features(cls, features, y, terms, w=None):
        """Build a dataset from a raw (n, p) feature matrix, applying each
        term's transform and prepending the intercept column."""
        F = np.asarray(features, dtype=float)
        if F.ndim == 1:
            F = F.reshape(-1, 1)
        if F.shape[1] != len(terms):
            raise DimensionMismatch(
                f"feature matrix has {F.shape[1]} columns for {len(terms)} terms"
            )
        cols = [np.ones(F.shape[0])]
        for j, term in enumerate(terms):
            cols.append(term.apply_transform(F[:, j]))
        return cls(X=np.column_stack(cols), y=y, terms=tuple(terms), w=w)

    def with_responses(self, y):
        return Dataset(X=self.X, y=y, terms=self.terms, w=self.w)

    def select_terms(self, names):
        """Sub-dataset restricted to the named terms (order preserved)."""
        index = {t.name: j for j, t in enumerate(self.terms)}
        missing = [n for n in names if n not in index]
        if missing:
            raise MissingColumn(f"terms not in dataset: {missing}")
        keep = [index[n] for n in names]
        X = np.column_stack([self.X[:, 0]] + [self.X[:, j + 1] for j in keep])
        return Dataset(X=X, y=self.y, terms=tuple(self.terms[j] for j in keep), w=self.w)


def _read_numeric_columns(path, wanted):
    """Extract named numeric columns from a header-first CSV; row-indexed
    errors for missing cells and non-numeric values."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        header = [h.strip() for h in header]
        positions = {}
        for name in wanted:
            if name not in header:
                raise MissingColumn(f"column {name!r} not found in {path}")
            positions[name] = header.index(name)

        raw_rows = []
        for row_number, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            values = []
            for name in wanted:
                idx = positions[name]
                cell = row[idx].strip() if idx < len(row) else ""
                if cell == "":
                    raise ParseError(f"missing value in column {name!r}", row=row_number)
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"non-numeric value {cell!r} in column {name!r}", row=row_number
                    ) from None
            raw_rows.append(values)

    if not raw_rows:
        raise EmptyDataset(f"{path} has a header but no data rows")
    return np.asarray(raw_rows, dtype=float)


def csv_header(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        try:
            header = next(csv.reader(fh))
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
    return [h.strip() for h in header]


def load_feature_csv(path, schema):
    """Raw (untransformed) feature matrix for the schema's columns."""
    schema = check_unique_names(schema)
    return _read_numeric_columns(path, [t.name for t in schema])


def validate_feature_value(term, value):
    """Domain-check one raw feature value for a term; returns the float.

    Binary terms accept only 0/1, ordinal terms only integers; every kind
    requires a finite number.
    """
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise RangeError(f"{term.name}: expected a number, got {value!r}") from None
    if not math.isfinite(v):
        raise RangeError(f"{term.name}: value must be finite")
    if term.kind == "binary" and v not in (0.0, 1.0):
        raise RangeError(f"{term.name}: binary term accepts only 0 or 1, got {v}")
    if term.kind == "ordinal" and v != int(v):
        raise RangeError(f"{term.name}: ordinal term requires an integer, got {v}")
    return v


def load_csv(path, schema, outcome, weight_column=None):
    """Read a UTF-8, comma-separated, header-first CSV into a Dataset.

    ``schema`` is the ordered list of TermSpecs to extract; transforms are
    applied here. The outcome column must hold values in [0, 1]. Missing
    values and non-numeric cells raise row-indexed ParseErrors.
    """
    schema = check_unique_names(schema)
    wanted = [t.name for t in schema] + [outcome]
    if weight_column is not None:
        wanted.append(weight_column)
    data = _read_numeric_columns(path, wanted)
    p = len(schema)
    features = data[:, :p]
    y = data[:, p]
    if np.any(y < 0.0) or np.any(y > 1.0):
        bad = int(np.argmax((y < 0.0) | (y > 1.0)))
        raise RangeError(
            f"outcome column {outcome!r} holds {y[bad]} at data row {bad + 1}; "
            "expected a value in [0, 1]"
        )
    w = data[:, p + 1] if weight_column is not None else None
    return Dataset.from_features(features, y, schema, w=w)


@dataclass(frozen=True)
class Standardization:
    """Per-column center/scale for the non-intercept design columns.

    Scale is the sample standard deviation (n-1 divisor); this convention
    is fixed and matches common penalized-regression practice.
    """

    center: np.ndarray
    scale: np.ndarray

    def apply(self, X):
        """Standardize a design matrix (intercept column untouched)."""
        Z = np.array(X, dtype=float)
        Z[:, 1:] = (Z[:, 1:] - self.center) / self.scale
        return Z

    def invert(self, Z):
        X = np.array(Z, dtype=float)
        X[:, 1:] = X[:, 1:] * self.scale + self.center
        return X

    def coefficient_map(self):
        """Matrix A with beta_natural = A @ beta_standardized (and
        Sigma_natural = A Sigma_standardized A^T)."""
        p = len(self.scale)
        A = np.zeros((p + 1, p + 1))
        A[0, 0] = 1.0
        A[0, 1:] = -self.center / self.scale
        A[1:, 1:] = np.diag(1.0 / self.scale)
        return A


def standardize(ds):
    """Center and scale each non-intercept column to mean 0, SD 1.

    Returns the standardized dataset and the Standardization record.
    Constant columns raise ConstantPredictor.
    """
    body = ds.X[:, 1:]
    center = body.mean(axis=0)
    scale = body.std(axis=0, ddof=1)
    for j, s in enumerate(scale):
        if not s > 0.0:
            raise ConstantPredictor(
                f"term {ds.terms[j].name!r} is constant; cannot standardize"
            )
    record = Standardization(center=center, scale=scale)
    Z = record.apply(ds.X)
    out = Dataset(X=Z, y=ds.y, terms=ds.terms, w=ds.w)
    return out, record
