import numpy as np
import pytest

from credence.data import Dataset, TermSpec
from credence.numerics import sigmoid


def make_dataset(n=200, p=5, beta=None, seed=0, prevalence_intercept=-1.5):
    """Synthetic logistic dataset with standard-normal predictors."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    if beta is None:
        beta = rng.normal(scale=0.5, size=p)
    eta = prevalence_intercept + X @ np.asarray(beta)
    y = (rng.random(n) < sigmoid(eta)).astype(float)
    terms = tuple(TermSpec(f"x{j + 1}") for j in range(p))
    return Dataset.from_features(X, y, terms)


def intercept_only(y):
    y = np.asarray(y, dtype=float)
    return Dataset(X=np.ones((len(y), 1)), y=y, terms=())


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)
