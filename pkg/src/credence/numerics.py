"""Deterministic numeric primitives shared by every other module.

Symmetric linear algebra, Gauss-Hermite rules, Sobol sequences, and the
standard-normal CDF/quantile pair. Everything here is pure except
:class:`SobolSequence`, which owns a mutable index; concurrent workers
should each hold their own instance.
"""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit, ndtr, ndtri
from scipy.stats import qmc

from .errors import DomainError, NotPositiveDefinite, RangeError

__all__ = [
    "cholesky",
    "check_symmetric",
    "gauss_hermite_rule",
    "GaussHermiteRule",
    "SobolSequence",
    "std_normal_cdf",
    "std_normal_quantile",
    "std_normal_pdf",
    "sigmoid",
    "logit",
]

MAX_SOBOL_DIM = 64


def check_symmetric(S, rtol=1e-12):
    """Validate a dense symmetric matrix and return it as float64.

    Relative asymmetry above ``rtol`` raises ValueError.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return S


def cholesky(S):
    """Lower Cholesky factor and log-determinant of a symmetric PD matrix.

    Returns ``(L, logdet)`` with ``L @ L.T == S`` and
    ``logdet == 2 * sum(log(diag(L)))``. Raises
    :class:`NotPositiveDefinite` when a pivot is non-positive, which in a
    fitting context signals separation or a singular design.
    """
    S = check_symmetric(S)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return L, logdet


@dataclass(frozen=True)
class GaussHermiteRule:
    """Nodes and weights for integration against exp(-x^2).

    Nodes are symmetric about 0 and strictly increasing; weights sum to
    sqrt(pi).
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def _gauss_hermite_cached(order):
    # Golub-Welsch: eigen-decompose the Jacobi matrix of the Hermite
    # recurrence (off-diagonal sqrt(j/2)); weights come from the squared
    # first eigenvector components scaled by the zeroth moment sqrt(pi).
    j = np.arange(1, order, dtype=float)
    jacobi = np.diag(np.sqrt(j / 2.0), k=1)
    jacobi = jacobi + jacobi.T
    nodes, vecs = np.linalg.eigh(jacobi)
    weights = np.sqrt(np.pi) * vecs[0, :] ** 2
    if order % 2 == 1:
        nodes[order // 2] = 0.0
    # enforce exact symmetry of the node set
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GaussHermiteRule(order=order, nodes=nodes, weights=weights)


def gauss_hermite_rule(order):
    """Gauss-Hermite rule of the given order, exact for polynomials of
    degree <= 2*order - 1 under the exp(-x^2) weight.

    Orders outside [1, 100] raise RangeError.
    """
    if not 1 <= order <= 100:
        raise RangeError(f"Gauss-Hermite order must be in [1, 100], got {order}")
    return _gauss_hermite_cached(int(order))


class SobolSequence:
    """Stateful Sobol low-discrepancy stream over [0, 1)^d.

    Uses the Joe-Kuo direction numbers shipped with scipy. The all-zeros
    initial point of the unscrambled sequence is skipped by default
    because downstream binarization thresholds degenerate there. Passing
    ``scramble_seed`` yields an Owen-scrambled stream (still deterministic
    for a fixed seed); the zero point does not arise there so no skipping
    occurs.
    """

    def __init__(self, dimension, skip_zero=True, scramble_seed=None):
        if not 1 <= dimension <= MAX_SOBOL_DIM:
            raise RangeError(
                f"Sobol dimension must be in [1, {MAX_SOBOL_DIM}], got {dimension}"
            )
        self.dimension = int(dimension)
        self._scrambled = scramble_seed is not None
        if self._scrambled:
            self._engine = qmc.Sobol(
                d=self.dimension, scramble=True, seed=int(scramble_seed)
            )
        else:
            self._engine = qmc.Sobol(d=self.dimension, scramble=False)
        self.index = 0
        if skip_zero and not self._scrambled:
            self._engine.fast_forward(1)

    def next(self):
        """Emit the next point and advance the stream."""
        return self.take(1)[0]

    def take(self, n):
        """Emit the next ``n`` points as an (n, d) array."""
        if n < 0:
            raise ValueError("n must be non-negative")
        with warnings.catch_warnings():
            # scipy reminds that non-power-of-2 blocks lose balance
            # properties; consumers here use running streams on purpose.
            warnings.simplefilter("ignore", UserWarning)
            block = self._engine.random(int(n))
        self.index += int(n)
        return block


def std_normal_cdf(x):
    """Standard normal CDF (erfc-based; absolute error well below 1e-12)."""
    return ndtr(x)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("normal quantile requires 0 < p < 1")
    return ndtri(p)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def sigmoid(x):
    """Numerically stable inverse logit; saturates instead of overflowing."""
    return expit(x)


def logit(p):
    """log(p / (1 - p)) for p strictly inside (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("logit requires 0 < p < 1")
    with np.errstate(divide="ignore"):
        out = np.log(p_arr / (1.0 - p_arr))
    if np.isscalar(p) or np.ndim(p) == 0:
        return float(out)
    return out
