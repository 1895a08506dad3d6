"""Expected-utility layer: net benefit and the threshold treatment rule.

Treatment utilities enter only through the threshold
z = (u00 - u10) / (u00 - u10 + u11 - u01); treating exactly those whose
expected outcome probability is at least z maximizes expected utility.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RangeError, UndefinedMetric


@dataclass(frozen=True)
class Threshold:
    z: float

    def __post_init__(self):
        if not 0.0 < self.z < 1.0:
            raise RangeError(f"threshold must be in (0, 1), got {self.z}")


def _z(threshold):
    if isinstance(threshold, Threshold):
        return threshold.z
    return Threshold(float(threshold)).z


def threshold_from_utilities(u00, u01, u10, u11):
    """Reduce a 2x2 utility table to its decision threshold.

    Requires the natural ordering u11 > u01 (treatment helps those with
    the outcome) and u00 > u10 (treatment harms those without).
    """
    if not (u11 > u01 and u00 > u10):
        raise RangeError("utilities must satisfy u11 > u01 and u00 > u10")
    return Threshold((u00 - u10) / (u00 - u10 + u11 - u01))


def net_benefit(pi, threshold):
    """NB(pi) = (pi - z) / (1 - z); linear in pi, zero at pi = z."""
    z = _z(threshold)
    pi = np.asarray(pi, dtype=float)
    out = (pi - z) / (1.0 - z)
    return float(out) if out.ndim == 0 else out


def treat_decision(post_mean, threshold):
    """'treat' iff the posterior-mean probability is >= z (ties treat)."""
    return "treat" if post_mean >= _z(threshold) else "no-treat"


def snb(predictions, reference, threshold):
    """Standardized incremental net benefit of a treat-if-predicted-risk-
    exceeds-z policy, against labels or true probabilities.

    (NB_model - max(NB_treat_all, 0)) / mean(reference). Using true
    probabilities as the reference integrates out Bernoulli noise.
    """
    z = _z(threshold)
    pi = np.asarray(predictions, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if pi.shape != ref.shape:
        raise RangeError("predictions and reference must have equal length")
    if np.any(ref < 0.0) or np.any(ref > 1.0):
        raise RangeError("reference values must lie in [0, 1]")
    prevalence = float(np.mean(ref))
    if prevalence == 0.0:
        raise UndefinedMetric("sNB undefined at zero prevalence")
    odds = z / (1.0 - z)
    per_row = ref - odds * (1.0 - ref)
    nb_model = float(np.mean(np.where(pi >= z, per_row, 0.0)))
    nb_treat_all = float(np.mean(per_row))
    nb_default = max(nb_treat_all, 0.0)
    return (nb_model - nb_default) / prevalence
