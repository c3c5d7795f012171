"""
Crowd-performance measures of a population snapshot

Collective error and group diversity are evaluated on log-opinions, the wisdom
indicator on the raw opinions. All functions are pure.
"""
from dataclasses import dataclass
import math

import numpy as np

from wisdomsim.errors import MetricDomainError


@dataclass(frozen=True)
class CrowdMetrics:
    """Collective error, group diversity and wisdom indicator of one snapshot"""

    collective_error: float
    group_diversity: float
    wisdom_indicator: int
    arithmetic_mean_raw: float
    geometric_mean_raw: float


def _positive_vector(opinions) -> np.ndarray:
    values = np.asarray(opinions, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise MetricDomainError(f"expected a non-empty vector of opinions, got shape {values.shape}")
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise MetricDomainError("opinions must be finite and strictly positive")
    return values


def _positive_truth(truth: float) -> float:
    if not (math.isfinite(truth) and truth > 0.0):
        raise MetricDomainError(f"truth must be finite and strictly positive, got {truth!r}")
    return float(truth)


def collective_error(opinions, truth: float) -> float:
    """Squared distance between ln(truth) and the mean log-opinion"""
    logs = np.log(_positive_vector(opinions))
    return float((math.log(_positive_truth(truth)) - logs.mean()) ** 2)


def group_diversity(opinions) -> float:
    """Population (1/N) variance of the log-opinions"""
    logs = np.log(_positive_vector(opinions))
    return float(np.var(logs))


def wisdom_indicator(opinions, truth: float) -> int:
    """
    Depth of the central order statistics that still bracket the truth

    With x_hat the opinions sorted ascending (1-based), returns the largest
    i <= N // 2 with x_hat[i] <= truth <= x_hat[N - i + 1], or 0 when the truth
    lies outside the range of opinions.

    The bracket condition holds for i exactly when at least i opinions are
    <= truth and at least i opinions are >= truth, so two binary searches on
    the sorted vector replace the scan over i.
    """
    values = np.asarray(opinions, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise MetricDomainError(f"expected a non-empty vector of opinions, got shape {values.shape}")
    ranked = np.sort(values, kind="stable")
    n = ranked.size
    at_or_below = int(np.searchsorted(ranked, truth, side="right"))
    at_or_above = n - int(np.searchsorted(ranked, truth, side="left"))
    return min(at_or_below, at_or_above, n // 2)


def evaluate(opinions, truth: float) -> CrowdMetrics:
    """All crowd measures of one snapshot against the truth"""
    values = _positive_vector(opinions)
    log_truth = math.log(_positive_truth(truth))
    logs = np.log(values)
    mean_log = float(logs.mean())
    am = float(values.mean())
    # exp(mean(log x)) can land one ulp above mean(x) when all opinions are equal
    gm = min(math.exp(mean_log), am)
    return CrowdMetrics(
        collective_error=(log_truth - mean_log) ** 2,
        group_diversity=float(np.var(logs)),
        wisdom_indicator=wisdom_indicator(values, truth),
        arithmetic_mean_raw=am,
        geometric_mean_raw=gm,
    )
