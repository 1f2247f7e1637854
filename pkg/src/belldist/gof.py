"""Goodness-of-fit battery: KS statistic plus binned-histogram SSE/RMSE/R^2.

The KS statistic is bin-free; the histogram metrics compare the density-
normalized histogram against the model density at bin centers and therefore
move with the bin count, which is why both are reported side by side.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from .distributions import DistSpec, Family, SampleBatch
from .errors import DegenerateDataError, DomainError

KS_TWO_SIDED = "two-sided"
KS_ONE_SIDED = "one-sided"
_KS_MODES = (KS_TWO_SIDED, KS_ONE_SIDED)


def ks_statistic(data: SampleBatch, d: DistSpec, mode: str = KS_TWO_SIDED) -> float:
    """Sup distance between the empirical CDF of ``data`` and ``cdf(d, .)``.

    two-sided (default): max over sorted points of both one-sided gaps
    |i/n - F(x_(i))| and |(i-1)/n - F(x_(i))|.
    one-sided: the empirical CDF evaluated at the data points only,
    max_i |F*(x_i) - F(x_i)| with F*(x_i) = #{x_j <= x_i}/n; never exceeds
    the two-sided value.
    """
    if mode not in _KS_MODES:
        raise DomainError(f"ks mode must be one of {_KS_MODES}, got {mode!r}")
    x = np.sort(data.values)
    n = x.size
    f = np.asarray(dist.cdf(d, x))
    if mode == KS_ONE_SIDED:
        ecdf_at = np.searchsorted(x, x, side="right") / n
        return float(np.max(np.abs(ecdf_at - f)))
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(np.abs(hi - f)), np.max(np.abs(lo - f))))


def freedman_diaconis_bins(values: np.ndarray) -> int:
    q75, q25 = np.percentile(values, [75, 25])
    iqr = q75 - q25
    if iqr <= 0:
        return 50
    width = 2.0 * iqr / len(values) ** (1.0 / 3.0)
    span = float(values.max() - values.min())
    return max(2, int(np.ceil(span / width)))


def histogram_fit_metrics(
    data: SampleBatch, d: DistSpec, n_bins: int | str = 50
) -> tuple[float, float, float]:
    """(sse, rmse, r2) of the density histogram against pdf(d, bin centers).

    r2 is the coefficient of determination against the histogram's own mean.
    ``n_bins`` may be an integer >= 2 or "fd" for the Freedman-Diaconis rule.
    """
    values = data.values
    if float(values.max() - values.min()) == 0.0:
        raise DegenerateDataError("histogram metrics require data with spread")
    if n_bins == "fd":
        n_bins = freedman_diaconis_bins(values)
    if not isinstance(n_bins, (int, np.integer)) or n_bins < 2:
        raise DomainError(f"n_bins must be an integer >= 2 or 'fd', got {n_bins!r}")
    heights, edges = np.histogram(values, bins=int(n_bins), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    model = np.asarray(dist.pdf(d, centers))
    sse = float(np.sum((heights - model) ** 2))
    rmse = float(np.sqrt(sse / n_bins))
    denom = float(np.sum((heights - heights.mean()) ** 2))
    r2 = 1.0 - sse / denom if denom > 0 else float("-inf")
    return sse, rmse, r2


@dataclass(frozen=True)
class FitReport:
    family: Family
    params: DistSpec
    ks: float
    sse: float
    rmse: float
    r2: float
    n_bins: int
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "location": self.params.location,
            "scale": self.params.scale,
            "ks": self.ks,
            "sse": self.sse,
            "rmse": self.rmse,
            "r2": self.r2,
            "n_bins": self.n_bins,
            "n_samples": self.n_samples,
        }


def fit_report(
    data: SampleBatch, family: Family, n_bins: int | str = 50, ks_mode: str = KS_TWO_SIDED
) -> FitReport:
    fitted = dist.fit_mle(family, data)
    if n_bins == "fd":
        n_bins = freedman_diaconis_bins(data.values)
    sse, rmse, r2 = histogram_fit_metrics(data, fitted, n_bins)
    return FitReport(
        family=Family(family),
        params=fitted,
        ks=ks_statistic(data, fitted, ks_mode),
        sse=sse,
        rmse=rmse,
        r2=r2,
        n_bins=int(n_bins),
        n_samples=len(data),
    )


def rank_families(
    data: SampleBatch, n_bins: int | str = 50, ks_mode: str = KS_TWO_SIDED
) -> list[FitReport]:
    """Fit all three families by MLE and sort ascending by KS statistic."""
    reports = [fit_report(data, fam, n_bins, ks_mode) for fam in Family]
    return sorted(reports, key=lambda r: r.ks)


def reports_to_json(reports: list[FitReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2)
