"""Temporal scaling of vortex statistics across a sequence of snapshots.

Freely decaying 2D turbulence develops power-law evolution of its vortex
population once the field has self-organized, so the census statistics
(count, mean absolute circulation, mean enstrophy contribution, mean absolute
peak) are fitted as straight lines in log-log coordinates.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .census import CensusResult, run_census
from .fields import read_field
from .template import TemplateBasis, TemplateSpec, build_template

STATISTICS = ("count", "mean_abs_circulation", "mean_enstrophy", "mean_abs_peak")


@dataclass(frozen=True)
class ScalingFit:
    """Ordinary least squares of log(value) on log(time)."""

    statistic: str
    slope: float
    slope_se: float
    intercept: float
    r2: float
    points: list[tuple[float, float]]


@dataclass(frozen=True)
class SnapshotCensusRow:
    """Census summary of one snapshot; `error` is set when the census failed."""

    time: float
    count: int
    mean_abs_circulation: float
    mean_enstrophy: float
    mean_abs_peak: float
    error: str | None = None

    def value(self, statistic: str) -> float:
        return float(getattr(self, statistic))


def scaling_fit(series: list[tuple[float, float]], statistic: str = "value") -> ScalingFit:
    """Fit a power law to (t, value) pairs; only t > 0, value > 0 enter the fit.

    Returns the slope with its classical OLS standard error, the intercept in
    log space, and R^2. Raises when fewer than three usable points remain.
    """
    usable = [(float(t), float(v)) for t, v in series if t > 0 and v > 0]
    dropped = len(series) - len(usable)
    if dropped:
        warnings.warn(f"{statistic}: dropped {dropped} nonpositive points from log-log fit", stacklevel=2)
    if len(usable) < 3:
        raise ValueError(f"{statistic}: need at least 3 positive points, got {len(usable)}")
    x = np.log([t for t, _ in usable])
    y = np.log([v for _, v in usable])
    n = len(usable)
    x_mean = x.mean()
    sxx = float(np.sum((x - x_mean) ** 2))
    if sxx == 0.0:
        raise ValueError(f"{statistic}: all time values identical; cannot fit a slope")
    slope = float(np.sum((x - x_mean) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x_mean)
    resid = y - (intercept + slope * x)
    rss = float(np.sum(resid**2))
    tss = float(np.sum((y - y.mean()) ** 2))
    sigma2 = rss / (n - 2) if n > 2 else 0.0
    slope_se = float(np.sqrt(sigma2 / sxx))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return ScalingFit(statistic=statistic, slope=slope, slope_se=slope_se, intercept=intercept, r2=r2, points=usable)


def summarize_census(time: float, result: CensusResult) -> SnapshotCensusRow:
    stats = result.field_stats
    return SnapshotCensusRow(
        time=time,
        count=stats.count,
        mean_abs_circulation=stats.mean_abs_circulation,
        mean_enstrophy=stats.mean_enstrophy,
        mean_abs_peak=stats.mean_abs_peak,
    )


def _census_one(args: tuple[str, dict]) -> SnapshotCensusRow:
    path, options = args
    field = read_field(path)
    time = field.time_tag if field.time_tag is not None else float("nan")
    try:
        basis = _worker_basis(field.shape, options)
        result = run_census(
            field,
            basis=basis,
            max_candidates=options["max_candidates"],
            patience=options["patience"],
            ridge_scale=options["ridge_scale"],
            coalesce_radius=options["coalesce_radius"],
            dx=options["dx"],
        )
        return summarize_census(time, result)
    except Exception as exc:  # per-snapshot failures are recorded, not fatal
        return SnapshotCensusRow(time=time, count=0, mean_abs_circulation=0.0, mean_enstrophy=0.0, mean_abs_peak=0.0, error=str(exc))


_BASIS_CACHE: dict[tuple, TemplateBasis] = {}


def _worker_basis(shape: tuple[int, int], options: dict) -> TemplateBasis:
    spec = TemplateSpec(
        eta=options["eta"],
        sigma2=options["sigma2"],
        support=options["support"],
        filter_name=options["filter_name"],
        levels=options["levels"],
    )
    key = (shape, spec.eta, spec.sigma2, spec.support, spec.filter_name, spec.levels)
    basis = _BASIS_CACHE.get(key)
    if basis is None:
        basis = build_template(spec, *shape)
        _BASIS_CACHE[key] = basis
    return basis


def default_census_options(
    spec: TemplateSpec | None = None,
    max_candidates: int = 512,
    patience: int = 5,
    ridge_scale: float = 1e-10,
    coalesce_radius: float = 3.0,
    dx: float = 1.0,
) -> dict:
    spec = spec or TemplateSpec()
    return {
        "eta": spec.eta,
        "sigma2": spec.sigma2,
        "support": spec.support,
        "filter_name": spec.filter_name,
        "levels": spec.levels,
        "max_candidates": max_candidates,
        "patience": patience,
        "ridge_scale": ridge_scale,
        "coalesce_radius": coalesce_radius,
        "dx": dx,
    }


def census_series(
    snapshot_paths: list[str | Path],
    options: dict | None = None,
    workers: int = 1,
) -> list[SnapshotCensusRow]:
    """Census every snapshot independently and tabulate the four statistics.

    Snapshots are processed in the given order (assumed time-ordered);
    `workers` > 1 distributes snapshots across processes. Failures are
    recorded on their row and do not abort the series.
    """
    options = options or default_census_options()
    jobs = [(str(p), options) for p in snapshot_paths]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_census_one, jobs))
    return [_census_one(job) for job in jobs]


def fit_all_statistics(rows: list[SnapshotCensusRow], t_min: float = 0.0) -> dict[str, ScalingFit]:
    """Scaling fits of all four census statistics for rows with t >= t_min."""
    fits = {}
    usable = [r for r in rows if r.error is None and np.isfinite(r.time) and r.time >= t_min]
    for statistic in STATISTICS:
        series = [(r.time, r.value(statistic)) for r in usable]
        fits[statistic] = scaling_fit(series, statistic)
    return fits
