"""Forecast verification: MAE/RMSE/CRPS, PIT histograms, sharpness, diagnostics.

Scores are reported per calendar month of the valid time and overall;
overall values are the sample-weighted aggregates of the monthly cells
(pooled squared errors for RMSE), so the two views are consistent by
construction. Probabilistic scores (CRPS, PIT, interval width) cover the
records that carry a distribution; point scores cover every record with a
usable point forecast and observation. By default fallback records are
scored too, which matches the headline treatment of full test samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyReportError, InvalidInputError
from .forecast import ForecastRecord
from .model import ModelData, _shift, _lead
from .predictive import cdf_values, crps_values, quantile_values
from .timeutil import format_month, month_index


@dataclass
class ScoreReport:
    """Verification scores for one (station, variant, horizon) cell."""

    station: str
    variant: str
    horizon: int
    months: tuple  # month indices (months since 1970-01), sorted
    n_by_month: np.ndarray
    mae_by_month: np.ndarray
    rmse_by_month: np.ndarray
    crps_by_month: np.ndarray
    width_by_month: np.ndarray
    n_scored: int
    mae: float
    rmse: float
    n_prob: int
    crps: float
    mean_width: float
    interval_level: float
    pit_counts: np.ndarray
    n_fallback: int


def score(
    records: Sequence[ForecastRecord],
    variant: str,
    pit_bins: int = 10,
    interval_level: float = 0.90,
    include_fallbacks: bool = True,
) -> ScoreReport:
    """Score a homogeneous set of records (one station and horizon)."""
    if not records:
        raise EmptyReportError("no forecast records to score")
    stations = {r.station for r in records}
    horizons = {r.horizon for r in records}
    if len(stations) > 1 or len(horizons) > 1:
        raise InvalidInputError("score() expects records for one station and horizon")
    if not include_fallbacks:
        records = [r for r in records if not r.fallback]

    usable = [r for r in records if math.isfinite(r.observed) and math.isfinite(r.point)]
    if not usable:
        raise EmptyReportError("no records with both a point forecast and an observation")

    obs = np.array([r.observed for r in usable])
    pts = np.array([r.point for r in usable])
    valid_month = month_index(np.array([r.issue_time + r.horizon for r in usable]))
    abs_err = np.abs(obs - pts)
    sq_err = (obs - pts) ** 2

    months = tuple(int(m) for m in np.unique(valid_month))
    n_by_month = np.zeros(len(months), dtype=np.int64)
    mae_m = np.full(len(months), np.nan)
    rmse_m = np.full(len(months), np.nan)
    crps_m = np.full(len(months), np.nan)
    width_m = np.full(len(months), np.nan)

    prob = np.array([math.isfinite(r.mu) and math.isfinite(r.sigma) for r in usable])
    crps_all = np.full(len(usable), np.nan)
    pit_all = np.full(len(usable), np.nan)
    width_all = np.full(len(usable), np.nan)
    if np.any(prob):
        mu = np.array([r.mu for r in usable])[prob]
        sg = np.array([r.sigma for r in usable])[prob]
        yy = obs[prob]
        crps_all[prob] = crps_values(mu, sg, yy)
        pit_all[prob] = cdf_values(mu, sg, yy)
        half = (1.0 - interval_level) / 2.0
        width_all[prob] = (quantile_values(mu, sg, 1.0 - half)
                           - quantile_values(mu, sg, half))

    for i, m in enumerate(months):
        sel = valid_month == m
        n_by_month[i] = sel.sum()
        mae_m[i] = abs_err[sel].mean()
        rmse_m[i] = math.sqrt(sq_err[sel].mean())
        psel = sel & prob
        if np.any(psel):
            crps_m[i] = crps_all[psel].mean()
            width_m[i] = width_all[psel].mean()

    n_prob = int(prob.sum())
    pit_counts, _ = np.histogram(pit_all[prob], bins=pit_bins, range=(0.0, 1.0))
    return ScoreReport(
        station=usable[0].station,
        variant=variant,
        horizon=usable[0].horizon,
        months=months,
        n_by_month=n_by_month,
        mae_by_month=mae_m,
        rmse_by_month=rmse_m,
        crps_by_month=crps_m,
        width_by_month=width_m,
        n_scored=len(usable),
        mae=float(abs_err.mean()),
        rmse=float(math.sqrt(sq_err.mean())),
        n_prob=n_prob,
        crps=float(crps_all[prob].mean()) if n_prob else math.nan,
        mean_width=float(width_all[prob].mean()) if n_prob else math.nan,
        interval_level=interval_level,
        pit_counts=pit_counts,
        n_fallback=sum(r.fallback for r in records),
    )


def score_groups(records: Sequence[ForecastRecord], variant: str, **kwargs) -> dict:
    """Score per (station, horizon); keys are those tuples."""
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault((r.station, r.horizon), []).append(r)
    return {key: score(recs, variant, **kwargs) for key, recs in sorted(groups.items())}


def relative_reduction(report: ScoreReport, baseline: ScoreReport) -> dict:
    """Percent score reduction vs. a baseline: 100*(baseline - model)/baseline.

    NaN marks cells where the baseline is zero (undefined) or missing.
    """
    if (report.station, report.horizon) != (baseline.station, baseline.horizon):
        raise InvalidInputError("relative reduction needs matching station and horizon")

    def pct(b, m):
        if not (math.isfinite(b) and math.isfinite(m)) or b == 0.0:
            return math.nan
        return 100.0 * (b - m) / b

    out = {"overall": {"mae": pct(baseline.mae, report.mae),
                       "rmse": pct(baseline.rmse, report.rmse),
                       "crps": pct(baseline.crps, report.crps)}}
    base_months = {m: i for i, m in enumerate(baseline.months)}
    monthly = {}
    for i, m in enumerate(report.months):
        j = base_months.get(m)
        if j is None:
            continue
        monthly[format_month(m)] = {
            "mae": pct(baseline.mae_by_month[j], report.mae_by_month[i]),
            "rmse": pct(baseline.rmse_by_month[j], report.rmse_by_month[i]),
            "crps": pct(baseline.crps_by_month[j], report.crps_by_month[i]),
        }
    out["monthly"] = monthly
    return out


@dataclass
class LagCorrelationTable:
    """Pearson correlations of the k-step-ahead target speed against lagged
    predictors; NaN where the overlap is below the required sample count."""

    target: str
    horizon: int
    lags: tuple
    rows: dict  # variable name -> np.ndarray over lags

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable"] + [f"lag{l}" for l in self.lags])
            for name, vals in self.rows.items():
                writer.writerow([name] + [repr(float(v)) if math.isfinite(v) else ""
                                          for v in vals])


def lag_correlations(
    data: ModelData,
    target: str,
    horizon: int,
    max_lag: int = 5,
    min_overlap: int = 30,
    bounds: tuple | None = None,
) -> LagCorrelationTable:
    """Correlation diagnostics between y[target, t+k] and lagged variables.

    Variables: each station's speed and direction cosine/sine, plus the
    geostrophic wind speed and its direction cosine/sine.
    """
    ti = data.station_index(target)
    lead = _lead(data.speed[ti], horizon)
    in_bounds = np.ones(data.n, dtype=bool)
    if bounds is not None:
        in_bounds = (data.times >= int(bounds[0])) & (data.times + horizon <= int(bounds[1]))

    variables = []
    for i, st in enumerate(data.stations):
        variables.append((f"y[{st}]", data.speed[i]))
        variables.append((f"cos_dir[{st}]", data.cos_dir[i]))
        variables.append((f"sin_dir[{st}]", data.sin_dir[i]))
    variables.append(("w_g", data.gw_speed))
    variables.append(("cos_dir_g", data.gw_cos))
    variables.append(("sin_dir_g", data.gw_sin))

    lags = tuple(range(max_lag + 1))
    rows = {}
    for name, series in variables:
        vals = np.full(len(lags), np.nan)
        for j, lag in enumerate(lags):
            x = _shift(series, lag)
            keep = np.isfinite(lead) & np.isfinite(x) & in_bounds
            if keep.sum() < min_overlap:
                continue
            a, b = lead[keep], x[keep]
            sa, sb = a.std(), b.std()
            if sa > 0 and sb > 0:
                vals[j] = float(np.corrcoef(a, b)[0, 1])
        rows[name] = vals
    return LagCorrelationTable(target, horizon, lags, rows)


SCORES_CSV_COLUMNS = (
    "station", "variant", "horizon", "month", "n", "mae", "rmse", "crps", "width90",
)


def write_scores_csv(reports: Sequence[ScoreReport], path,
                     header_lines: Sequence[str] = ()) -> None:
    def cell(x):
        return repr(float(x)) if math.isfinite(x) else ""

    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(SCORES_CSV_COLUMNS)
        for r in reports:
            for i, m in enumerate(r.months):
                writer.writerow([r.station, r.variant, r.horizon, format_month(m),
                                 int(r.n_by_month[i]), cell(r.mae_by_month[i]),
                                 cell(r.rmse_by_month[i]), cell(r.crps_by_month[i]),
                                 cell(r.width_by_month[i])])
            writer.writerow([r.station, r.variant, r.horizon, "overall",
                             r.n_scored, cell(r.mae), cell(r.rmse), cell(r.crps),
                             cell(r.mean_width)])


def write_pit_csv(reports: Sequence[ScoreReport], path,
                  header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["station", "variant", "horizon", "bin_lo", "bin_hi",
                         "count", "expected"])
        for r in reports:
            nb = r.pit_counts.size
            for b in range(nb):
                writer.writerow([r.station, r.variant, r.horizon,
                                 repr(b / nb), repr((b + 1) / nb),
                                 int(r.pit_counts[b]), repr(r.n_prob / nb)])


def format_score_table(reports: Sequence[ScoreReport], metric: str) -> str:
    """Plain-text table: one row per (station, variant), months as columns,
    'Overall' last."""
    getters = {
        "mae": (lambda r: r.mae_by_month, lambda r: r.mae),
        "rmse": (lambda r: r.rmse_by_month, lambda r: r.rmse),
        "crps": (lambda r: r.crps_by_month, lambda r: r.crps),
        "width90": (lambda r: r.width_by_month, lambda r: r.mean_width),
    }
    if metric not in getters:
        raise InvalidInputError(f"unknown metric {metric!r}")
    monthly_of, overall_of = getters[metric]
    all_months = sorted({m for r in reports for m in r.months})
    headers = ["Site", "Model", "k"] + [format_month(m) for m in all_months] + ["Overall"]
    lines = [f"{metric.upper()} (m/s)", "  ".join(headers)]
    for r in reports:
        cells = []
        by_month = dict(zip(r.months, monthly_of(r)))
        for m in all_months:
            v = by_month.get(m, math.nan)
            cells.append(f"{v:.3f}" if math.isfinite(v) else "--")
        overall = overall_of(r)
        cells.append(f"{overall:.3f}" if math.isfinite(overall) else "--")
        lines.append("  ".join([r.station, r.variant, str(r.horizon)] + cells))
    return "\n".join(lines) + "\n"
