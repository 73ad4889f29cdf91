"""Rolling forecast engine.

Issues hourly 1- to 6-hour-ahead forecasts over a test period. Model
variants refit their coefficients on the sliding window at a configurable
cadence (default once per 24 issue times); every issue time between refits
reuses the latest fit. The information set at issue time t never contains
anything observed after t: diurnal profiles are built from earlier data,
fit windows end at the refit time, and features are lagged observations.

When a model cannot produce a distribution (missing features), the engine
falls back to persistence and flags the record; when even persistence has
no usable observation within one window length, the record is flagged
unavailable (NaN point).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, LoadError, TrainingDataError
from .model import (
    DesignBundle,
    ModelData,
    PERSISTENCE,
    ResidualState,
    TrainedModel,
    FeatureSpec,
    fit_crps,
    parse_variant,
    predict_params,
    select_lags_bic,
)
from .predictive import quantile_values
from .timeutil import epoch_hour, iso_hour

FORECAST_CSV_COLUMNS = (
    "station", "issue_time", "horizon", "mu", "sigma", "point", "fallback", "observed",
)


@dataclass
class RollingConfig:
    window_days: int = 45
    refit_hours: int = 24
    restarts: int = 3
    max_lag: int = 10
    min_rows_per_param: int = 10
    ftol: float = 1e-8
    max_evals_per_param: int = 500

    @property
    def window_hours(self) -> int:
        return 24 * self.window_days


@dataclass
class ForecastRecord:
    """One issued forecast; mu/sigma are NaN when no distribution exists
    (persistence or fallback), observed is NaN until the valid time has data."""

    station: str
    issue_time: int
    horizon: int
    mu: float
    sigma: float
    point: float
    fallback: bool
    observed: float


def latest_observation(data: ModelData, station_index: int, t_index: int,
                       max_back_hours: int):
    """Most recent finite speed at or before t; None beyond the lookback."""
    lo = max(0, t_index - max_back_hours)
    window = data.speed[station_index, lo:t_index + 1]
    finite = np.nonzero(np.isfinite(window))[0]
    if finite.size == 0:
        return None, None
    j = int(finite[-1])
    return float(window[j]), lo + j


def persistence(data: ModelData, station: str, t_eh: int, horizon: int,
                max_back_hours: int = 45 * 24) -> ForecastRecord:
    """Persistence point forecast: the current wind speed, at any horizon."""
    si = data.station_index(station)
    ti = data.index_of_time(t_eh)
    value, at = latest_observation(data, si, ti, max_back_hours)
    fallback = at != ti
    if value is None:
        value = math.nan
        fallback = True
    vi = ti + horizon
    observed = float(data.speed[si, vi]) if vi < data.n else math.nan
    return ForecastRecord(station, int(t_eh), horizon, math.nan, math.nan,
                          value, bool(fallback), observed)


def _observed(data: ModelData, station_index: int, t_index: int, k: int) -> float:
    vi = t_index + k
    if vi < data.n:
        return float(data.speed[station_index, vi])
    return math.nan


def _state_cache_key(method: str, fit_time: int):
    from .timeutil import season_index

    if method == "MD":
        return ("MD", int(fit_time))
    if method == "SMD":
        return ("SMD", int(season_index(fit_time)))
    return (method,)


def run_rolling_station(
    data: ModelData,
    variant: str,
    station: str,
    horizons: Sequence[int],
    train: tuple,
    test: tuple,
    config: RollingConfig = RollingConfig(),
    seed: int = 0,
    selected: dict | None = None,
) -> list[ForecastRecord]:
    """All forecasts for one (variant, target station) over the test period.

    ``selected`` may carry pre-selected FeatureSpecs keyed by horizon (from
    a saved training run); otherwise BIC selection runs on the training
    period first.
    """
    train_start, train_end = int(train[0]), int(train[1])
    test_start, test_end = int(test[0]), int(test[1])
    if test_start < train_end:
        raise InvalidInputError("test period must start at or after the training period end")
    if train_end - train_start < config.window_hours:
        raise TrainingDataError(
            f"training history of {train_end - train_start} h is shorter than "
            f"the {config.window_hours} h sliding window"
        )
    horizons = sorted(set(int(k) for k in horizons))
    si = data.station_index(station)
    issue_times = np.arange(test_start, test_end, dtype=np.int64)

    if variant == PERSISTENCE:
        records = [
            persistence(data, station, t, k, max_back_hours=config.window_hours)
            for t in issue_times
            for k in horizons
        ]
        return records

    vspec = parse_variant(variant)

    # lag selection on the training record
    sel_state = ResidualState.build(data, vspec.diurnal_method, train_end,
                                    (train_start, train_end), config.window_days)
    specs: dict[int, FeatureSpec] = {}
    for k in horizons:
        if selected and k in selected:
            specs[k] = selected[k]
        else:
            specs[k] = select_lags_bic(sel_state, station, k, vspec,
                                       (train_start, train_end),
                                       max_lag=config.max_lag,
                                       min_rows_per_param=config.min_rows_per_param)

    records: list[ForecastRecord] = []
    mu_list, sigma_list, slot = [], [], []
    state = None
    state_key = None
    models: dict[int, TrainedModel] = {}
    bundles: dict[int, DesignBundle] = {}

    for refit_at in range(test_start, test_end, config.refit_hours):
        key = _state_cache_key(vspec.diurnal_method, refit_at)
        if key != state_key:
            state = ResidualState.build(data, vspec.diurnal_method, refit_at,
                                        (train_start, train_end), config.window_days)
            state_key = key
            bundles = {k: DesignBundle.build(state, specs[k]) for k in horizons}
        fit_seed_base = np.random.SeedSequence([seed & 0xFFFFFFFF, si, refit_at])
        for j, k in enumerate(horizons):
            fit_seed = int(fit_seed_base.generate_state(j + 1)[j])
            models[k] = fit_crps(
                state, specs[k], (refit_at - config.window_hours, refit_at),
                seed=fit_seed, restarts=config.restarts, ftol=config.ftol,
                max_evals_per_param=config.max_evals_per_param, bundle=bundles[k],
            )

        for t in range(refit_at, min(refit_at + config.refit_hours, test_end)):
            ti = data.index_of_time(t)
            for k in horizons:
                dist = predict_params(models[k], bundles[k], ti)
                if dist is None:
                    rec = persistence(data, station, t, k, config.window_hours)
                    rec.fallback = True
                    records.append(rec)
                else:
                    records.append(ForecastRecord(
                        station, t, k, dist.mu, dist.sigma, math.nan, False,
                        _observed(data, si, ti, k)))
                    mu_list.append(dist.mu)
                    sigma_list.append(dist.sigma)
                    slot.append(len(records) - 1)

    if slot:  # vectorized median point forecasts
        points = quantile_values(np.asarray(mu_list), np.asarray(sigma_list), 0.5)
        for idx, pt in zip(slot, points):
            records[idx].point = float(pt)
    return records


def run_rolling(
    data: ModelData,
    variant: str,
    targets: Sequence[str],
    horizons: Sequence[int],
    train: tuple,
    test: tuple,
    config: RollingConfig = RollingConfig(),
    seed: int = 0,
    selected: dict | None = None,
) -> list[ForecastRecord]:
    """Forecasts for every target station, ordered (station, issue, horizon)."""
    out: list[ForecastRecord] = []
    for station in targets:
        sel = selected.get(station) if selected else None
        out.extend(run_rolling_station(data, variant, station, horizons, train,
                                       test, config, seed, sel))
    return out


def write_records_csv(records: Sequence[ForecastRecord], path,
                      header_lines: Sequence[str] = ()) -> None:
    def cell(x):
        return repr(float(x)) if math.isfinite(x) else ""

    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(FORECAST_CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.station, iso_hour(r.issue_time), r.horizon, cell(r.mu),
                cell(r.sigma), cell(r.point), int(r.fallback), cell(r.observed),
            ])


def read_records_csv(path) -> list[ForecastRecord]:
    def num(text):
        return float(text) if text else math.nan

    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        missing = set(FORECAST_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise LoadError(f"{path}: missing forecast columns {sorted(missing)}")
        for row in reader:
            records.append(ForecastRecord(
                station=row["station"],
                issue_time=epoch_hour(row["issue_time"]),
                horizon=int(row["horizon"]),
                mu=num(row["mu"]),
                sigma=num(row["sigma"]),
                point=num(row["point"]),
                fallback=bool(int(row["fallback"])),
                observed=num(row["observed"]),
            ))
    return records
