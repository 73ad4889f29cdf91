"""Command-line front end.

Subcommands chain through files under the run's output directory:

    synth     -> <out>/data/{stations.csv, <ID>.csv, truth.csv}
    geowind   -> <out>/geowind.csv
    train     -> <out>/models/<variant>/<station>_k<h>.json
    forecast  -> <out>/forecasts/<variant>.csv
    evaluate  -> <out>/scores.csv, <out>/pit.csv
    report    -> <out>/report.txt

Every command validates the config first and fails with a machine-readable
JSON error on stderr and a nonzero exit code. Outputs are written
atomically and contain no wall-clock timestamps, so identical config +
seed reproduce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import RunConfig, dump_config, load_config
from .errors import ConfigError, LoadError, WindcastError
from .forecast import (
    ForecastRecord,
    RollingConfig,
    read_records_csv,
    run_rolling_station,
    write_records_csv,
)
from .geostrophy import GeoWindSeries, estimate_series
from .ingest import load_network_dir
from .model import (
    ModelData,
    PERSISTENCE,
    ResidualState,
    fit_crps,
    load_bundle,
    parse_variant,
    save_bundle,
    select_lags_bic,
)
from .series import Network
from .synth import write_dataset
from .verification import (
    format_score_table,
    relative_reduction,
    score_groups,
    write_pit_csv,
    write_scores_csv,
)

JOBS_ENV = "WINDCAST_JOBS"


def _provenance(cfg: RunConfig, command: str) -> list:
    return [f"windcast {__version__} {command} seed={cfg.seed} config_sha={cfg.digest()}"]


def _atomic(path, write_fn):
    tmp = f"{path}.tmp"
    write_fn(tmp)
    os.replace(tmp, path)


def _data_dir(cfg: RunConfig) -> str:
    if cfg.data_source == "csv":
        return cfg.csv_dir
    return os.path.join(cfg.out_dir, "data")


def _load_network(cfg: RunConfig, station_ids=None) -> Network:
    directory = _data_dir(cfg)
    if not os.path.isdir(directory):
        raise LoadError(
            f"data directory {directory!r} not found"
            + (" (run the synth command first)" if cfg.data_source == "synth" else "")
        )
    series = load_network_dir(directory, cfg.csv_schema, station_ids)
    return Network.from_series(series)


def _load_model_data(cfg: RunConfig) -> ModelData:
    network = _load_network(cfg, cfg.features)
    gw_path = os.path.join(cfg.out_dir, "geowind.csv")
    if not os.path.exists(gw_path):
        raise LoadError(f"{gw_path} not found (run the geowind command first)")
    geowind = GeoWindSeries.from_csv(gw_path)
    return ModelData.from_network(network, geowind, cfg.features, cfg.tz_offset_hours)


def _rolling_config(cfg: RunConfig) -> RollingConfig:
    return RollingConfig(window_days=cfg.window_days, refit_hours=cfg.refit_hours,
                         restarts=cfg.restarts, max_lag=cfg.max_lag)


def _bundle_path(cfg: RunConfig, variant: str, station: str, horizon: int) -> str:
    return os.path.join(cfg.out_dir, "models", variant, f"{station}_k{horizon}.json")


def cmd_synth(cfg: RunConfig) -> None:
    if cfg.data_source != "synth":
        raise ConfigError(["synth command requires data.source == 'synth'"])
    out = os.path.join(cfg.out_dir, "data")
    write_dataset(cfg.synth, out, cfg.constants)
    print(f"wrote synthetic dataset ({cfg.synth.n_stations} stations, "
          f"{cfg.synth.days} days) to {out}")


def cmd_geowind(cfg: RunConfig) -> None:
    network = _load_network(cfg, cfg.gw_stations)
    series = estimate_series(network, cfg.constants, cfg.mean_removal,
                             min_stations=cfg.min_stations)
    path = os.path.join(cfg.out_dir, "geowind.csv")
    _atomic(path, lambda p: series.to_csv(p, _provenance(cfg, "geowind")))
    n_ok = int((series.n_stations >= cfg.min_stations).sum())
    print(f"estimated geostrophic wind for {n_ok}/{series.n} hours -> {path}")


def cmd_train(cfg: RunConfig) -> None:
    data = _load_model_data(cfg)
    train = (cfg.train_start, cfg.train_end)
    rolling = _rolling_config(cfg)
    for variant in cfg.variants:
        if variant == PERSISTENCE:
            continue
        vspec = parse_variant(variant)
        state = ResidualState.build(data, vspec.diurnal_method, cfg.train_end,
                                    train, cfg.window_days)
        for station in cfg.stations:
            for k in cfg.horizons:
                spec = select_lags_bic(state, station, k, vspec, train,
                                       max_lag=cfg.max_lag)
                model = fit_crps(state, spec,
                                 (cfg.train_end - rolling.window_hours, cfg.train_end),
                                 seed=cfg.seed, restarts=cfg.restarts)
                path = _bundle_path(cfg, variant, station, k)
                os.makedirs(os.path.dirname(path), exist_ok=True)
                _atomic(path, lambda p, m=model: save_bundle(m, p))
                print(f"trained {variant} {station} k={k}: "
                      f"{len(model.coefficients.names)} center terms, "
                      f"window CRPS {model.train_crps:.4f} -> {path}")


def _forecast_job(args):
    data, variant, station, horizons, train, test, rolling, seed, selected = args
    records = run_rolling_station(data, variant, station, horizons, train, test,
                                  rolling, seed, selected)
    return variant, station, records


def cmd_forecast(cfg: RunConfig, jobs: int | None = None) -> None:
    data = _load_model_data(cfg)
    train = (cfg.train_start, cfg.train_end)
    test = (cfg.test_start, cfg.test_end)
    rolling = _rolling_config(cfg)
    jobs = jobs or cfg.jobs

    tasks = []
    for variant in cfg.variants:
        for station in cfg.stations:
            selected = None
            if variant != PERSISTENCE:
                specs = {}
                for k in cfg.horizons:
                    path = _bundle_path(cfg, variant, station, k)
                    if os.path.exists(path):
                        specs[k] = load_bundle(path).spec
                selected = specs or None
            tasks.append((data, variant, station, list(cfg.horizons), train, test,
                          rolling, cfg.seed, selected))

    results: dict[tuple, list[ForecastRecord]] = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for variant, station, records in pool.map(_forecast_job, tasks):
                results[(variant, station)] = records
    else:
        for task in tasks:
            variant, station, records = _forecast_job(task)
            results[(variant, station)] = records

    os.makedirs(os.path.join(cfg.out_dir, "forecasts"), exist_ok=True)
    for variant in cfg.variants:
        records = []
        for station in cfg.stations:
            records.extend(results[(variant, station)])
        path = os.path.join(cfg.out_dir, "forecasts", f"{variant}.csv")
        _atomic(path, lambda p, r=records: write_records_csv(r, p, _provenance(cfg, "forecast")))
        n_fallback = sum(r.fallback for r in records)
        print(f"{variant}: {len(records)} forecasts ({n_fallback} fallbacks) -> {path}")


def _read_all_records(cfg: RunConfig) -> dict:
    out = {}
    for variant in cfg.variants:
        path = os.path.join(cfg.out_dir, "forecasts", f"{variant}.csv")
        if not os.path.exists(path):
            raise LoadError(f"{path} not found (run the forecast command first)")
        out[variant] = read_records_csv(path)
    return out


def _all_reports(cfg: RunConfig) -> list:
    reports = []
    for variant, records in _read_all_records(cfg).items():
        groups = score_groups(records, variant, pit_bins=cfg.pit_bins,
                              interval_level=cfg.interval_level)
        reports.extend(groups.values())
    return reports


def cmd_evaluate(cfg: RunConfig) -> None:
    reports = _all_reports(cfg)
    scores_path = os.path.join(cfg.out_dir, "scores.csv")
    pit_path = os.path.join(cfg.out_dir, "pit.csv")
    _atomic(scores_path, lambda p: write_scores_csv(reports, p, _provenance(cfg, "evaluate")))
    _atomic(pit_path, lambda p: write_pit_csv(reports, p, _provenance(cfg, "evaluate")))
    print(f"scored {len(reports)} (station, variant, horizon) cells -> {scores_path}")


def cmd_report(cfg: RunConfig) -> None:
    reports = _all_reports(cfg)
    by_key = {(r.variant, r.station, r.horizon): r for r in reports}
    lines = [f"windcast {__version__} verification report (config {cfg.digest()})", ""]
    for metric in ("mae", "rmse", "crps", "width90"):
        lines.append(format_score_table(reports, metric))
    baseline_variant = PERSISTENCE if PERSISTENCE in cfg.variants else cfg.variants[0]
    lines.append(f"Relative reduction vs {baseline_variant} (percent, overall MAE):")
    for r in reports:
        if r.variant == baseline_variant:
            continue
        base = by_key.get((baseline_variant, r.station, r.horizon))
        if base is None:
            continue
        red = relative_reduction(r, base)["overall"]["mae"]
        text = f"{red:.1f}%" if math.isfinite(red) else "n/a"
        lines.append(f"  {r.station} k={r.horizon} {r.variant}: {text}")
    path = os.path.join(cfg.out_dir, "report.txt")
    _atomic(path, lambda p: open(p, "w").write("\n".join(lines) + "\n"))
    print(f"wrote {path}")


COMMANDS = {
    "synth": cmd_synth,
    "geowind": cmd_geowind,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windcast",
        description="probabilistic short-term wind speed forecasting pipeline",
    )
    parser.add_argument("--version", action="version", version=f"windcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", required=True, help="run configuration YAML")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--jobs", type=int, default=None,
                       help=f"worker processes (also via ${JOBS_ENV})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            if cfg.synth is not None and cfg.data_source == "synth":
                import dataclasses

                cfg.synth = dataclasses.replace(cfg.synth, seed=args.seed)
        if args.out is not None:
            cfg.out_dir = args.out
        jobs = args.jobs
        if jobs is None and os.environ.get(JOBS_ENV):
            jobs = int(os.environ[JOBS_ENV])

        os.makedirs(cfg.out_dir, exist_ok=True)
        _atomic(os.path.join(cfg.out_dir, "config.yaml"),
                lambda p: dump_config(cfg, p))
        if args.command == "forecast":
            cmd_forecast(cfg, jobs=jobs)
        else:
            COMMANDS[args.command](cfg)
        return 0
    except ConfigError as exc:
        json.dump({"error": "ConfigError", "message": str(exc),
                   "violations": exc.violations}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except WindcastError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
