"""Shared fixtures: small modeling datasets and the session-scoped benchmark run."""

import time

import pytest
import yaml

from windcast import synth
from windcast.cli import main as cli_main
from windcast.geostrophy import MeanRemovalPolicy, estimate_series
from windcast.model import ModelData
from windcast.series import Network


def make_model_data(seed=11, days=240, n_inner=4, tz_offset=-6, **synth_kw):
    """Synthetic ModelData with the 12-station ring feeding the wind estimate."""
    kw = dict(seed=seed, days=days, n_stations=12, n_inner=n_inner,
              height_noise_m=0.5)
    kw.update(synth_kw)
    cfg = synth.SynthConfig(**kw)
    series, truth = synth.generate(cfg)
    net = Network.from_series(series)
    ring = [m.id for m in net.stations[n_inner:]]
    gw = estimate_series(net.subset(ring), policy=MeanRemovalPolicy.NONE)
    targets = [m.id for m in net.stations[:n_inner]] or [m.id for m in net.stations[:4]]
    data = ModelData.from_network(net, gw, targets, tz_offset=tz_offset)
    return data, truth


@pytest.fixture(scope="session")
def small_data():
    data, _ = make_model_data()
    return data


# ---------------------------------------------------------------------------
# the desk-scale forecasting benchmark: 2 synthetic years training, 1 year
# test, 4 target stations, evaluated at the 2-hour horizon


def benchmark_config_dict(out_dir, days=1096, test_start="2010-01-01T00:00",
                          test_end="2011-01-01T00:00", variants=None,
                          horizons=None, seed=424242):
    synth_cfg = synth.benchmark_config(seed=seed)
    return {
        "seed": seed,
        "out_dir": str(out_dir),
        "data": {
            "source": "synth",
            "synth": {
                "seed": seed,
                "days": days,
                "n_stations": synth_cfg.n_stations,
                "n_inner": synth_cfg.n_inner,
                "height_noise_m": synth_cfg.height_noise_m,
            },
        },
        "stations": list(synth.BENCHMARK_TARGETS),
        "gw_stations": list(synth.BENCHMARK_GW_STATIONS),
        "horizons": horizons or [2],
        "variants": variants or ["PSS", "TDD", "TDDGW-MD"],
        "train": {"start": "2008-01-01T00:00", "end": "2010-01-01T00:00"},
        "test": {"start": test_start, "end": test_end},
        "window_days": 45,
        "refit_hours": 24,
        "restarts": 1,
        "tz_offset_hours": -6,
        "mean_removal": "none",
        "jobs": 2,
    }


def run_pipeline(config_path, out_dir, commands=("synth", "geowind", "forecast",
                                                 "evaluate", "report")):
    for command in commands:
        code = cli_main([command, "--config", str(config_path)])
        assert code == 0, f"{command} failed"
    return out_dir


@pytest.fixture(scope="session")
def benchmark_run(tmp_path_factory):
    """Full pipeline on the 3-year benchmark; shared by the acceptance tests."""
    out = tmp_path_factory.mktemp("benchmark")
    config_path = out / "config.yaml"
    config_path.write_text(yaml.safe_dump(benchmark_config_dict(out)))
    t0 = time.perf_counter()
    run_pipeline(config_path, out)
    elapsed = time.perf_counter() - t0
    return {"out": out, "elapsed_s": elapsed}
