"""Station CSV ingestion: schema-driven parsing, unit conversion, hourly averaging.

Input files are flat CSVs with one row per (sub-)hourly record. A
``SchemaConfig`` maps file columns onto the roles time/station/speed/
direction/temperature/pressure and declares the units of each field; a
field with an undeclared unit is a load error rather than a silent guess.

Hourly aggregation: scalar fields are arithmetic means, wind direction is
averaged vectorially (mean of unit vectors, renormalized), and an hour is
kept only when at least ``min_fraction`` of the expected records within the
hour are present (default 9 of 12 five-minute records).
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, LoadError
from .series import StationMeta, StationSeries
from .timeutil import iso_hour, parse_timestamp

ROLES = ("time", "station", "speed", "direction", "temperature", "pressure")

# factors to canonical units; temperature handled separately (affine)
_SPEED_FACTORS = {"m_s": 1.0, "km_h": 1.0 / 3.6, "mph": 0.44704, "knot": 0.514444}
_PRESSURE_FACTORS = {"hpa": 1.0, "mb": 1.0, "pa": 0.01}
_DIRECTION_UNITS = ("deg", "rad")
_TEMPERATURE_UNITS = ("celsius", "kelvin", "fahrenheit")

MET_FROM = "meteorological_from"
MATH_TOWARD = "math_toward"

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemaConfig:
    """Column mapping, units, and policies for one CSV layout."""

    columns: dict  # role -> column name; 'station' optional
    units: dict  # role -> unit string (speed/direction/temperature/pressure)
    direction_convention: str = MET_FROM
    sentinels: tuple = (-999.0,)
    expected_per_hour: int = 12
    min_fraction: float = 0.75

    def __post_init__(self):
        for role in ("time", "speed", "direction", "temperature", "pressure"):
            if role not in self.columns:
                raise InvalidInputError(f"schema lacks a column for role {role!r}")
        if self.direction_convention not in (MET_FROM, MATH_TOWARD):
            raise InvalidInputError(
                f"unknown direction convention {self.direction_convention!r}"
            )
        if self.expected_per_hour < 1 or not 0.0 < self.min_fraction <= 1.0:
            raise InvalidInputError("bad completeness policy")
        checks = (
            ("speed", _SPEED_FACTORS.keys()),
            ("direction", _DIRECTION_UNITS),
            ("temperature", _TEMPERATURE_UNITS),
            ("pressure", _PRESSURE_FACTORS.keys()),
        )
        for role, known in checks:
            unit = self.units.get(role)
            if unit is None:
                raise LoadError(f"no unit declared for {role!r}")
            if unit not in known:
                raise LoadError(f"undeclared {role} unit {unit!r}; known: {sorted(known)}")

    @property
    def min_records(self) -> int:
        return math.ceil(self.min_fraction * self.expected_per_hour)


#: Canonical hourly layout this package emits and re-reads.
CANONICAL_SCHEMA = SchemaConfig(
    columns={
        "time": "time_utc",
        "station": "station",
        "speed": "wind_speed_ms",
        "direction": "wind_dir_deg",
        "temperature": "temp_c",
        "pressure": "pressure_hpa",
    },
    units={"speed": "m_s", "direction": "deg", "temperature": "celsius", "pressure": "hpa"},
    direction_convention=MET_FROM,
    expected_per_hour=1,
)


@dataclass
class RawRecords:
    """Parsed sub-hourly rows in canonical units before hourly aggregation."""

    times_min: np.ndarray  # int64 epoch minutes
    speed: np.ndarray
    direction: np.ndarray  # math radians [0, 2*pi)
    temperature: np.ndarray
    pressure: np.ndarray
    n_malformed: int = 0


def _convert_direction(deg_or_rad: float, unit: str, convention: str) -> float:
    rad = math.radians(deg_or_rad) if unit == "deg" else float(deg_or_rad)
    if convention == MET_FROM:
        # bearing the wind blows FROM (clockwise from north) -> travel
        # direction (counterclockwise from east)
        rad = 1.5 * math.pi - rad
    return rad % (2.0 * math.pi)


def _to_canonical(role: str, value: float, unit: str) -> float:
    if role == "speed":
        return value * _SPEED_FACTORS[unit]
    if role == "pressure":
        return value * _PRESSURE_FACTORS[unit]
    if role == "temperature":
        if unit == "kelvin":
            return value - 273.15
        if unit == "fahrenheit":
            return (value - 32.0) / 1.8
        return value
    return value


def read_raw(path, schema: SchemaConfig, station_id: str | None = None) -> RawRecords:
    """Parse one CSV into canonical-unit records.

    Rows with a malformed numeric field are counted and their bad fields
    dropped; an unparseable timestamp or a missing schema column is a hard
    LoadError carrying the offending line number.
    """
    times, cols = [], {r: [] for r in ("speed", "direction", "temperature", "pressure")}
    n_malformed = 0
    sentinels = set(schema.sentinels)
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        if reader.fieldnames is None:
            raise LoadError(f"{path}: empty file")
        missing = [c for c in schema.columns.values() if c not in reader.fieldnames]
        if missing:
            raise LoadError(f"{path}: columns {missing} not found in header {reader.fieldnames}")
        station_col = schema.columns.get("station")
        for lineno, row in enumerate(reader, start=2):
            if station_id is not None and station_col is not None:
                if row[station_col] != station_id:
                    continue
            try:
                t = parse_timestamp(row[schema.columns["time"]])
            except InvalidInputError as exc:
                raise LoadError(f"{path}:{lineno}: {exc}") from None
            times.append(int(t.astype("int64")))
            bad = False
            for role in ("speed", "direction", "temperature", "pressure"):
                text = (row[schema.columns[role]] or "").strip()
                try:
                    value = float(text)
                except ValueError:
                    value = math.nan
                    bad = bad or text != ""
                if value in sentinels or not math.isfinite(value):
                    value = math.nan
                elif role == "direction":
                    value = _convert_direction(value, schema.units["direction"],
                                               schema.direction_convention)
                else:
                    value = _to_canonical(role, value, schema.units[role])
                cols[role].append(value)
            n_malformed += bad
    return RawRecords(
        times_min=np.asarray(times, dtype=np.int64),
        speed=np.asarray(cols["speed"]),
        direction=np.asarray(cols["direction"]),
        temperature=np.asarray(cols["temperature"]),
        pressure=np.asarray(cols["pressure"]),
        n_malformed=n_malformed,
    )


def hourly_average(raw: RawRecords, schema: SchemaConfig, meta: StationMeta) -> StationSeries:
    """Aggregate sub-hourly records to an hourly StationSeries.

    Emits a contiguous hourly grid from the first to the last observed
    hour; hours failing the completeness rule are NaN.
    """
    if raw.times_min.size == 0:
        raise LoadError(f"station {meta.id}: no parseable records")
    hours = raw.times_min // 60
    start, end = int(hours.min()), int(hours.max()) + 1
    axis = np.arange(start, end, dtype=np.int64)
    pos = hours - start
    n = axis.size

    out = {}
    for name, values in (
        ("wind_speed", raw.speed),
        ("temperature", raw.temperature),
        ("pressure", raw.pressure),
    ):
        finite = np.isfinite(values)
        counts = np.bincount(pos[finite], minlength=n)
        sums = np.bincount(pos[finite], weights=values[finite], minlength=n)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = sums / counts
        mean[counts < schema.min_records] = np.nan
        out[name] = mean

    finite = np.isfinite(raw.direction)
    counts = np.bincount(pos[finite], minlength=n)
    sin_sum = np.bincount(pos[finite], weights=np.sin(raw.direction[finite]), minlength=n)
    cos_sum = np.bincount(pos[finite], weights=np.cos(raw.direction[finite]), minlength=n)
    direction = np.arctan2(sin_sum, cos_sum) % (2.0 * math.pi)
    direction[counts < schema.min_records] = np.nan
    out["wind_direction"] = direction

    return StationSeries(meta=meta, times=axis, **out)


def load_station_csv(path, schema: SchemaConfig, meta: StationMeta) -> StationSeries:
    """read_raw + hourly_average for one station file."""
    return hourly_average(read_raw(path, schema, station_id=meta.id), schema, meta)


def write_station_csv(series: StationSeries, path, header_lines: Sequence[str] = ()) -> None:
    """Write the canonical hourly CSV (CANONICAL_SCHEMA layout)."""
    cols = CANONICAL_SCHEMA.columns
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow([cols["time"], cols["station"], cols["speed"],
                         cols["direction"], cols["temperature"], cols["pressure"]])
        for i in range(series.n):
            direction = series.wind_direction[i]
            if math.isfinite(direction):
                # canonical files carry meteorological degrees
                direction = math.degrees((1.5 * math.pi - direction) % (2.0 * math.pi))
                dir_text = repr(float(direction))
            else:
                dir_text = ""
            row = [iso_hour(series.times[i]), series.meta.id]
            for value in (series.wind_speed[i],):
                row.append(repr(float(value)) if math.isfinite(value) else "")
            row.append(dir_text)
            for value in (series.temperature[i], series.pressure[i]):
                row.append(repr(float(value)) if math.isfinite(value) else "")
            writer.writerow(row)


STATIONS_FILE_COLUMNS = ("station", "latitude_deg", "longitude_deg", "elevation_m")


def write_stations_csv(stations: Sequence[StationMeta], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATIONS_FILE_COLUMNS)
        for m in stations:
            writer.writerow([m.id, repr(float(m.latitude)), repr(float(m.longitude)),
                             repr(float(m.elevation))])


def read_stations_csv(path) -> list[StationMeta]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = set(STATIONS_FILE_COLUMNS) - set(reader.fieldnames or ())
        if need:
            raise LoadError(f"{path}: missing columns {sorted(need)}")
        for row in reader:
            out.append(
                StationMeta(
                    id=row["station"],
                    latitude=float(row["latitude_deg"]),
                    longitude=float(row["longitude_deg"]),
                    elevation=float(row["elevation_m"]),
                )
            )
    return out


def load_network_dir(directory, schema: SchemaConfig = CANONICAL_SCHEMA,
                     station_ids: Sequence[str] | None = None):
    """Load a directory of per-station CSVs plus a stations.csv metadata file."""
    metas = read_stations_csv(os.path.join(directory, "stations.csv"))
    if station_ids is not None:
        wanted = set(station_ids)
        metas = [m for m in metas if m.id in wanted]
        missing = wanted - {m.id for m in metas}
        if missing:
            raise LoadError(f"stations.csv lacks entries for {sorted(missing)}")
    series = []
    for meta in metas:
        path = os.path.join(directory, f"{meta.id}.csv")
        if not os.path.exists(path):
            raise LoadError(f"no data file for station {meta.id}: {path}")
        series.append(load_station_csv(path, schema, meta))
    return series
