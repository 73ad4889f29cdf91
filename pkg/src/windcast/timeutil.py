"""Hourly time axis helpers.

All series in this package live on an integer axis of hours since the Unix
epoch (UTC). Hour-of-day is derived with a configurable fixed UTC offset
(local standard time of the network); months and seasons use the UTC
calendar.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

SEASONS = ("DJF", "MAM", "JJA", "SON")

# month number 1..12 -> season index into SEASONS
_MONTH_SEASON = np.array([0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 0])


def parse_timestamp(text: str) -> np.datetime64:
    """Parse an ISO-8601 UTC timestamp to minute precision."""
    s = text.strip().replace(" ", "T")
    if s.endswith("Z"):
        s = s[:-1]
    try:
        return np.datetime64(s, "m")
    except ValueError as exc:
        raise InvalidInputError(f"unparseable timestamp {text!r}") from exc


def epoch_minutes(text: str) -> int:
    return int(parse_timestamp(text).astype("int64"))


def epoch_hour(text: str) -> int:
    """Epoch hour of an ISO timestamp, flooring sub-hourly parts."""
    return int(np.floor_divide(epoch_minutes(text), 60))


def iso_hour(eh) -> str:
    """ISO-8601 rendering of an epoch hour, e.g. '2008-01-01T05:00:00Z'."""
    dt = np.datetime64(int(eh), "h")
    return str(dt) + ":00Z"


def hours_of_day(eh, tz_offset_hours: int = 0):
    """Hour-of-day 0..23 at a fixed UTC offset (vectorized)."""
    return np.mod(np.asarray(eh, dtype=np.int64) + int(tz_offset_hours), 24)


def month_index(eh):
    """Months since 1970-01 for each epoch hour (UTC calendar)."""
    dt = np.asarray(eh, dtype=np.int64).astype("datetime64[h]")
    return dt.astype("datetime64[M]").astype(np.int64)


def year_month(month_idx: int) -> tuple[int, int]:
    return 1970 + month_idx // 12, month_idx % 12 + 1


def format_month(month_idx: int) -> str:
    y, m = year_month(int(month_idx))
    return f"{y:04d}-{m:02d}"


def month_number(eh):
    """Calendar month 1..12 of each epoch hour."""
    return np.mod(month_index(eh), 12) + 1


def season_index(eh):
    """Season of each epoch hour: 0=DJF, 1=MAM, 2=JJA, 3=SON."""
    return _MONTH_SEASON[month_number(eh) - 1]


def hour_range(start_eh: int, end_eh: int):
    """Contiguous hourly axis [start, end)."""
    if end_eh < start_eh:
        raise InvalidInputError("end before start")
    return np.arange(int(start_eh), int(end_eh), dtype=np.int64)
