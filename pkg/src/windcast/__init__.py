"""windcast: probabilistic short-term wind speed forecasting.

Estimates the geostrophic wind from a surface pressure/temperature
network, removes diurnal cycles, and issues 1- to 6-hour-ahead truncated
normal predictive distributions from space-time regressions trained by
CRPS minimization, with a full verification suite.
"""

__version__ = "0.1.0"

from .errors import WindcastError  # noqa: F401
from .predictive import TruncatedNormal  # noqa: F401
from .series import Network, StationMeta, StationSeries  # noqa: F401
