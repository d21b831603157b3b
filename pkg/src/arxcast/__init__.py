"""Localized weather and PV power forecasting with per-hour ARX(1,1) models.

Measured (lead-0) weather from 24 hours earlier is blended with an 18 hour
ahead numerical weather forecast, one least-squares model per hour of day,
and the predicted irradiance and temperature are mapped to array power.
"""

from .core import AlignedSample, ForecastRecord, TimeIndex, Variable, WeatherSample, align, hour_of_day
from .estimation import HourlyModel, Kind, ModelSet, fit_hourly, fit_ols, load_models, predict, save_models
from .evaluation import accuracy_pct, mae, rmse
from .ingest import Dataset, SplitSpec, build_dataset, fetch_archive, parse_point_csv, split, write_point_csv
from .power import PlantConfig, power, power_series
from .synthetic import SyntheticConfig, generate, oracle_ols

__version__ = "0.1.0"

__all__ = [
    "AlignedSample",
    "ForecastRecord",
    "TimeIndex",
    "Variable",
    "WeatherSample",
    "align",
    "hour_of_day",
    "HourlyModel",
    "Kind",
    "ModelSet",
    "fit_hourly",
    "fit_ols",
    "load_models",
    "predict",
    "save_models",
    "accuracy_pct",
    "mae",
    "rmse",
    "Dataset",
    "SplitSpec",
    "build_dataset",
    "fetch_archive",
    "parse_point_csv",
    "split",
    "write_point_csv",
    "PlantConfig",
    "power",
    "power_series",
    "SyntheticConfig",
    "generate",
    "oracle_ols",
]
