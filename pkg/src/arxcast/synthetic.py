"""Seeded synthetic measurement/forecast datasets with known ARX parameters.

For every variable and hour of day the generator runs the recursion::

    meas[d, h] = alpha * meas[d - 1, h] + beta * fcst[d, h] + gamma + sigma * e[d, h]

over days ``d``, where ``fcst[d, h] = base[h] + spread[h] * z[d, h]`` is the
lead-18 forecast and ``e``, ``z`` are standard normal draws. Day 0 is a
burn-in day with no lag. Nonnegative variables are clipped at zero, which
only ever happens when noise is injected: the defaults keep
``alpha + beta <= 1`` so ``gamma >= 0`` and the noiseless process stays
nonnegative.

Random numbers come from numpy's ``Generator(PCG64(seed))``. Draws are made
in a fixed order: ``z0`` (burn-in levels), ``z``, then ``e``, each shaped
``(days, 24, 3)`` with variables ordered irradiance, temperature, wind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .core import HOURS_PER_DAY, DEFAULT_UTC_OFFSET, ForecastRecord, TimeIndex, Variable, WeatherSample
from .errors import ConfigError, Singular
from .ingest import Dataset, build_dataset

VARIABLES = (Variable.IRRADIANCE, Variable.TEMPERATURE, Variable.WIND)
SYNTH_LEAD = 18


@dataclass(frozen=True)
class TrueParams:
    alpha: float
    beta: float
    gamma: float
    sigma: float


@dataclass
class SyntheticConfig:
    """Generator settings. Defaults are the documented acceptance noise levels."""

    days: int = 180
    seed: int = 0
    start_date: str = "2017-12-01"  # first local midnight
    utc_offset: int = DEFAULT_UTC_OFFSET
    site_id: str = "synthetic"
    forecast_informativeness: float = 0.8
    noise_scale: float = 1.0

    peak_irradiance: float = 800.0  # W/m2
    sunrise: float = 7.0  # local hours; irradiance is exactly 0 outside (sunrise, sunset)
    sunset: float = 20.0
    temp_mean: float = 286.0  # K
    temp_amplitude: float = 5.0
    wind_mean: float = 4.0  # m/s
    wind_amplitude: float = 1.0
    wind_std: float = 1.5  # forecast spread

    irradiance_spread: float = 0.3  # fraction of the clear-sky profile
    temp_spread: float = 2.8
    irradiance_noise: float = 0.1  # fraction of the clear-sky profile
    temp_noise: float = 1.5
    wind_noise: float = 1.0

    true_params: dict = field(default_factory=dict)  # {(variable, hour): (alpha, beta, gamma, sigma)}

    def __post_init__(self):
        if self.days < 2:
            raise ConfigError(f"days must be >= 2 for a 24 h lag, got {self.days}")
        if not self.sunrise < self.sunset:
            raise ConfigError("sunrise must precede sunset")
        if not self.peak_irradiance > 0:
            raise ConfigError("peak_irradiance must be positive")
        if not 0 <= self.forecast_informativeness <= 1:
            raise ConfigError("forecast_informativeness must be in [0, 1]")
        if self.noise_scale < 0 or min(self.irradiance_noise, self.temp_noise, self.wind_noise) < 0:
            raise ConfigError("noise levels must be nonnegative")
        for key, p in self.true_params.items():
            var, hour = key
            Variable(var)
            if not 1 <= hour <= HOURS_PER_DAY or len(p) != 4 or p[3] < 0:
                raise ConfigError(f"bad true_params entry {key}: {p}")

    def base(self, variable: Variable, hour: int) -> float:
        lh = hour - 1  # local clock hour
        if variable is Variable.IRRADIANCE:
            if not self.sunrise < lh < self.sunset:
                return 0.0
            return self.peak_irradiance * math.sin(math.pi * (lh - self.sunrise) / (self.sunset - self.sunrise))
        if variable is Variable.TEMPERATURE:
            return self.temp_mean + self.temp_amplitude * math.cos(2 * math.pi * (lh - 15) / 24)
        return self.wind_mean + self.wind_amplitude * math.cos(2 * math.pi * (lh - 16) / 24)

    def spread(self, variable: Variable, hour: int) -> float:
        if variable is Variable.IRRADIANCE:
            return self.irradiance_spread * self.base(variable, hour)
        return self.temp_spread if variable is Variable.TEMPERATURE else self.wind_std

    def resolved_params(self) -> dict[tuple[Variable, int], TrueParams]:
        rho = self.forecast_informativeness
        out = {}
        for var in VARIABLES:
            for hour in range(1, HOURS_PER_DAY + 1):
                override = self.true_params.get((var, hour), self.true_params.get((var.value, hour)))
                if override is not None:
                    out[var, hour] = TrueParams(*map(float, override))
                    continue
                base = self.base(var, hour)
                if var is Variable.IRRADIANCE and base == 0.0:
                    out[var, hour] = TrueParams(0.0, 0.0, 0.0, 0.0)
                    continue
                alpha = 0.35 - 0.3 * rho + 0.05 * math.sin(2 * math.pi * hour / 24)
                beta = 0.9 * rho
                noise = {
                    Variable.IRRADIANCE: self.irradiance_noise * base,
                    Variable.TEMPERATURE: self.temp_noise,
                    Variable.WIND: self.wind_noise,
                }[var]
                # gamma keeps the long-run mean of the measurement at the base profile
                out[var, hour] = TrueParams(alpha, beta, base * (1 - alpha - beta), self.noise_scale * noise)
        return out

    def start_index(self) -> TimeIndex:
        d = datetime.strptime(self.start_date, "%Y-%m-%d").replace(tzinfo=timezone.utc)
        midnight_utc = TimeIndex.from_datetime(d, self.utc_offset)
        return midnight_utc - self.utc_offset


def generate_arrays(config: SyntheticConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(measured, forecast)`` arrays shaped ``(days, 24, 3)``."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    shape = (config.days, HOURS_PER_DAY, len(VARIABLES))
    z0 = rng.standard_normal(shape[1:])
    z = rng.standard_normal(shape)
    e = rng.standard_normal(shape)

    params = config.resolved_params()
    hours = range(1, HOURS_PER_DAY + 1)
    grid = lambda f: np.array([[f(v, h) for v in VARIABLES] for h in hours])  # noqa: E731
    base = grid(config.base)
    spread = grid(config.spread)
    alpha = grid(lambda v, h: params[v, h].alpha)
    beta = grid(lambda v, h: params[v, h].beta)
    gamma = grid(lambda v, h: params[v, h].gamma)
    sigma = grid(lambda v, h: params[v, h].sigma)
    nonneg = np.array([v.nonnegative for v in VARIABLES])

    fcst = base + spread * z
    fcst = np.where(nonneg, np.maximum(fcst, 0.0), fcst)
    meas = np.empty(shape)
    meas[0] = np.where(nonneg, np.maximum(base + spread * z0, 0.0), base + spread * z0)
    for d in range(1, config.days):
        m = alpha * meas[d - 1] + beta * fcst[d] + gamma + sigma * e[d]
        meas[d] = np.where(nonneg, np.maximum(m, 0.0), m)
    return meas, fcst


def generate(config: SyntheticConfig) -> Dataset:
    """Synthetic dataset: a lead-0 (measurement) and a lead-18 record per hour."""
    meas, fcst = generate_arrays(config)
    t0 = config.start_index()
    records = []
    for d in range(config.days):
        for h in range(HOURS_PER_DAY):
            t = t0 + (24 * d + h)
            records.append(ForecastRecord(t, 0, WeatherSample(*map(float, meas[d, h]))))
            records.append(ForecastRecord(t - SYNTH_LEAD, SYNTH_LEAD, WeatherSample(*map(float, fcst[d, h]))))
    return build_dataset(records, config.site_id, provenance=(f"synthetic seed={config.seed} days={config.days}",))


def oracle_ols(X, y) -> list[float]:
    """Solve the explicitly formed normal equations by Gaussian elimination.

    Plain Python arithmetic with partial pivoting, kept separate from the
    QR path in :func:`arxcast.estimation.fit_ols` so the two can check each
    other.
    """
    rows = [[float(v) for v in r] for r in (X.tolist() if hasattr(X, "tolist") else X)]
    rows = [r if isinstance(r, list) else [r] for r in rows]
    ys = [float(v) for v in y]
    k = len(rows[0])
    if len(rows) < k:
        raise Singular(f"{len(rows)} rows for {k} unknowns")
    A = [[sum(r[i] * r[j] for r in rows) for j in range(k)] for i in range(k)]
    b = [sum(r[i] * yv for r, yv in zip(rows, ys)) for i in range(k)]
    M = [A[i] + [b[i]] for i in range(k)]
    scale = max(abs(A[i][i]) for i in range(k)) or 1.0

    for col in range(k):
        piv = max(range(col, k), key=lambda r: abs(M[r][col]))
        if abs(M[piv][col]) <= 1e-13 * scale:
            raise Singular("normal matrix is singular")
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, k):
            f = M[r][col] / M[col][col]
            for c in range(col, k + 1):
                M[r][c] -= f * M[col][c]
    coef = [0.0] * k
    for i in range(k - 1, -1, -1):
        coef[i] = (M[i][k] - sum(M[i][j] * coef[j] for j in range(i + 1, k))) / M[i][i]
    return coef
