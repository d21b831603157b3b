"""Domain types, the hourly time index and stream alignment."""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .errors import EmptyAlignment

HOURS_PER_DAY = 24
MAX_LEAD_HOURS = 18
DEFAULT_LAG = 24
DEFAULT_LEAD = 18
# fixed standard-time offset (PST); daylight saving is deliberately ignored.
DEFAULT_UTC_OFFSET = -8

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
ISO_FORMAT = "%Y-%m-%dT%H:00:00Z"


class Variable(str, enum.Enum):
    IRRADIANCE = "irradiance"
    TEMPERATURE = "temperature"
    WIND = "wind"

    @property
    def nonnegative(self) -> bool:
        return self is not Variable.TEMPERATURE

    @property
    def unit(self) -> str:
        return {"irradiance": "W/m2", "temperature": "K", "wind": "m/s"}[self.value]

    def of(self, sample: WeatherSample) -> float:
        return getattr(sample, self.value)


@dataclass(frozen=True, order=True)
class TimeIndex:
    """Whole UTC hours since the Unix epoch, tagged with the site's UTC offset.

    ``t + n`` and ``t - n`` shift by ``n`` hours; ``t - u`` between two indices
    gives the signed hour difference.
    """

    epoch_hour: int
    site_utc_offset: int = DEFAULT_UTC_OFFSET

    def __post_init__(self):
        if not isinstance(self.epoch_hour, int) or isinstance(self.epoch_hour, bool):
            raise TypeError(f"epoch_hour must be an int, got {self.epoch_hour!r}")

    def __add__(self, hours: int) -> TimeIndex:
        return TimeIndex(self.epoch_hour + int(hours), self.site_utc_offset)

    def __sub__(self, other):
        if isinstance(other, TimeIndex):
            return self.epoch_hour - other.epoch_hour
        return TimeIndex(self.epoch_hour - int(other), self.site_utc_offset)

    @property
    def hour_of_day(self) -> int:
        return hour_of_day(self)

    def to_datetime(self) -> datetime:
        return _EPOCH + timedelta(hours=self.epoch_hour)

    def isoformat(self) -> str:
        return self.to_datetime().strftime(ISO_FORMAT)

    @classmethod
    def from_datetime(cls, dt: datetime, site_utc_offset: int = DEFAULT_UTC_OFFSET) -> TimeIndex:
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        seconds = (dt - _EPOCH).total_seconds()
        if seconds % 3600:
            raise ValueError(f"{dt.isoformat()} is not on a whole hour")
        return cls(int(seconds // 3600), site_utc_offset)

    @classmethod
    def parse(cls, text: str, site_utc_offset: int = DEFAULT_UTC_OFFSET) -> TimeIndex:
        """Parse the strict ``YYYY-MM-DDTHH:00:00Z`` form."""
        dt = datetime.strptime(text, ISO_FORMAT).replace(tzinfo=timezone.utc)
        return cls.from_datetime(dt, site_utc_offset)


def hour_of_day(t: TimeIndex) -> int:
    """Local clock hour bucket in 1..24 (local hour 00 maps to bucket 1)."""
    return (t.epoch_hour + t.site_utc_offset) % HOURS_PER_DAY + 1


@dataclass(frozen=True)
class WeatherSample:
    irradiance: float  # W/m2, downward shortwave
    temperature: float  # K, 2 m air
    wind: float  # m/s, 10 m speed

    def __post_init__(self):
        problems = sample_problems(self.irradiance, self.temperature, self.wind)
        if problems:
            raise ValueError("; ".join(problems))


def sample_problems(irradiance: float, temperature: float, wind: float) -> list[str]:
    out = []
    for name, value in (("irradiance", irradiance), ("temperature", temperature), ("wind", wind)):
        if value != value or value in (float("inf"), float("-inf")):
            out.append(f"{name} is not finite")
    if irradiance < 0:
        out.append(f"irradiance {irradiance} < 0")
    if not temperature > 0:
        out.append(f"temperature {temperature} K is not positive")
    if wind < 0:
        out.append(f"wind {wind} < 0")
    return out


@dataclass(frozen=True)
class ForecastRecord:
    issued_at: TimeIndex
    lead_hours: int
    sample: WeatherSample

    def __post_init__(self):
        if not 0 <= self.lead_hours <= MAX_LEAD_HOURS:
            raise ValueError(f"lead_hours {self.lead_hours} outside 0..{MAX_LEAD_HOURS}")

    @property
    def valid_at(self) -> TimeIndex:
        return self.issued_at + self.lead_hours

    @property
    def key(self) -> tuple[int, int]:
        return (self.issued_at.epoch_hour, self.lead_hours)


@dataclass(frozen=True)
class AlignedSample:
    """One regression row: target at ``valid_at``, measured lag, forecast."""

    hour_of_day: int
    target: float
    lag: float
    exog: float
    valid_at: TimeIndex


@dataclass
class Alignment:
    """Result of :func:`align`.

    ``buckets`` always has all 24 hour keys; each list is sorted by time.
    """

    variable: Variable
    lag: int
    lead: int
    buckets: dict[int, list[AlignedSample]]
    candidates: int
    skipped: int
    skipped_reasons: dict[str, int] = field(default_factory=dict)

    @property
    def emitted(self) -> int:
        return sum(len(b) for b in self.buckets.values())

    def __getitem__(self, hour: int) -> list[AlignedSample]:
        return self.buckets[hour]


def empty_buckets() -> dict[int, list]:
    return {h: [] for h in range(1, HOURS_PER_DAY + 1)}


def align(
    measurements: Mapping[TimeIndex, WeatherSample],
    forecasts: Iterable[ForecastRecord],
    variable: Variable,
    lag: int = DEFAULT_LAG,
    lead: int = DEFAULT_LEAD,
) -> Alignment:
    """Build per-hour regression rows for one variable.

    A candidate target time is any time with either a measurement or a
    forecast of the requested lead valid at it. A row is emitted when the
    measurement at t, the measurement at t - lag, and the lead forecast
    valid at t all exist; otherwise the candidate is counted as skipped.
    """
    variable = Variable(variable)
    if not 1 <= lead <= MAX_LEAD_HOURS:
        raise ValueError(f"lead must be in 1..{MAX_LEAD_HOURS}, got {lead}")
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")

    meas = {t.epoch_hour: (t, s) for t, s in measurements.items()}
    # Duplicate (issued_at, lead) keys should already be resolved upstream;
    # ties are broken on value so the result never depends on input order.
    fc: dict[int, float] = {}
    for rec in forecasts:
        if rec.lead_hours != lead:
            continue
        v = variable.of(rec.sample)
        k = rec.valid_at.epoch_hour
        fc[k] = max(fc[k], v) if k in fc else v

    buckets = empty_buckets()
    reasons = {"no_measurement": 0, "no_lag": 0, "no_forecast": 0}
    candidates = sorted(set(meas) | set(fc))
    skipped = 0
    for k in candidates:
        if k not in meas:
            reasons["no_measurement"] += 1
        elif k - lag not in meas:
            reasons["no_lag"] += 1
        elif k not in fc:
            reasons["no_forecast"] += 1
        else:
            t, sample = meas[k]
            h = hour_of_day(t)
            buckets[h].append(
                AlignedSample(h, variable.of(sample), variable.of(meas[k - lag][1]), fc[k], t)
            )
            continue
        skipped += 1

    result = Alignment(variable, lag, lead, buckets, len(candidates), skipped, reasons)
    if result.emitted == 0:
        raise EmptyAlignment(
            f"no {variable.value} samples could be formed "
            f"(lag={lag}, lead={lead}, candidates={len(candidates)})"
        )
    return result
