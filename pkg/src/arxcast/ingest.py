"""Archive fetching, canonical point-CSV I/O, dataset assembly and splitting."""

from __future__ import annotations

import csv
import logging
import math
import os
import tempfile
import time
import urllib.error
import urllib.request
import warnings
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    DEFAULT_UTC_OFFSET,
    MAX_LEAD_HOURS,
    AlignedSample,
    ForecastRecord,
    TimeIndex,
    WeatherSample,
    sample_problems,
)
from .errors import (
    DegenerateSplit,
    EmptyInput,
    NetworkError,
    NotFound,
    RowError,
    SchemaError,
)

log = logging.getLogger(__name__)

CSV_HEADER = ("valid_time_utc", "issued_time_utc", "lead_hours", "dswrf_wm2", "t2m_k", "wind10_ms")
CACHE_ENV = "ARXCAST_CACHE_DIR"
# Utah MesoWest HRRR archive (surface fields). Slots: {date} YYYYMMDD, {cycle} HH, {lead} LL.
DEFAULT_URL_TEMPLATE = (
    "https://pando-rgw01.chpc.utah.edu/hrrr/sfc/{date}/hrrr.t{cycle}z.wrfsfcf{lead}.grib2"
)


# -- fetching ---------------------------------------------------------------


def archive_url(url_template: str, cycle: TimeIndex, lead: int) -> str:
    for slot in ("{date}", "{cycle}", "{lead}"):
        if slot not in url_template:
            raise ValueError(f"url template is missing the {slot} slot: {url_template}")
    dt = cycle.to_datetime()
    return url_template.format(date=dt.strftime("%Y%m%d"), cycle=dt.strftime("%H"), lead=f"{lead:02d}")


def cache_path(cache_dir: str | os.PathLike, cycle: TimeIndex, lead: int) -> Path:
    dt = cycle.to_datetime()
    return Path(cache_dir) / dt.strftime("%Y%m%d") / f"{dt:%H}z" / f"f{lead:02d}"


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "arxcast"))


def _download(url, timeout):
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as exc:
        if exc.code == 404:
            raise NotFound(f"archive file not found: {url}", url=url) from exc
        raise NetworkError(f"HTTP {exc.code} fetching {url}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise NetworkError(f"failed to fetch {url}: {exc}") from exc


def fetch_archive(
    url_template: str,
    cycle: TimeIndex,
    lead: int,
    cache_dir: str | os.PathLike | None = None,
    *,
    retries: int = 2,
    timeout: float = 60.0,
    backoff: float = 1.0,
) -> Path:
    """Return the cached archive file for ``(cycle, lead)``, downloading it if needed.

    A cached file counts as present only when it is nonempty. Downloads are
    written to a temporary file and renamed into place, so concurrent callers
    never observe a partial file.

    Raises
    ------
    NotFound
        The server answered 404. Not retried.
    NetworkError
        Any other transport failure, after ``retries`` extra attempts.
    """
    if not 0 <= lead <= MAX_LEAD_HOURS:
        raise ValueError(f"lead {lead} outside 0..{MAX_LEAD_HOURS}")
    cache_dir = default_cache_dir() if cache_dir is None else Path(cache_dir)
    target = cache_path(cache_dir, cycle, lead)
    if target.is_file() and target.stat().st_size > 0:
        return target

    url = archive_url(url_template, cycle, lead)
    for attempt in range(retries + 1):
        try:
            payload = _download(url, timeout)
            if not payload:
                raise NetworkError(f"empty response body from {url}")
            break
        except NetworkError:
            if attempt == retries:
                raise
            time.sleep(backoff * 2**attempt)

    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".part-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


@dataclass
class FetchSummary:
    requested: int = 0
    downloaded: int = 0
    cached: int = 0
    missing: list[tuple[str, int]] = field(default_factory=list)  # (cycle iso, lead) gaps
    failed: list[tuple[str, int, str]] = field(default_factory=list)


def fetch_many(
    url_template: str,
    cycles: Sequence[TimeIndex],
    leads: Sequence[int],
    cache_dir: str | os.PathLike | None = None,
    *,
    max_workers: int = 4,
    **kwargs,
) -> FetchSummary:
    """Fetch every (cycle, lead) pair with at most ``max_workers`` in flight.

    404s are recorded as gaps; other failures are collected in ``failed``.
    """
    cache_dir = default_cache_dir() if cache_dir is None else Path(cache_dir)
    jobs = [(c, lead) for c in cycles for lead in leads]
    summary = FetchSummary(requested=len(jobs))

    def one(job):
        cycle, lead = job
        was_cached = cache_path(cache_dir, cycle, lead).is_file() and (
            cache_path(cache_dir, cycle, lead).stat().st_size > 0
        )
        try:
            fetch_archive(url_template, cycle, lead, cache_dir, **kwargs)
        except NotFound:
            return job, "missing", ""
        except NetworkError as exc:
            return job, "failed", str(exc)
        return job, "cached" if was_cached else "downloaded", ""

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        for (cycle, lead), status, msg in pool.map(one, jobs):
            if status == "missing":
                summary.missing.append((cycle.isoformat(), lead))
            elif status == "failed":
                summary.failed.append((cycle.isoformat(), lead, msg))
            elif status == "cached":
                summary.cached += 1
            else:
                summary.downloaded += 1
    return summary


# -- canonical CSV ----------------------------------------------------------


def parse_point_csv(path: str | os.PathLike, site_utc_offset: int = DEFAULT_UTC_OFFSET) -> list[ForecastRecord]:
    """Read a canonical point-series CSV.

    All bad rows are collected before raising, so a single :class:`RowError`
    lists every offending row number.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file, expected header {','.join(CSV_HEADER)}")
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise SchemaError(
                f"{path}: header {','.join(header)!r} does not match {','.join(CSV_HEADER)!r}"
            )
        records, bad = [], []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(_parse_row(row, site_utc_offset))
            except ValueError as exc:
                bad.append((rowno, str(exc)))
    if bad:
        raise RowError(bad)
    return records


def _parse_row(row, offset):
    if len(row) != len(CSV_HEADER):
        raise ValueError(f"expected {len(CSV_HEADER)} fields, got {len(row)}")
    valid_s, issued_s, lead_s, irr_s, temp_s, wind_s = (c.strip() for c in row)
    try:
        valid = TimeIndex.parse(valid_s, offset)
        issued = TimeIndex.parse(issued_s, offset)
    except ValueError:
        raise ValueError(f"bad timestamp in {valid_s!r} / {issued_s!r}") from None
    lead = int(lead_s)
    if not 0 <= lead <= MAX_LEAD_HOURS:
        raise ValueError(f"lead_hours {lead} outside 0..{MAX_LEAD_HOURS}")
    if valid - issued != lead:
        raise ValueError(f"valid - issued = {valid - issued} h but lead_hours = {lead}")
    irr, temp, wind = float(irr_s), float(temp_s), float(wind_s)
    problems = sample_problems(irr, temp, wind)
    if problems:
        raise ValueError("; ".join(problems))
    return ForecastRecord(issued, lead, WeatherSample(irr, temp, wind))


def write_point_csv(records: Iterable[ForecastRecord], path: str | os.PathLike) -> Path:
    """Write records in canonical form, sorted by (issued, lead); floats use repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted(records, key=lambda r: r.key)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            s = r.sample
            w.writerow(
                [r.valid_at.isoformat(), r.issued_at.isoformat(), r.lead_hours,
                 repr(float(s.irradiance)), repr(float(s.temperature)), repr(float(s.wind))]
            )
    return path


# -- dataset ----------------------------------------------------------------


@dataclass
class Dataset:
    site_id: str
    measurements: dict[TimeIndex, WeatherSample]
    forecasts: list[ForecastRecord]
    provenance: tuple[str, ...] = ()
    duplicates: int = 0

    def records(self) -> list[ForecastRecord]:
        return list(self.forecasts)

    def lead(self, lead: int) -> list[ForecastRecord]:
        return [r for r in self.forecasts if r.lead_hours == lead]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.site_id, self.measurements, self.forecasts) == (
            other.site_id, other.measurements, other.forecasts,
        )


def build_dataset(
    records: Iterable[ForecastRecord], site_id: str = "site", provenance: Sequence[str] = ()
) -> Dataset:
    """Assemble a dataset; lead-0 records double as the measurement stream.

    Duplicate (issued_at, lead) keys are resolved last-write-wins; the number
    of overwritten records is stored in ``duplicates`` and logged.
    """
    by_key: dict[tuple[int, int], ForecastRecord] = {}
    dupes = 0
    for rec in records:
        if rec.key in by_key:
            dupes += 1
        by_key[rec.key] = rec
    if not by_key:
        raise EmptyInput("no forecast records to build a dataset from")
    if dupes:
        log.warning("%d duplicate (issued_at, lead) record(s) replaced", dupes)
    forecasts = [by_key[k] for k in sorted(by_key)]
    measurements = {r.valid_at: r.sample for r in forecasts if r.lead_hours == 0}
    return Dataset(site_id, measurements, forecasts, tuple(provenance), dupes)


def load_dataset(paths, site_id="site", site_utc_offset=DEFAULT_UTC_OFFSET) -> Dataset:
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    records = []
    for p in paths:
        records.extend(parse_point_csv(p, site_utc_offset))
    return build_dataset(records, site_id, provenance=[str(p) for p in paths])


# -- splitting --------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    mode: str = "chronological"

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.mode != "chronological":
            raise ValueError(f"unsupported split mode {self.mode!r}")

    def n_train(self, n: int) -> int:
        # round() first so 0.7 * 10 = 7.000000000000001 does not ceil to 8
        return math.ceil(round(self.train_fraction * n, 9))


def split(
    buckets: Mapping[int, Sequence[AlignedSample]], spec: SplitSpec = SplitSpec()
) -> tuple[dict[int, list[AlignedSample]], dict[int, list[AlignedSample]]]:
    """Chronological per-bucket split: the first ceil(f * n) samples train."""
    buckets = getattr(buckets, "buckets", buckets)
    train, test = {}, {}
    degenerate = []
    for hour in sorted(buckets):
        rows = sorted(buckets[hour], key=lambda s: s.valid_at)
        k = spec.n_train(len(rows))
        train[hour], test[hour] = rows[:k], rows[k:]
        if rows and not test[hour]:
            degenerate.append(hour)
    if degenerate:
        warnings.warn(
            DegenerateSplit(f"empty test set for hour(s) {degenerate}"), stacklevel=2
        )
    return train, test
