import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arxcast.core import AlignedSample, TimeIndex
from arxcast.errors import (
    DegenerateSplit,
    EmptyInput,
    NetworkError,
    NotFound,
    RowError,
    SchemaError,
)
from arxcast.ingest import (
    CSV_HEADER,
    SplitSpec,
    archive_url,
    build_dataset,
    cache_path,
    fetch_archive,
    fetch_many,
    parse_point_csv,
    split,
    write_point_csv,
)
from arxcast.synthetic import SyntheticConfig, generate

TEMPLATE_PATH = "/hrrr/{date}/hrrr.t{cycle}z.wrfsfcf{lead}.grib2"
CYCLE = TimeIndex.parse("2018-01-15T06:00:00Z")


@pytest.fixture
def archive_server(http_archive):
    root, base, server = http_archive
    return root, base + TEMPLATE_PATH, server


def _publish(root, cycle, lead, payload=b"GRIB-bytes"):
    dt = cycle.to_datetime()
    p = root / "hrrr" / dt.strftime("%Y%m%d") / f"hrrr.t{dt:%H}z.wrfsfcf{lead:02d}.grib2"
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(payload)


def test_archive_url_substitution():
    url = archive_url("https://example.org" + TEMPLATE_PATH, CYCLE, 18)
    assert url == "https://example.org/hrrr/20180115/hrrr.t06z.wrfsfcf18.grib2"
    with pytest.raises(ValueError):
        archive_url("https://example.org/{date}/{cycle}", CYCLE, 18)


def test_cache_layout(tmp_path):
    assert cache_path(tmp_path, CYCLE, 0) == tmp_path / "20180115" / "06z" / "f00"


def test_fetch_downloads_then_hits_cache(archive_server, tmp_path):
    root, template, server = archive_server
    _publish(root, CYCLE, 18)
    cache = tmp_path / "cache"
    p = fetch_archive(template, CYCLE, 18, cache)
    assert p == cache / "20180115" / "06z" / "f18"
    assert p.read_bytes() == b"GRIB-bytes"
    assert len(server.hits) == 1
    assert fetch_archive(template, CYCLE, 18, cache) == p
    assert len(server.hits) == 1
    assert not [f for f in p.parent.iterdir() if f.name.startswith(".part-")]


def test_cached_file_means_no_network(tmp_path):
    target = cache_path(tmp_path, CYCLE, 0)
    target.parent.mkdir(parents=True)
    target.write_bytes(b"x")
    # unroutable template: any network attempt would fail
    assert fetch_archive("http://127.0.0.1:9" + TEMPLATE_PATH, CYCLE, 0, tmp_path, retries=0) == target


def test_fetch_404_is_not_found(archive_server, tmp_path):
    _, template, server = archive_server
    with pytest.raises(NotFound) as err:
        fetch_archive(template, CYCLE, 18, tmp_path)
    assert err.value.url.endswith("hrrr.t06z.wrfsfcf18.grib2")
    assert len(server.hits) == 1  # 404 is not retried


def test_fetch_connection_refused_is_network_error(tmp_path):
    with pytest.raises(NetworkError):
        fetch_archive("http://127.0.0.1:9" + TEMPLATE_PATH, CYCLE, 0, tmp_path, retries=1, backoff=0)


def test_empty_cached_file_is_refetched(archive_server, tmp_path):
    root, template, server = archive_server
    _publish(root, CYCLE, 0)
    target = cache_path(tmp_path, CYCLE, 0)
    target.parent.mkdir(parents=True)
    target.write_bytes(b"")
    assert fetch_archive(template, CYCLE, 0, tmp_path).read_bytes() == b"GRIB-bytes"
    assert len(server.hits) == 1


def test_fetch_many_records_gaps(archive_server, tmp_path):
    root, template, _ = archive_server
    cycles = [CYCLE + h for h in range(3)]
    for c in cycles:
        _publish(root, c, 0)
    _publish(root, cycles[0], 18)
    s = fetch_many(template, cycles, [0, 18], tmp_path, max_workers=3)
    assert s.requested == 6 and s.downloaded == 4
    assert sorted(s.missing) == [("2018-01-15T07:00:00Z", 18), ("2018-01-15T08:00:00Z", 18)]
    again = fetch_many(template, cycles, [0, 18], tmp_path)
    assert again.cached == 4 and again.downloaded == 0


def test_cache_root_env(monkeypatch, tmp_path):
    from arxcast.ingest import default_cache_dir

    monkeypatch.setenv("ARXCAST_CACHE_DIR", str(tmp_path))
    assert default_cache_dir() == tmp_path


# -- CSV --------------------------------------------------------------------

GOOD = """valid_time_utc,issued_time_utc,lead_hours,dswrf_wm2,t2m_k,wind10_ms
2018-01-15T06:00:00Z,2018-01-15T06:00:00Z,0,0.0,280.5,2.5
2018-01-16T00:00:00Z,2018-01-15T06:00:00Z,18,410.25,289.0,3.75
2018-01-15T07:00:00Z,2018-01-15T07:00:00Z,0,0.0,280.1,2.0
"""


def _write(tmp_path, text, name="p.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_parse_well_formed(tmp_path):
    recs = parse_point_csv(_write(tmp_path, GOOD))
    assert len(recs) == 3
    r = recs[1]
    assert r.lead_hours == 18 and r.issued_at == CYCLE
    assert r.valid_at.isoformat() == "2018-01-16T00:00:00Z"
    assert (r.sample.irradiance, r.sample.temperature, r.sample.wind) == (410.25, 289.0, 3.75)


def test_parse_negative_irradiance_names_row(tmp_path):
    text = GOOD.replace("410.25", "-5.0")
    with pytest.raises(RowError) as err:
        parse_point_csv(_write(tmp_path, text))
    assert [n for n, _ in err.value.rows] == [3]
    assert "row 3" in str(err.value) and "irradiance" in str(err.value)


def test_parse_reports_every_bad_row(tmp_path):
    text = GOOD.replace("280.5", "-1").replace("2018-01-15T07:00:00Z,0", "2018-01-15T07:00:00Z,3")
    with pytest.raises(RowError) as err:
        parse_point_csv(_write(tmp_path, text))
    assert [n for n, _ in err.value.rows] == [2, 4]


def test_parse_wind_in_kmh_is_schema_error(tmp_path):
    text = GOOD.replace("wind10_ms", "wind10_kmh")
    with pytest.raises(SchemaError):
        parse_point_csv(_write(tmp_path, text))


def test_parse_empty_file_is_schema_error(tmp_path):
    with pytest.raises(SchemaError):
        parse_point_csv(_write(tmp_path, ""))


def test_header_constant():
    assert ",".join(CSV_HEADER) == "valid_time_utc,issued_time_utc,lead_hours,dswrf_wm2,t2m_k,wind10_ms"


# -- dataset ----------------------------------------------------------------


def test_build_dataset_leads_0_and_18(make_record):
    ds = build_dataset([make_record(1000, 0), make_record(1000, 18)])
    assert len(ds.measurements) == 1 and len(ds.forecasts) == 2


def test_build_dataset_duplicate_is_last_write_wins(make_record, caplog):
    ds = build_dataset([make_record(1000, 0, irr=1.0), make_record(1000, 0, irr=2.0)])
    assert ds.duplicates == 1 and len(ds.forecasts) == 1
    assert ds.measurements[TimeIndex(1000, 0)].irradiance == 2.0
    assert "duplicate" in caplog.text


def test_build_dataset_empty():
    with pytest.raises(EmptyInput):
        build_dataset([])


def test_measurement_count_over_six_months():
    full = generate(SyntheticConfig(days=181, seed=4)).forecasts
    # drop every 7th lead-0 record and re-publish every 50th record
    kept = [r for i, r in enumerate(full) if not (r.lead_hours == 0 and i % 7 == 0)]
    records = kept + kept[::50]
    expected = len({r.valid_at.epoch_hour for r in records if r.lead_hours == 0})
    ds = build_dataset(records)
    assert len(ds.measurements) == expected
    assert 0 < expected < 181 * 24
    assert ds.duplicates == len(kept[::50])


def test_measurements_equal_lead0_stream(small_dataset):
    lead0 = {r.valid_at: r.sample for r in small_dataset.lead(0)}
    assert lead0 == small_dataset.measurements


def test_csv_round_trip(tmp_path, small_dataset):
    p = write_point_csv(small_dataset.forecasts, tmp_path / "x.csv")
    back = build_dataset(parse_point_csv(p), small_dataset.site_id)
    assert back == small_dataset
    p2 = write_point_csv(back.forecasts, tmp_path / "y.csv")
    assert p.read_bytes() == p2.read_bytes()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 500), st.integers(0, 18),
                          st.floats(0, 1400), st.floats(200, 330), st.floats(0, 40)), min_size=1, max_size=40))
def test_csv_round_trip_property(tmp_path_factory, raw):
    from arxcast.core import ForecastRecord, WeatherSample

    records = [ForecastRecord(TimeIndex(424000 + i, -8), lead, WeatherSample(a, b, c)) for i, lead, a, b, c in raw]
    ds = build_dataset(records)
    p = write_point_csv(ds.forecasts, tmp_path_factory.mktemp("rt") / "r.csv")
    assert build_dataset(parse_point_csv(p)) == ds


# -- split ------------------------------------------------------------------


def _bucket(n, start=0):
    return [AlignedSample(1, float(i), 0.0, 0.0, TimeIndex(start + 24 * i)) for i in range(n)]


def test_split_three_to_one():
    train, test = split({1: _bucket(4)}, SplitSpec(0.75))
    assert (len(train[1]), len(test[1])) == (3, 1)


def test_split_single_sample_warns():
    with pytest.warns(DegenerateSplit):
        train, test = split({1: _bucket(1)}, SplitSpec(0.75))
    assert (len(train[1]), len(test[1])) == (1, 0)


def test_split_half_is_chronological():
    rows = _bucket(10)
    shuffled = rows[5:] + rows[:5]
    train, test = split({1: shuffled}, SplitSpec(0.5))
    assert (len(train[1]), len(test[1])) == (5, 5)
    assert max(s.valid_at for s in train[1]) < min(s.valid_at for s in test[1])


def test_split_fraction_rounding():
    assert SplitSpec(0.7).n_train(10) == 7
    assert SplitSpec(0.75).n_train(7) == 6


def test_split_spec_validation():
    for f in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            SplitSpec(f)


@given(st.integers(0, 60), st.floats(0.05, 0.95))
def test_split_is_a_partition(n, f):
    rows = _bucket(n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSplit)
        train, test = split({1: rows, 2: []}, SplitSpec(f))
    assert train[1] + test[1] == rows
    assert not set(s.valid_at for s in train[1]) & set(s.valid_at for s in test[1])
    if train[1] and test[1]:
        assert train[1][-1].valid_at < test[1][0].valid_at
    assert train[2] == test[2] == []

