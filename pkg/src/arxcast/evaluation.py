"""Error metrics, percentage accuracy, power comparison and report files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import HOURS_PER_DAY, AlignedSample, TimeIndex, Variable
from .errors import EmptyInput, IndexMismatch, LengthMismatch, NoValidHours
from .estimation import ModelSet, predict_samples
from .power import PlantConfig, power_array

POLICIES = ("mean_of_truth_per_hour", "range_of_truth", "fixed_capacity")
DEFAULT_POLICY = POLICIES[0]
DENOMINATOR_EPS = 1e-6
# Temperature normalizers are taken on the Celsius scale; a Kelvin mean
# (~285 K) would put every temperature model above 99 %.
DENOMINATOR_ORIGIN = {Variable.TEMPERATURE: 273.15}
MODEL_ORDER = ("AR", "HRRR", "ARX")
HIST_BINS = 40


def _pair(pred, truth):
    p = np.asarray(pred, dtype=float).ravel()
    t = np.asarray(truth, dtype=float).ravel()
    if p.size != t.size:
        raise LengthMismatch(f"{p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise EmptyInput("cannot score an empty series")
    return p, t


def rmse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def mae(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.mean(np.abs(p - t)))


def index_hash(times: Sequence[TimeIndex]) -> str:
    text = ",".join(str(t.epoch_hour) for t in sorted(times))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ErrorStats:
    rmse: float
    mae: float
    n: int

    def __post_init__(self):
        if self.rmse + 1e-9 * max(1.0, self.rmse) < self.mae or self.mae < 0:
            raise ValueError(f"invalid error stats: rmse={self.rmse}, mae={self.mae}")

    @classmethod
    def of(cls, pred, truth) -> ErrorStats:
        return cls(rmse(pred, truth), mae(pred, truth), int(np.size(truth)))

    def to_dict(self):
        return {"rmse": self.rmse, "mae": self.mae, "n": self.n}


def hourly_rmse_curve(model_set: ModelSet, test_buckets: Mapping[int, Sequence[AlignedSample]]) -> dict[int, float]:
    """Per-hour test RMSE; hours without test samples are absent from the result."""
    out = {}
    for hour in sorted(test_buckets):
        rows = test_buckets[hour]
        if rows:
            out[hour] = rmse(predict_samples(model_set, rows), [s.target for s in rows])
    return out


def accuracy_denominators(
    test_buckets: Mapping[int, Sequence[AlignedSample]],
    variable: Variable,
    policy: str = DEFAULT_POLICY,
    capacity: float | None = None,
) -> dict[int, float]:
    """Per-hour normalizers for :func:`accuracy_pct` computed from the test truth."""
    if policy not in POLICIES:
        raise ValueError(f"unknown accuracy policy {policy!r}; choose from {POLICIES}")
    if policy == "fixed_capacity" and (capacity is None or capacity <= 0):
        raise ValueError("fixed_capacity policy needs a positive capacity")
    origin = DENOMINATOR_ORIGIN.get(Variable(variable), 0.0)
    out = {}
    for hour in sorted(test_buckets):
        truth = np.array([s.target for s in test_buckets[hour]], dtype=float)
        if truth.size == 0:
            continue
        if policy == "mean_of_truth_per_hour":
            out[hour] = float(abs(np.mean(truth) - origin))
        elif policy == "range_of_truth":
            out[hour] = float(np.max(truth) - np.min(truth))
        else:
            out[hour] = float(capacity)
    return out


@dataclass
class Accuracy:
    overall: float
    per_hour: dict[int, float]
    excluded: list[int]


def accuracy_pct(
    per_hour_rmse: Mapping[int, float], denominators: Mapping[int, float], eps: float = DENOMINATOR_EPS
) -> Accuracy:
    """Mean over usable hours of ``100 * (1 - rmse_h / denom_h)``, each clamped to [0, 100].

    Hours with no RMSE or with a denominator at or below ``eps`` are excluded
    and listed.
    """
    per_hour, excluded = {}, []
    for hour in sorted(set(per_hour_rmse) | set(denominators)):
        denom = denominators.get(hour)
        if hour not in per_hour_rmse or denom is None or not denom > eps:
            excluded.append(hour)
            continue
        per_hour[hour] = min(100.0, max(0.0, 100.0 * (1.0 - per_hour_rmse[hour] / denom)))
    if not per_hour:
        raise NoValidHours("no hour has both an RMSE and a usable denominator")
    return Accuracy(float(np.mean(list(per_hour.values()))), per_hour, excluded)


@dataclass
class EvalReport:
    variable: Variable
    model: str
    per_hour: dict[int, ErrorStats]
    overall: ErrorStats
    accuracy: Accuracy
    denominators: dict[int, float]
    index_hash: str

    @property
    def accuracy_pct(self) -> float:
        return self.accuracy.overall

    @property
    def mean_hourly_rmse(self) -> float:
        return float(np.mean([s.rmse for s in self.per_hour.values()]))

    def to_dict(self) -> dict:
        return {
            "variable": self.variable.value,
            "model": self.model,
            "index_hash": self.index_hash,
            "overall": self.overall.to_dict(),
            "mean_hourly_rmse": self.mean_hourly_rmse,
            "accuracy_pct": self.accuracy.overall,
            "excluded_hours": list(self.accuracy.excluded),
            "per_hour": [
                {"hour": h, **self.per_hour[h].to_dict(), "denominator": self.denominators.get(h),
                 "accuracy_pct": self.accuracy.per_hour.get(h)}
                for h in sorted(self.per_hour)
            ],
        }


def evaluate_predictions(
    variable: Variable,
    model: str,
    test_buckets: Mapping[int, Sequence[AlignedSample]],
    predictions: Mapping[int, np.ndarray],
    policy: str = DEFAULT_POLICY,
    capacity: float | None = None,
) -> EvalReport:
    """Score per-hour predictions aligned with ``test_buckets`` rows."""
    per_hour, all_p, all_t, times = {}, [], [], []
    for hour in sorted(test_buckets):
        rows = test_buckets[hour]
        if not rows:
            continue
        p = np.asarray(predictions[hour], dtype=float)
        t = np.array([s.target for s in rows])
        per_hour[hour] = ErrorStats.of(p, t)
        all_p.append(p)
        all_t.append(t)
        times.extend(s.valid_at for s in rows)
    if not per_hour:
        raise EmptyInput(f"no {Variable(variable).value} test samples to evaluate")
    denominators = accuracy_denominators(test_buckets, variable, policy, capacity)
    acc = accuracy_pct({h: s.rmse for h, s in per_hour.items()}, denominators)
    overall = ErrorStats.of(np.concatenate(all_p), np.concatenate(all_t))
    return EvalReport(Variable(variable), model, per_hour, overall, acc, denominators, index_hash(times))


def evaluate_model_set(model_set, test_buckets, policy=DEFAULT_POLICY, capacity=None) -> EvalReport:
    preds = {h: predict_samples(model_set, rows) for h, rows in test_buckets.items() if rows}
    return evaluate_predictions(model_set.variable, model_set.kind.value, test_buckets, preds, policy, capacity)


def evaluate_raw_forecast(variable, test_buckets, policy=DEFAULT_POLICY, capacity=None) -> EvalReport:
    preds = {h: np.array([s.exog for s in rows]) for h, rows in test_buckets.items() if rows}
    return evaluate_predictions(variable, "HRRR", test_buckets, preds, policy, capacity)


@dataclass
class PowerComparison:
    """Per-hour RMS of predicted vs reference power, plus the signed mean gap."""

    hours: list[int]
    n: dict[int, int]
    rms_reference: dict[int, float]
    rms_predicted: dict[str, dict[int, float]]
    mean_signed_rms_error_w: dict[str, float]
    index_hash: str

    def to_dict(self):
        return {
            "index_hash": self.index_hash,
            "mean_signed_rms_error_w": dict(self.mean_signed_rms_error_w),
            "per_hour": [
                {"hour": h, "n": self.n[h], "rms_reference_w": self.rms_reference[h],
                 **{f"rms_{m}_w": self.rms_predicted[m][h] for m in self.rms_predicted}}
                for h in self.hours
            ],
        }


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def power_comparison(
    plant: PlantConfig,
    predictions: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    measured: tuple[Sequence[float], Sequence[float]],
    times: Sequence[TimeIndex],
) -> PowerComparison:
    """Compare power from predicted weather with power from measured weather.

    ``predictions`` maps model name to ``(irradiance, temperature)`` arrays
    and ``measured`` holds the same for the truth; all are indexed by
    ``times``. For every hour of day the RMS of predicted and of reference
    power is taken, and the reported error is the mean over hours of
    ``rms_pred - rms_ref`` (signed).
    """
    n = len(times)
    mi, mt = (np.asarray(a, dtype=float) for a in measured)
    if mi.size != n or mt.size != n:
        raise IndexMismatch(f"measured weather has {mi.size}/{mt.size} rows for {n} times")
    if n == 0:
        raise EmptyInput("no common test times for the power comparison")
    hours_arr = np.array([t.hour_of_day for t in times])
    ref = power_array(plant, mi, mt)
    hours = sorted(set(hours_arr.tolist()))
    counts = {h: int(np.sum(hours_arr == h)) for h in hours}
    rms_ref = {h: _rms(ref[hours_arr == h]) for h in hours}
    rms_pred, mean_err = {}, {}
    for name, (pi, pt) in predictions.items():
        pi, pt = np.asarray(pi, dtype=float), np.asarray(pt, dtype=float)
        if pi.size != n or pt.size != n:
            raise IndexMismatch(f"{name} predictions have {pi.size}/{pt.size} rows for {n} times")
        p = power_array(plant, pi, pt)
        rms_pred[name] = {h: _rms(p[hours_arr == h]) for h in hours}
        mean_err[name] = float(np.mean([rms_pred[name][h] - rms_ref[h] for h in hours]))
    return PowerComparison(hours, counts, rms_ref, rms_pred, mean_err, index_hash(times))


def histogram(values, bins: int = HIST_BINS) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.array([0.0, 1.0]), np.array([0])
    counts, edges = np.histogram(values, bins=bins)
    return edges, counts


@dataclass
class ForecastErrorSeries:
    """Raw lead-L forecast against the lead-0 measurement for one variable."""

    variable: Variable
    lead: int
    times: list[TimeIndex]
    measured: np.ndarray
    forecast: np.ndarray
    stats: ErrorStats | None = field(init=False)

    def __post_init__(self):
        self.stats = ErrorStats.of(self.forecast, self.measured) if self.times else None

    @property
    def errors(self) -> np.ndarray:
        return self.forecast - self.measured

    def to_dict(self):
        edges, counts = histogram(self.errors)
        return {
            "variable": self.variable.value,
            "lead": self.lead,
            "stats": self.stats.to_dict() if self.stats else None,
            "scatter": [[t.isoformat(), float(m), float(f)]
                        for t, m, f in zip(self.times, self.measured, self.forecast)],
            "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
        }


def forecast_error_series(measurements, forecasts, variable, lead: int = 18) -> ForecastErrorSeries:
    variable = Variable(variable)
    fc = {r.valid_at: variable.of(r.sample) for r in forecasts if r.lead_hours == lead}
    times = sorted(t for t in fc if t in measurements)
    return ForecastErrorSeries(
        variable, lead, times,
        np.array([variable.of(measurements[t]) for t in times], dtype=float),
        np.array([fc[t] for t in times], dtype=float),
    )


# -- report files -----------------------------------------------------------

REPORT_FORMATS = ("json", "csv", "plot-data")


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def dumps_report(report) -> str:
    doc = report.to_dict() if hasattr(report, "to_dict") else report
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def accuracy_csv(doc: dict) -> str:
    acc = doc["accuracy"]
    rows = [[m, _num(acc[m].get("irradiance")), _num(acc[m].get("temperature")), _num(acc[m].get("wind"))]
            for m in MODEL_ORDER if m in acc]
    return _csv_text(["model", "irradiance", "temp", "wind"], rows)


def plot_data_files(doc: dict) -> dict[str, str]:
    files = {}
    for var, vdoc in sorted(doc["variables"].items()):
        models = [m for m in MODEL_ORDER if m in vdoc["models"]]
        curves = {m: {e["hour"]: e["rmse"] for e in vdoc["models"][m]["per_hour"]} for m in models}
        rows = [[h] + [_num(curves[m].get(h)) for m in models] for h in range(1, HOURS_PER_DAY + 1)]
        files[f"hourly_rmse_{var}.csv"] = _csv_text(["hour"] + models, rows)

        fe = doc["forecast_error"][var]
        files[f"forecast_error_scatter_{var}.csv"] = _csv_text(
            ["valid_time_utc", "measured", "forecast", "error"],
            [[t, _num(m), _num(f), _num(f - m)] for t, m, f in fe["scatter"]],
        )
        edges, counts = fe["histogram"]["edges"], fe["histogram"]["counts"]
        files[f"forecast_error_hist_{var}.csv"] = _csv_text(
            ["bin_left", "bin_right", "count"],
            [[_num(edges[i]), _num(edges[i + 1]), counts[i]] for i in range(len(counts))],
        )

    pw = doc.get("power")
    if pw:
        models = [m for m in MODEL_ORDER if m in pw["mean_signed_rms_error_w"]]
        rows = [[e["hour"], e["n"], _num(e["rms_reference_w"])] + [_num(e[f"rms_{m}_w"]) for m in models]
                for e in pw["per_hour"]]
        rows.append(["mean_signed_rms_error", "", ""] + [_num(pw["mean_signed_rms_error_w"][m]) for m in models])
        files["power_comparison.csv"] = _csv_text(
            ["hour", "n", "rms_reference_w"] + [f"rms_{m}_w" for m in models], rows
        )
    return files


def emit_report(report, fmt: str, out_dir: str | os.PathLike) -> list[Path]:
    """Write ``report`` (an object with ``to_dict`` or the dict itself) in ``fmt``.

    ``json`` writes report.json, ``csv`` writes accuracy.csv and ``plot-data``
    writes the per-figure CSV series. Output is byte-stable.
    """
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; choose from {REPORT_FORMATS}")
    doc = report.to_dict() if hasattr(report, "to_dict") else report
    doc = json.loads(dumps_report(doc))  # normalise numpy scalars, tuples and key types
    if fmt == "json":
        files = {"report.json": dumps_report(doc)}
    elif fmt == "csv":
        files = {"accuracy.csv": accuracy_csv(doc)}
    else:
        files = plot_data_files(doc)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)
    return written

