"""Stage orchestration shared by the CLI: fit, evaluate and predict."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from pathlib import Path

from .core import DEFAULT_LAG, DEFAULT_LEAD, HOURS_PER_DAY, TimeIndex, Variable, align, hour_of_day
from .errors import DegenerateSplit, IndexMismatch, MissingExogenous, MissingInput, ModelNotFound
from .estimation import Kind, ModelSet, fit_hourly, load_models, predict, predict_samples, save_models
from .evaluation import (
    DEFAULT_POLICY,
    MODEL_ORDER,
    emit_report,
    evaluate_model_set,
    evaluate_raw_forecast,
    forecast_error_series,
    power_comparison,
)
from .ingest import Dataset, SplitSpec, split
from .power import PlantConfig, power

VARIABLES = (Variable.IRRADIANCE, Variable.TEMPERATURE, Variable.WIND)
KINDS = (Kind.AR, Kind.ARX)


@dataclass
class Prepared:
    variable: Variable
    train: dict
    test: dict
    skipped: int
    candidates: int


def prepare(dataset: Dataset, variable, lag=DEFAULT_LAG, lead=DEFAULT_LEAD, spec=SplitSpec()) -> Prepared:
    a = align(dataset.measurements, dataset.forecasts, variable, lag, lead)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSplit)
        train, test = split(a.buckets, spec)
    return Prepared(Variable(variable), train, test, a.skipped, a.candidates)


def _date_range(buckets):
    times = [s.valid_at for rows in buckets.values() for s in rows]
    if not times:
        return None
    return [min(times).isoformat(), max(times).isoformat()]


def fit_all(dataset, lag=DEFAULT_LAG, lead=DEFAULT_LEAD, spec=SplitSpec(), kinds=KINDS) -> dict[tuple[Variable, Kind], ModelSet]:
    out = {}
    for var in VARIABLES:
        prep = prepare(dataset, var, lag, lead, spec)
        meta = {"train_fraction": spec.train_fraction, "train_range": _date_range(prep.train)}
        for kind in kinds:
            out[var, Kind(kind)] = fit_hourly(prep.train, kind, var, lag, lead, meta)
    return out


def model_path(model_dir, variable, kind) -> Path:
    return Path(model_dir) / f"{Variable(variable).value}_{Kind(kind).value.lower()}.json"


def save_all(model_sets, model_dir) -> list[Path]:
    return [save_models(ms, model_path(model_dir, v, k)) for (v, k), ms in sorted(model_sets.items())]


def load_all(model_dir, kinds=KINDS) -> dict[tuple[Variable, Kind], ModelSet]:
    return {(v, Kind(k)): load_models(model_path(model_dir, v, k)) for v in VARIABLES for k in kinds}


def fit_summary_csv(model_sets) -> str:
    """Per-hour parameter table, one row per (variable, kind, hour)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variable", "kind", "hour", "alpha", "beta", "gamma", "sigma_eps", "n_train"])
    for (var, kind), ms in sorted(model_sets.items()):
        for h in range(1, HOURS_PER_DAY + 1):
            m = ms[h]
            w.writerow([var.value, kind.value, h, repr(m.alpha), "" if m.beta is None else repr(m.beta),
                        repr(m.gamma), repr(m.sigma_eps), m.n_train])
    return buf.getvalue()


def evaluate(
    dataset: Dataset,
    model_sets: dict[tuple[Variable, Kind], ModelSet],
    spec: SplitSpec = SplitSpec(),
    plant: PlantConfig = PlantConfig(),
    policy: str = DEFAULT_POLICY,
    capacity: float | None = None,
    site: dict | None = None,
) -> dict:
    """Score AR, ARX and the raw forecast on the test split; returns the report document."""
    lags = {ms.lag for ms in model_sets.values()}
    leads = {ms.lead for ms in model_sets.values()}
    if len(lags) != 1 or len(leads) != 1:
        raise IndexMismatch(f"model sets disagree on lag/lead: lags={sorted(lags)} leads={sorted(leads)}")
    lag, lead = lags.pop(), leads.pop()

    variables, accuracy, forecast_error, tests, preds = {}, {m: {} for m in MODEL_ORDER}, {}, {}, {}
    for var in VARIABLES:
        prep = prepare(dataset, var, lag, lead, spec)
        tests[var] = prep.test
        reports = {"HRRR": evaluate_raw_forecast(var, prep.test, policy, capacity)}
        for kind in KINDS:
            ms = model_sets.get((var, kind))
            if ms is None:
                raise ModelNotFound(f"no {kind.value} model for {var.value}")
            reports[kind.value] = evaluate_model_set(ms, prep.test, policy, capacity)
            preds[var, kind.value] = {
                s.valid_at: p
                for rows in prep.test.values() if rows
                for s, p in zip(rows, predict_samples(ms, rows))
            }
        hashes = {r.index_hash for r in reports.values()}
        if len(hashes) != 1:
            raise IndexMismatch(f"{var.value}: models were scored on different test sets")
        preds[var, "HRRR"] = {s.valid_at: s.exog for rows in prep.test.values() for s in rows}
        variables[var.value] = {
            "index_hash": hashes.pop(),
            "skipped": prep.skipped,
            "candidates": prep.candidates,
            "models": {name: r.to_dict() for name, r in reports.items()},
        }
        for name, r in reports.items():
            accuracy[name][var.value] = r.accuracy_pct
        forecast_error[var.value] = forecast_error_series(
            dataset.measurements, dataset.forecasts, var, lead
        ).to_dict()

    def truth(var):
        return {s.valid_at: s.target for rows in tests[var].values() for s in rows}

    ti, tt = truth(Variable.IRRADIANCE), truth(Variable.TEMPERATURE)
    times = sorted(set(ti) & set(tt))
    pw = None
    if times:
        comparison = power_comparison(
            plant,
            {m: ([preds[Variable.IRRADIANCE, m][t] for t in times],
                 [preds[Variable.TEMPERATURE, m][t] for t in times]) for m in MODEL_ORDER},
            ([ti[t] for t in times], [tt[t] for t in times]),
            times,
        )
        pw = comparison.to_dict()

    return {
        "config": {
            "lag": lag,
            "lead": lead,
            "train_fraction": spec.train_fraction,
            "policy": policy,
            "capacity": capacity,
            "plant": plant.to_dict(),
            "site": dict(site or {}),
        },
        "accuracy": accuracy,
        "forecast_error": forecast_error,
        "variables": variables,
        "power": pw,
    }


def write_reports(doc: dict, out_dir) -> list[Path]:
    paths = []
    for fmt in ("json", "csv", "plot-data"):
        paths.extend(emit_report(doc, fmt, out_dir))
    return paths


def predict_at(
    dataset: Dataset,
    model_sets: dict[tuple[Variable, Kind], ModelSet],
    at: TimeIndex,
    kind: Kind = Kind.ARX,
    plant: PlantConfig = PlantConfig(),
) -> dict:
    """Predict (irradiance, temperature, wind, power) valid at ``at``.

    Inputs come from ``dataset``: the measurement ``lag`` hours earlier and,
    for ARX, the forecast of the model's lead valid at ``at``.
    """
    kind = Kind(kind)
    hour = hour_of_day(at)
    out = {"valid_time_utc": at.isoformat(), "hour_of_day": hour, "kind": kind.value, "models": {}}
    meas = {t.epoch_hour: s for t, s in dataset.measurements.items()}
    values = {}
    for var in VARIABLES:
        ms = model_sets.get((var, kind))
        if ms is None:
            raise ModelNotFound(f"no {kind.value} model for {var.value}")
        lag_sample = meas.get(at.epoch_hour - ms.lag)
        if lag_sample is None:
            raise MissingInput(f"no measurement at {(at - ms.lag).isoformat()} for the {ms.lag} h lag")
        exog = None
        if kind is Kind.ARX:
            fc = [r for r in dataset.forecasts
                  if r.lead_hours == ms.lead and r.valid_at.epoch_hour == at.epoch_hour]
            if not fc:
                raise MissingExogenous(f"no lead-{ms.lead} forecast valid at {at.isoformat()}")
            exog = var.of(fc[-1].sample)
        values[var] = predict(ms, hour, var.of(lag_sample), exog)
        m = ms[hour]
        out["models"][var.value] = {
            "lag": ms.lag, "lead": ms.lead, "alpha": m.alpha, "beta": m.beta, "gamma": m.gamma,
            "sigma_eps": m.sigma_eps, "lag_value": var.of(lag_sample), "exog_value": exog,
        }
    out.update(
        irradiance=values[Variable.IRRADIANCE],
        temperature=values[Variable.TEMPERATURE],
        wind=values[Variable.WIND],
        power_w=power(plant, values[Variable.IRRADIANCE], values[Variable.TEMPERATURE]),
    )
    return out

