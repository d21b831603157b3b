"""Per-hour AR / ARX(1,1) estimation by ordinary least squares.

The ARX model for one variable and one hour of day is::

    x_hat[t] = alpha * x_meas[t - lag] + beta * x_fcst[t] + gamma

and the AR reference drops the forecast term. Each of the 24 hour buckets is
fitted independently.
"""

from __future__ import annotations

import enum
import json
import math
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DEFAULT_LAG, DEFAULT_LEAD, HOURS_PER_DAY, AlignedSample, Variable
from .errors import (
    CorruptFile,
    MissingExogenous,
    ModelNotFound,
    Singular,
    Underdetermined,
    VersionMismatch,
)

SCHEMA_VERSION = 1
CONDITION_WARN = 1e8
# degenerate-bucket rule: a (near) constant zero target gets the zero model
ZERO_VAR_TOL = 1e-12
ZERO_MEAN_TOL = 1e-9


class Kind(str, enum.Enum):
    AR = "AR"
    ARX = "ARX"


@dataclass
class FitDiagnostics:
    residuals: np.ndarray
    condition_warning: bool = False
    degenerate: bool = False
    std_errors: np.ndarray | None = None
    condition_number: float = 1.0
    columns: tuple[str, ...] = ()


@dataclass
class OLSResult:
    coefficients: np.ndarray
    sigma: float
    diagnostics: FitDiagnostics


def residual_std(residuals) -> float:
    r = np.asarray(residuals, dtype=float)
    return float(np.std(r, ddof=1)) if r.size > 1 else 0.0


def fit_ols(X, y) -> OLSResult:
    """Least squares via a column-equilibrated Householder QR.

    ``X`` is the full ``(n, k)`` design (include a ones column for an
    intercept). ``sigma`` is the sample standard deviation of the residuals.

    Raises :class:`Underdetermined` when ``n < k`` and :class:`Singular` when
    the design is numerically rank deficient.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise ValueError(f"target shape {y.shape} does not match design rows {n}")
    if k == 0:
        raise ValueError("design has no columns")
    if n < k:
        raise Underdetermined(f"{n} rows for {k} unknowns")

    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        raise Singular(f"all-zero design column(s) {np.flatnonzero(scale == 0).tolist()}")
    Q, R = np.linalg.qr(X / scale, mode="reduced")
    d = np.abs(np.diag(R))
    if d.min() <= max(n, k) * np.finfo(float).eps * d.max():
        raise Singular("design matrix is rank deficient")
    z = np.linalg.solve(np.triu(R), Q.T @ y) if k > 1 else (Q.T @ y) / R[0, 0]
    coef = z / scale

    residuals = y - X @ coef
    sigma = residual_std(residuals)
    cond = float(np.linalg.cond(R))
    Rinv = np.linalg.inv(np.triu(R))
    dof = n - k
    s2 = float(residuals @ residuals) / dof if dof > 0 else 0.0
    std_errors = np.sqrt(s2 * np.sum(Rinv**2, axis=1)) / scale
    diag = FitDiagnostics(residuals, cond > CONDITION_WARN, False, std_errors, cond)
    return OLSResult(coef, sigma, diag)


@dataclass(frozen=True)
class HourlyModel:
    hour: int
    alpha: float
    beta: float | None
    gamma: float
    sigma_eps: float
    n_train: int

    def __post_init__(self):
        if not 1 <= self.hour <= HOURS_PER_DAY:
            raise ValueError(f"hour {self.hour} outside 1..24")
        if self.sigma_eps < 0 or self.n_train < 0:
            raise ValueError("sigma_eps and n_train must be nonnegative")

    @property
    def kind(self) -> Kind:
        return Kind.AR if self.beta is None else Kind.ARX

    def raw(self, lag_value, exog_value=None):
        """Unfloored prediction; works elementwise on arrays."""
        out = self.alpha * lag_value + self.gamma
        if self.beta is not None:
            if exog_value is None:
                raise MissingExogenous(f"ARX model for hour {self.hour} needs a forecast input")
            out = out + self.beta * exog_value
        elif exog_value is not None:
            raise ValueError(f"AR model for hour {self.hour} takes no forecast input")
        return out


@dataclass
class ModelSet:
    variable: Variable
    kind: Kind
    models: dict[int, HourlyModel]
    lag: int = DEFAULT_LAG
    lead: int = DEFAULT_LEAD
    fit_metadata: dict = field(default_factory=dict, compare=False)
    diagnostics: dict[int, FitDiagnostics] = field(default_factory=dict, compare=False, repr=False)
    warnings: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.variable = Variable(self.variable)
        self.kind = Kind(self.kind)
        if sorted(self.models) != list(range(1, HOURS_PER_DAY + 1)):
            raise ValueError("a model set needs exactly one model per hour 1..24")
        for h, m in self.models.items():
            if m.hour != h or m.kind is not self.kind:
                raise ValueError(f"model for hour {h} is inconsistent with the set")

    def __getitem__(self, hour: int) -> HourlyModel:
        return self.models[hour]

    @property
    def name(self) -> str:
        return f"{self.variable.value}_{self.kind.value.lower()}"


def _zero_model(hour, kind, targets):
    resid = np.asarray(targets, dtype=float)
    beta = None if kind is Kind.AR else 0.0
    return HourlyModel(hour, 0.0, beta, 0.0, residual_std(resid), len(resid)), resid


# Column sets to try, most complete first; a failed solve falls through.
_CANDIDATES = {
    Kind.ARX: (("lag", "exog", "const"), ("exog", "const"), ("lag", "const"), ("const",)),
    Kind.AR: (("lag", "const"), ("const",)),
}


def fit_bucket(hour: int, samples: Sequence[AlignedSample], kind: Kind) -> tuple[HourlyModel, FitDiagnostics, list[str]]:
    kind = Kind(kind)
    notes = []
    y = np.array([s.target for s in samples], dtype=float)
    if y.size == 0:
        model, resid = _zero_model(hour, kind, y)
        return model, FitDiagnostics(resid, degenerate=True), [f"hour {hour}: no training samples, zero model"]
    if (np.var(y, ddof=1) if y.size > 1 else 0.0) < ZERO_VAR_TOL and abs(y.mean()) < ZERO_MEAN_TOL:
        model, resid = _zero_model(hour, kind, y)
        return model, FitDiagnostics(resid, degenerate=True), notes

    cols = {
        "lag": np.array([s.lag for s in samples], dtype=float),
        "exog": np.array([s.exog for s in samples], dtype=float),
        "const": np.ones_like(y),
    }
    for names in _CANDIDATES[kind]:
        try:
            res = fit_ols(np.column_stack([cols[c] for c in names]), y)
        except (Singular, Underdetermined) as exc:
            notes.append(f"hour {hour}: dropping regressors from {names} ({exc})")
            continue
        coef = dict(zip(names, res.coefficients.tolist()))
        beta = coef.get("exog", 0.0) if kind is Kind.ARX else None
        model = HourlyModel(hour, coef.get("lag", 0.0), beta, coef["const"], res.sigma, int(y.size))
        res.diagnostics.columns = names
        if res.diagnostics.condition_warning:
            notes.append(f"hour {hour}: ill-conditioned design (cond={res.diagnostics.condition_number:.3g})")
        return model, res.diagnostics, notes
    raise AssertionError("intercept-only fit cannot fail on a nonempty bucket")


def fit_hourly(
    buckets: Mapping[int, Sequence[AlignedSample]],
    kind: Kind,
    variable: Variable,
    lag: int = DEFAULT_LAG,
    lead: int = DEFAULT_LEAD,
    metadata: dict | None = None,
) -> ModelSet:
    """Fit one model per hour bucket; hours missing from ``buckets`` get the zero model."""
    buckets = getattr(buckets, "buckets", buckets)
    kind = Kind(kind)
    models, diags, notes = {}, {}, []
    for hour in range(1, HOURS_PER_DAY + 1):
        m, d, n = fit_bucket(hour, buckets.get(hour, ()), kind)
        models[hour], diags[hour] = m, d
        notes.extend(n)
    return ModelSet(Variable(variable), kind, models, lag, lead, dict(metadata or {}), diags, notes)


def predict(
    model_set: ModelSet, hour: int, lag_value: float, exog_value: float | None = None, *, floor: bool = True
) -> float:
    """Conditional-mean prediction for the given hour bucket.

    Irradiance and wind predictions are floored at 0 unless ``floor=False``.
    """
    if model_set.kind is Kind.ARX and exog_value is None:
        raise MissingExogenous(f"{model_set.name} needs the lead-{model_set.lead} forecast value")
    value = float(model_set[hour].raw(lag_value, exog_value))
    if floor and model_set.variable.nonnegative:
        value = max(value, 0.0)
    return value


def predict_samples(model_set: ModelSet, samples: Sequence[AlignedSample], *, floor: bool = True) -> np.ndarray:
    out = np.empty(len(samples))
    for i, s in enumerate(samples):
        exog = s.exog if model_set.kind is Kind.ARX else None
        out[i] = predict(model_set, s.hour_of_day, s.lag, exog, floor=floor)
    return out


def in_sample_rmse(model: HourlyModel, samples: Sequence[AlignedSample]) -> float:
    """Root mean squared residual of the unfloored fit over ``samples``."""
    if not samples:
        return 0.0
    lag = np.array([s.lag for s in samples])
    exog = np.array([s.exog for s in samples]) if model.beta is not None else None
    y = np.array([s.target for s in samples])
    r = y - model.raw(lag, exog)
    return float(np.sqrt(np.mean(r**2)))


# -- model files ------------------------------------------------------------


def models_to_dict(model_set: ModelSet) -> dict:
    entries = []
    for h in range(1, HOURS_PER_DAY + 1):
        m = model_set[h]
        e = {"hour": h, "alpha": m.alpha}
        if m.beta is not None:
            e["beta"] = m.beta
        e.update(gamma=m.gamma, sigma_eps=m.sigma_eps, n_train=m.n_train)
        entries.append(e)
    return {
        "schema_version": SCHEMA_VERSION,
        "variable": model_set.variable.value,
        "kind": model_set.kind.value,
        "lag": model_set.lag,
        "lead": model_set.lead,
        "models": entries,
    }


def models_from_dict(doc: dict) -> ModelSet:
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptFile("model document has no schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise VersionMismatch(f"model schema {doc['schema_version']!r}, expected {SCHEMA_VERSION}")
    try:
        kind = Kind(doc["kind"])
        models = {}
        for e in doc["models"]:
            beta = e.get("beta")
            if (beta is None) != (kind is Kind.AR):
                raise CorruptFile(f"hour {e.get('hour')}: beta presence does not match kind {kind.value}")
            m = HourlyModel(int(e["hour"]), float(e["alpha"]), None if beta is None else float(beta),
                            float(e["gamma"]), float(e["sigma_eps"]), int(e["n_train"]))
            if m.hour in models:
                raise CorruptFile(f"duplicate entry for hour {m.hour}")
            models[m.hour] = m
        return ModelSet(Variable(doc["variable"]), kind, models, int(doc["lag"]), int(doc["lead"]))
    except CorruptFile:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"invalid model document: {exc}") from exc


def save_models(model_set: ModelSet, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = models_to_dict(model_set)
    for e in doc["models"]:
        for k in ("alpha", "beta", "gamma", "sigma_eps"):
            if k in e and not math.isfinite(e[k]):
                raise ValueError(f"non-finite {k} for hour {e['hour']}")
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def load_models(path: str | os.PathLike) -> ModelSet:
    path = Path(path)
    if not path.is_file():
        raise ModelNotFound(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    return models_from_dict(doc)
