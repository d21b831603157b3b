"""Command-line interface.

    arxcast synth     write a seeded synthetic dataset as canonical CSV
    arxcast fetch     populate the archive cache for a date range
    arxcast ingest    validate and merge point CSVs into one dataset file
    arxcast fit       fit per-hour AR/ARX models, write model files + summary
    arxcast evaluate  score AR, ARX and the raw forecast on the test split
    arxcast predict   18 h ahead weather and power for one valid time

Settings come from defaults, then the ``--config`` JSON file, then the
ARXCAST_CACHE_DIR / ARXCAST_OUT_DIR environment variables, then flags.
On failure a single ``error: <Category>: <message>`` line goes to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from . import pipeline
from .core import DEFAULT_UTC_OFFSET, MAX_LEAD_HOURS, TimeIndex
from .errors import ArxcastError, ConfigError, DataNotFound
from .estimation import Kind
from .evaluation import POLICIES
from .ingest import (
    CACHE_ENV,
    DEFAULT_URL_TEMPLATE,
    SplitSpec,
    fetch_many,
    load_dataset,
    write_point_csv,
)
from .power import PlantConfig
from .synthetic import SyntheticConfig, generate

log = logging.getLogger("arxcast")
OUT_ENV = "ARXCAST_OUT_DIR"


@dataclass
class RunConfig:
    site_id: str = "site"
    site_label: str = ""  # free-form lat/lon label
    utc_offset: int = DEFAULT_UTC_OFFSET
    data_dir: str = "data"
    cache_dir: str | None = None
    out_dir: str = "out"
    url_template: str = DEFAULT_URL_TEMPLATE
    start: str | None = None  # fetch range, YYYY-MM-DD inclusive
    end: str | None = None
    leads: list = field(default_factory=lambda: [0, 18])
    jobs: int = 4
    lag: int = 24
    lead: int = 18
    split: float = 0.75
    plant: dict = field(default_factory=dict)
    policy: str = POLICIES[0]
    capacity: float | None = None
    seed: int = 0
    synth: dict = field(default_factory=dict)  # SyntheticConfig overrides

    def validate(self):
        if not 1 <= self.lead <= MAX_LEAD_HOURS:
            raise ConfigError(f"lead must be in 1..{MAX_LEAD_HOURS}, got {self.lead}")
        if self.lag < 1:
            raise ConfigError(f"lag must be >= 1, got {self.lag}")
        if not 0 < self.split < 1:
            raise ConfigError(f"split fraction must be in (0, 1), got {self.split}")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        try:
            self.plant_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"plant: {exc}") from None
        return self

    def plant_config(self) -> PlantConfig:
        return PlantConfig.from_dict(self.plant)

    @property
    def site(self):
        return {"id": self.site_id, "label": self.site_label, "utc_offset": self.utc_offset}


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {unknown}")
        cfg = dataclasses.replace(cfg, **doc)
    return cfg


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if os.environ.get(CACHE_ENV):
        cfg.cache_dir = os.environ[CACHE_ENV]
    if os.environ.get(OUT_ENV):
        cfg.out_dir = os.environ[OUT_ENV]
    for flag, attr in (("data_dir", "data_dir"), ("cache_dir", "cache_dir"), ("out_dir", "out_dir"),
                       ("lead", "lead"), ("lag", "lag"), ("split", "split"), ("policy", "policy"),
                       ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    for flag in ("url_template", "start", "end", "jobs"):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, flag, value)
    if getattr(args, "leads", None):
        cfg.leads = [int(x) for x in args.leads.split(",")]
    return cfg.validate()


def _data_files(cfg: RunConfig) -> list[Path]:
    p = Path(cfg.data_dir)
    if p.is_file():
        return [p]
    if not p.is_dir():
        raise DataNotFound(f"data path does not exist: {p}")
    files = sorted(p.glob("*.csv"))
    if not files:
        raise DataNotFound(f"no .csv files in data directory {p}")
    return files


def _dataset(cfg):
    return load_dataset(_data_files(cfg), cfg.site_id, cfg.utc_offset)


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _kinds(args):
    return (Kind(args.kind.upper()),) if getattr(args, "kind", None) else pipeline.KINDS


# -- subcommands ------------------------------------------------------------


def cmd_synth(cfg: RunConfig, args) -> int:
    overrides = dict(cfg.synth)
    for flag, key in (("days", "days"), ("informativeness", "forecast_informativeness"),
                      ("noise_scale", "noise_scale")):
        if getattr(args, flag, None) is not None:
            overrides[key] = getattr(args, flag)
    try:
        scfg = SyntheticConfig(seed=cfg.seed, utc_offset=cfg.utc_offset, site_id=cfg.site_id, **overrides)
    except TypeError as exc:
        raise ConfigError(f"synth: {exc}") from None
    ds = generate(scfg)
    path = write_point_csv(ds.forecasts, Path(cfg.data_dir) / "synthetic.csv")
    _emit({"written": str(path), "records": len(ds.forecasts), "measurements": len(ds.measurements)})
    return 0


def cycle_range(start: str | None, end: str | None, utc_offset: int = 0) -> list[TimeIndex]:
    """All hourly UTC cycles on the dates ``start``..``end`` inclusive."""
    if not start or not end:
        raise ConfigError("fetch needs both --start and --end dates")
    d0, d1 = date.fromisoformat(start), date.fromisoformat(end)
    if d1 < d0:
        raise ConfigError(f"empty date range {start}..{end}")
    days = (d1 - d0).days + 1
    first = TimeIndex((d0 - date(1970, 1, 1)).days * 24, utc_offset)
    return [first + h for h in range(days * 24)]


def cmd_fetch(cfg: RunConfig, args) -> int:
    cycles = cycle_range(cfg.start, cfg.end, cfg.utc_offset)
    summary = fetch_many(cfg.url_template, cycles, cfg.leads, cfg.cache_dir, max_workers=cfg.jobs)
    _emit({
        "requested": summary.requested,
        "downloaded": summary.downloaded,
        "cached": summary.cached,
        "missing": len(summary.missing),
        "failed": len(summary.failed),
        "gaps": [f"{c} f{lead:02d}" for c, lead in summary.missing],
    })
    if summary.failed:
        c, lead, msg = summary.failed[0]
        print(f"error: NetworkError: {len(summary.failed)} fetch(es) failed, first {c} f{lead:02d}: {msg}",
              file=sys.stderr)
        return 3
    return 0


def cmd_ingest(cfg: RunConfig, args) -> int:
    ds = _dataset(cfg)
    path = write_point_csv(ds.forecasts, Path(cfg.out_dir) / "dataset.csv")
    leads = sorted({r.lead_hours for r in ds.forecasts})
    _emit({"written": str(path), "records": len(ds.forecasts), "measurements": len(ds.measurements),
           "duplicates_replaced": ds.duplicates, "leads": leads, "sources": list(ds.provenance)})
    return 0


def cmd_fit(cfg: RunConfig, args) -> int:
    ds = _dataset(cfg)
    model_sets = pipeline.fit_all(ds, cfg.lag, cfg.lead, SplitSpec(cfg.split), _kinds(args))
    out = Path(cfg.out_dir)
    paths = pipeline.save_all(model_sets, out / "models")
    summary = out / "fit_summary.csv"
    summary.write_text(pipeline.fit_summary_csv(model_sets), encoding="utf-8")
    for ms in model_sets.values():
        for w in ms.warnings:
            log.warning("%s: %s", ms.name, w)
    _emit({"models": [str(p) for p in paths], "summary": str(summary)})
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    ds = _dataset(cfg)
    model_sets = pipeline.load_all(Path(cfg.out_dir) / "models")
    doc = pipeline.evaluate(ds, model_sets, SplitSpec(cfg.split), cfg.plant_config(), cfg.policy,
                            cfg.capacity, cfg.site)
    paths = pipeline.write_reports(doc, Path(cfg.out_dir) / "reports")
    _emit({"reports": [str(p) for p in paths], "accuracy_pct": doc["accuracy"],
           "power_mean_signed_rms_error_w": (doc["power"] or {}).get("mean_signed_rms_error_w")})
    return 0


def cmd_predict(cfg: RunConfig, args) -> int:
    try:
        at = TimeIndex.parse(args.at, cfg.utc_offset)
    except ValueError:
        raise ConfigError(f"--at must look like YYYY-MM-DDTHH:00:00Z, got {args.at!r}") from None
    kind = Kind(args.kind.upper()) if args.kind else Kind.ARX
    model_sets = pipeline.load_all(Path(cfg.out_dir) / "models", (kind,))
    result = pipeline.predict_at(_dataset(cfg), model_sets, at, kind, cfg.plant_config())
    if args.output:
        Path(args.output).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(result)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "fetch": cmd_fetch,
    "ingest": cmd_ingest,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--data-dir", help="directory of canonical point CSVs (or one CSV file)")
    common.add_argument("--cache-dir", help=f"archive cache root (env {CACHE_ENV})")
    common.add_argument("--out-dir", help=f"output root (env {OUT_ENV})")
    common.add_argument("--lead", type=int, help="forecast lead in hours (default 18)")
    common.add_argument("--lag", type=int, help="measurement lag in hours (default 24)")
    common.add_argument("--split", type=float, help="chronological train fraction (default 0.75)")
    common.add_argument("--kind", choices=["ar", "arx"], type=str.lower)
    common.add_argument("--policy", choices=POLICIES, help="accuracy normalizer")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="arxcast", description="Per-hour ARX weather and PV power forecasting.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--days", type=int)
    p.add_argument("--informativeness", type=float)
    p.add_argument("--noise-scale", type=float)
    p = sub.add_parser("fetch", parents=[common], help="download archive files into the cache")
    p.add_argument("--start", help="first date, YYYY-MM-DD")
    p.add_argument("--end", help="last date, YYYY-MM-DD (inclusive)")
    p.add_argument("--leads", help="comma-separated leads (default 0,18)")
    p.add_argument("--url-template", help="URL with {date}, {cycle}, {lead} slots")
    p.add_argument("--jobs", type=int, help="concurrent downloads")
    sub.add_parser("ingest", parents=[common], help="validate and merge point CSVs")
    sub.add_parser("fit", parents=[common], help="fit per-hour models")
    sub.add_parser("evaluate", parents=[common], help="score models on the test split")
    p = sub.add_parser("predict", parents=[common], help="predict weather and power at one time")
    p.add_argument("--at", required=True, help="valid time, YYYY-MM-DDTHH:00:00Z")
    p.add_argument("--output", help="also write the JSON result here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ArxcastError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {exc.category}: {msg}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
