"""Whole-farm orchestration: run the match/compare/metrics pipeline over
many turbine-period pairs and emit deterministic report tables.

Three analysis kinds: temporal (each turbine against itself across
consecutive periods), spatial (every turbine against a baseline turbine
within one period) and spacetime (every turbine-period cell against one
fixed baseline cell). Failed jobs are carried in the report with an error
note, never dropped.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from ._kernels import backend_name
from .dataset import Dataset, Period, PeriodPartition
from .gp import build_test_grid, difference_band, fit_gp, fit_hyperparameters, hypothesis_test, pooled_mean
from .ingest import load_farm_data, partition
from .matching import MatchSpec, match_two_way
from .metrics import METRIC_NAMES, ComparisonMetrics, compute_metrics
from .selection import select_farm_subset
from .synthetic import RNG_NAME

DEFAULT_CANDIDATES = ["W", "T", "D", "TI", "sdD"]


@dataclass
class FarmConfig:
    """Everything a farm run needs; loadable from YAML."""

    rated_power: float
    periods: PeriodPartition
    schema: dict[str, str] = field(default_factory=dict)
    candidates: list[str] = field(default_factory=lambda: list(DEFAULT_CANDIDATES))
    varpi: float = 0.2
    alpha: float = 0.05
    bins: int = 15
    grid_resolution: int = 50
    knn_k: int = 50
    folds: int = 10
    seed: int = 17
    matching_order: list[str] | None = None  # None: run subset selection
    gp_covariates: list[str] | None = None  # None: top-2 of the matching order
    representatives: list[str] | None = None
    stat_mode: str = "excess"
    map_metric: str = "pct_scaled"
    fit_cap: int = 512
    data_cap: int = 2500
    n_starts: int = 3
    n_jobs: int = 1
    analyses: list[str] = field(default_factory=lambda: ["temporal"])
    baseline_turbine: str | None = None
    baseline_period: str | None = None

    def __post_init__(self):
        if self.map_metric not in METRIC_NAMES:
            raise ValueError(f"map_metric must be one of {METRIC_NAMES}")
        unknown = set(self.analyses) - {"temporal", "spatial", "spacetime"}
        if unknown:
            raise ValueError(f"unknown analyses: {sorted(unknown)}")

    @classmethod
    def from_yaml(cls, path) -> "FarmConfig":
        raw = yaml.safe_load(Path(path).read_text())
        periods = PeriodPartition(
            [
                Period(
                    label=str(p["label"]),
                    start=_parse_dt(p["start"]),
                    end=_parse_dt(p["end"]),
                    technical_setting=str(p.get("setting", "")),
                )
                for p in raw.pop("periods")
            ]
        )
        return cls(periods=periods, **raw)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["periods"] = [
            {
                "label": p.label,
                "start": p.start.isoformat(),
                "end": p.end.isoformat(),
                "setting": p.technical_setting,
            }
            for p in self.periods
        ]
        return out

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def _parse_dt(value) -> datetime:
    if isinstance(value, datetime):
        return value
    if hasattr(value, "year") and not hasattr(value, "hour"):  # yaml date
        return datetime(value.year, value.month, value.day)
    return datetime.fromisoformat(str(value))


@dataclass(frozen=True)
class ComparisonJob:
    """One pairwise comparison; side_a is the base of the difference."""

    side_a: tuple[str, str]  # (turbine_id, period_label)
    side_b: tuple[str, str]
    kind: str  # temporal | spatial | spacetime
    group: str = ""  # aggregation key, e.g. "[P2-P1]" or the period label

    def __post_init__(self):
        if self.kind == "temporal":
            if self.side_a[0] != self.side_b[0] or self.side_a[1] == self.side_b[1]:
                raise ValueError("temporal jobs compare one turbine across two periods")
        elif self.kind == "spatial":
            if self.side_a[1] != self.side_b[1] or self.side_a[0] == self.side_b[0]:
                raise ValueError("spatial jobs compare two turbines inside one period")
        elif self.kind != "spacetime":
            raise ValueError(f"unknown job kind {self.kind!r}")


@dataclass
class JobOutcome:
    job: ComparisonJob
    status: str  # "ok" | "failed"
    error: str = ""
    metrics: ComparisonMetrics | None = None
    reject: bool | None = None
    region: dict[str, tuple[float, float]] = field(default_factory=dict)
    n_a: int = 0
    n_b: int = 0
    matched_a: int = 0
    matched_b: int = 0


@dataclass
class AggregateRow:
    kind: str
    group: str
    metric: str
    vmin: float
    q1: float
    median: float
    q3: float
    vmax: float
    mean: float
    count: int


@dataclass
class MapRow:
    kind: str
    turbine_id: str
    period_label: str
    metric: str
    value: float
    status: str  # "ok" | "failed" | "baseline"


@dataclass
class FarmReport:
    rows: list[JobOutcome]
    aggregates: list[AggregateRow]
    map_rows: list[MapRow]


def job_seed(master_seed: int, job: ComparisonJob) -> int:
    """Stable per-job seed derived from the master seed and the job key."""
    key = f"{master_seed}|{job.kind}|{job.side_a}|{job.side_b}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:4], "big")


def compare_pair(
    job: ComparisonJob, data: dict[str, dict[str, Dataset]], config: FarmConfig
) -> JobOutcome:
    """Run matching, GP comparison and metrics for one job.

    Any per-job failure (empty period, empty matched set, GP failure) is
    captured in the outcome instead of raised.
    """
    if config.matching_order is None:
        raise ValueError("config.matching_order must be resolved before running jobs")
    out = JobOutcome(job=job, status="failed")
    try:
        d1 = data[job.side_a[0]][job.side_a[1]]
        d2 = data[job.side_b[0]][job.side_b[1]]
    except KeyError as exc:
        out.error = f"missing dataset {exc}"
        return out
    out.n_a, out.n_b = d1.n, d2.n
    if d1.n == 0 or d2.n == 0:
        out.error = "empty dataset"
        return out
    try:
        spec = MatchSpec(tuple(config.matching_order), config.varpi)
        match = match_two_way(d1, d2, spec)
        out.matched_a, out.matched_b = match.matched_1.n, match.matched_2.n
        if match.matched_1.n == 0 or match.matched_2.n == 0:
            out.error = "empty matched set"
            return out
        covs = config.gp_covariates or list(config.matching_order[:2])
        seed = job_seed(config.seed, job)
        offset = pooled_mean(match.matched_1, match.matched_2)
        kernel, noise = fit_hyperparameters(
            match.matched_1, match.matched_2, covs, seed, config.n_starts, config.fit_cap
        )
        g1 = fit_gp(match.matched_1, covs, kernel, noise, offset, config.data_cap)
        g2 = fit_gp(match.matched_2, covs, kernel, noise, offset, config.data_cap)
        grid = build_test_grid(match.matched_1, match.matched_2, covs, config.grid_resolution)
        curve = difference_band(g1, g2, grid, config.alpha)
        out.metrics = compute_metrics(
            curve, d1, d2, config.rated_power, config.bins, config.stat_mode
        )
        test = hypothesis_test(curve)
        out.reject = test.reject
        out.region = test.region
        out.status = "ok"
    except Exception as exc:  # noqa: BLE001 -- jobs must never abort the batch
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def _run_jobs(
    jobs: list[ComparisonJob], data, config: FarmConfig
) -> list[JobOutcome]:
    if config.n_jobs <= 1:
        results = [compare_pair(job, data, config) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            results = list(pool.map(lambda j: compare_pair(j, data, config), jobs))
    results.sort(key=lambda r: (r.job.kind, r.job.group, r.job.side_a, r.job.side_b))
    return results


def _aggregate(rows: list[JobOutcome]) -> list[AggregateRow]:
    out = []
    groups = sorted({(r.job.kind, r.job.group) for r in rows})
    for kind, group in groups:
        members = [r for r in rows if r.job.kind == kind and r.job.group == group]
        for metric in METRIC_NAMES:
            values = np.array(
                [getattr(r.metrics, metric) for r in members if r.status == "ok"]
            )
            values = values[np.isfinite(values)]
            if values.size == 0:
                out.append(
                    AggregateRow(kind, group, metric, *([float("nan")] * 6), 0)
                )
                continue
            q1, med, q3 = np.percentile(values, [25, 50, 75])
            out.append(
                AggregateRow(
                    kind,
                    group,
                    metric,
                    float(values.min()),
                    float(q1),
                    float(med),
                    float(q3),
                    float(values.max()),
                    float(values.mean()),
                    int(values.size),
                )
            )
    return out


def _map_rows(rows: list[JobOutcome], config: FarmConfig, baseline=None) -> list[MapRow]:
    out = []
    for r in rows:
        turbine, period = r.job.side_b
        value = (
            float(getattr(r.metrics, config.map_metric)) if r.status == "ok" else float("nan")
        )
        out.append(MapRow(r.job.kind, turbine, period, config.map_metric, value, r.status))
    if baseline is not None and rows:
        out.append(
            MapRow(rows[0].job.kind, baseline[0], baseline[1], config.map_metric, 0.0, "baseline")
        )
    out.sort(key=lambda m: (m.kind, m.period_label, m.turbine_id))
    return out


def temporal_analysis(
    data: dict[str, dict[str, Dataset]], periods: PeriodPartition, config: FarmConfig
) -> FarmReport:
    """Each turbine against itself across every consecutive period pair."""
    labels = periods.labels
    if len(labels) < 2:
        raise ValueError("temporal analysis needs at least two periods")
    jobs = [
        ComparisonJob(
            (turbine, labels[i]),
            (turbine, labels[i + 1]),
            "temporal",
            group=f"[{labels[i + 1]}-{labels[i]}]",
        )
        for turbine in sorted(data)
        for i in range(len(labels) - 1)
    ]
    rows = _run_jobs(jobs, data, config)
    return FarmReport(rows, _aggregate(rows), _map_rows(rows, config))


def spatial_analysis(
    data: dict[str, dict[str, Dataset]],
    baseline_turbine: str,
    period: str,
    config: FarmConfig,
) -> FarmReport:
    """Every other turbine against the baseline turbine within one period.

    Positive map values mean the turbine outperforms the baseline under
    matched conditions; negative, underperforms.
    """
    if baseline_turbine not in data:
        raise ValueError(f"baseline turbine {baseline_turbine!r} not in farm data")
    jobs = [
        ComparisonJob((baseline_turbine, period), (turbine, period), "spatial", group=period)
        for turbine in sorted(data)
        if turbine != baseline_turbine
    ]
    rows = _run_jobs(jobs, data, config)
    return FarmReport(
        rows, _aggregate(rows), _map_rows(rows, config, (baseline_turbine, period))
    )


def spacetime_analysis(
    data: dict[str, dict[str, Dataset]],
    baseline: tuple[str, str],
    periods: PeriodPartition,
    config: FarmConfig,
) -> FarmReport:
    """Every turbine-period cell against one fixed baseline cell."""
    if baseline[0] not in data:
        raise ValueError(f"baseline turbine {baseline[0]!r} not in farm data")
    jobs = [
        ComparisonJob(baseline, (turbine, label), "spacetime", group=label)
        for turbine in sorted(data)
        for label in periods.labels
        if (turbine, label) != baseline
    ]
    rows = _run_jobs(jobs, data, config)
    return FarmReport(rows, _aggregate(rows), _map_rows(rows, config, baseline))


def merge_reports(reports: list[FarmReport]) -> FarmReport:
    merged = FarmReport([], [], [])
    for r in reports:
        merged.rows.extend(r.rows)
        merged.aggregates.extend(r.aggregates)
        merged.map_rows.extend(r.map_rows)
    return merged


# -- report emission ---------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _region_str(region: dict) -> str:
    return ";".join(f"{cov}:{_fmt(lo)}..{_fmt(hi)}" for cov, (lo, hi) in sorted(region.items()))


def _job_record(r: JobOutcome) -> dict:
    rec = {
        "kind": r.job.kind,
        "group": r.job.group,
        "turbine_a": r.job.side_a[0],
        "period_a": r.job.side_a[1],
        "turbine_b": r.job.side_b[0],
        "period_b": r.job.side_b[1],
        "status": r.status,
        "error": r.error,
        "n_a": r.n_a,
        "n_b": r.n_b,
        "matched_a": r.matched_a,
        "matched_b": r.matched_b,
        "reject": "" if r.reject is None else str(bool(r.reject)),
        "region": _region_str(r.region),
    }
    for metric in METRIC_NAMES:
        rec[metric] = getattr(r.metrics, metric) if r.metrics is not None else float("nan")
    return rec


def parse_layout(path) -> dict[str, tuple[float, float]]:
    """Read a turbine layout file: header ``id,x,y`` plus optional columns."""
    lines = Path(path).read_text().strip().splitlines()
    header = [c.strip() for c in lines[0].split(",")]
    for col in ("id", "x", "y"):
        if col not in header:
            raise ValueError(f"layout file missing column {col!r}")
    out = {}
    for line in lines[1:]:
        cells = dict(zip(header, (c.strip() for c in line.split(","))))
        out[cells["id"]] = (float(cells["x"]), float(cells["y"]))
    return out


def emit_report(
    report: FarmReport,
    out_dir,
    config: FarmConfig,
    layout: dict[str, tuple[float, float]] | None = None,
) -> dict[str, Path]:
    """Write jobs.csv, boxplot_summary.csv, map_values.csv, a JSON mirror
    and the run manifest. Output bytes depend only on (report, config,
    layout), so identical runs produce identical files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    job_cols = [
        "kind", "group", "turbine_a", "period_a", "turbine_b", "period_b",
        "status", "error", "n_a", "n_b", "matched_a", "matched_b", "reject",
        "region", *METRIC_NAMES,
    ]
    job_records = [_job_record(r) for r in report.rows]
    paths["jobs"] = _write_csv(out_dir / "jobs.csv", job_cols, job_records)

    agg_cols = ["kind", "group", "metric", "min", "q1", "median", "q3", "max", "mean", "count"]
    agg_records = [
        {
            "kind": a.kind, "group": a.group, "metric": a.metric, "min": a.vmin,
            "q1": a.q1, "median": a.median, "q3": a.q3, "max": a.vmax,
            "mean": a.mean, "count": a.count,
        }
        for a in report.aggregates
    ]
    paths["boxplot"] = _write_csv(out_dir / "boxplot_summary.csv", agg_cols, agg_records)

    map_cols = ["kind", "turbine_id", "x", "y", "period_label", "metric", "value", "status"]
    map_records = []
    for m in report.map_rows:
        x, y = (layout or {}).get(m.turbine_id, (None, None))
        map_records.append(
            {
                "kind": m.kind, "turbine_id": m.turbine_id, "x": x, "y": y,
                "period_label": m.period_label, "metric": m.metric,
                "value": m.value, "status": m.status,
            }
        )
    paths["map"] = _write_csv(out_dir / "map_values.csv", map_cols, map_records)

    mirror = {
        "jobs": job_records,
        "aggregates": agg_records,
        "map_values": map_records,
    }
    paths["report"] = out_dir / "report.json"
    paths["report"].write_text(json.dumps(mirror, sort_keys=True, indent=2) + "\n")

    manifest = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "kernel_backend": backend_name(),
        "rng": RNG_NAME,
    }
    paths["manifest"] = out_dir / "run_manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return paths


def _write_csv(path: Path, columns: list[str], records: list[dict]) -> Path:
    lines = [",".join(columns)]
    for rec in records:
        lines.append(",".join(_csv_cell(rec.get(c)) for c in columns))
    path.write_text("\n".join(lines) + "\n")
    return path


def _csv_cell(value) -> str:
    text = _fmt(value)
    if "," in text or '"' in text or "\n" in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def run_farm(
    data_dir,
    config: FarmConfig,
    out_dir,
    layout_path=None,
    n_jobs: int | None = None,
) -> FarmReport:
    """End-to-end farm run: load, partition, select covariates, compare, emit."""
    if n_jobs is not None:
        config = dataclasses.replace(config, n_jobs=n_jobs)
    raw = load_farm_data(data_dir, config.schema)
    data = {t: partition(ds, config.periods) for t, ds in raw.items()}

    if config.matching_order is None:
        selection = select_farm_subset(
            raw,
            config.candidates,
            config.knn_k,
            config.rated_power,
            config.folds,
            config.seed,
            config.representatives,
        )
        config = dataclasses.replace(config, matching_order=list(selection.best_subset))

    reports = []
    for analysis in config.analyses:
        if analysis == "temporal":
            reports.append(temporal_analysis(data, config.periods, config))
        elif analysis == "spatial":
            reports.append(
                spatial_analysis(
                    data, _require_baseline(config)[0], _require_baseline(config)[1], config
                )
            )
        else:
            reports.append(
                spacetime_analysis(data, _require_baseline(config), config.periods, config)
            )
    merged = merge_reports(reports)
    layout = parse_layout(layout_path) if layout_path else None
    emit_report(merged, out_dir, config, layout)
    return merged


def _require_baseline(config: FarmConfig) -> tuple[str, str]:
    if not config.baseline_turbine or not config.baseline_period:
        raise ValueError("spatial/spacetime analyses need baseline_turbine and baseline_period")
    return (config.baseline_turbine, config.baseline_period)
