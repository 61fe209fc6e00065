"""Parsing, aggregation and period partitioning of turbine operational data.

Input files are delimiter-separated text (comma or tab, auto-detected) with
a header row. A schema mapping translates file column names to canonical
record fields. Malformed rows are dropped, never imputed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from .circular import circular_mean_deg, circular_std_deg
from .dataset import Dataset, PeriodPartition, ScadaRecord, empty_like

REQUIRED_FIELDS = ("timestamp", "W", "T", "D", "TI", "sdD", "y")
OPTIONAL_FIELDS = ("rho", "S", "turbine_id")


@dataclass
class ParseResult:
    dataset: Dataset
    dropped_rows: int


def _sniff_delimiter(header_line: str) -> str:
    return "\t" if header_line.count("\t") > header_line.count(",") else ","


def parse_scada(
    source,
    schema: dict[str, str],
    turbine_id: str | None = None,
    delimiter: str | None = None,
) -> ParseResult:
    """Parse one turbine's delimiter-separated file into a Dataset.

    Parameters
    ----------
    source : path, str or binary/text stream
        The file to read. Must have a header row.
    schema : dict
        Maps file column names to record fields, e.g.
        ``{"ActivePower_kW": "y", "WindSpeed": "W", ...}``. The timestamp
        and every covariate named in the schema are required per row; rows
        missing any of them (or unparseable) are dropped and counted.
    turbine_id : str, optional
        Identifier for the turbine; required unless the schema maps a
        ``turbine_id`` column (then the file must contain a single id).
    delimiter : str, optional
        Override the comma/tab auto-detection.

    Returns
    -------
    ParseResult with the dataset and the number of dropped rows.
    """
    raw = _read_text(source)
    if not raw.strip():
        raise ValueError("empty input: no header row")
    if delimiter is None:
        delimiter = _sniff_delimiter(raw.splitlines()[0])

    frame = pd.read_csv(io.StringIO(raw), sep=delimiter, dtype=str, skipinitialspace=True)
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in schema if c not in frame.columns]
    if missing:
        raise ValueError(f"schema columns absent from header: {missing}")

    frame = frame[list(schema)].rename(columns=schema)
    if "timestamp" not in frame.columns:
        raise ValueError("schema must map a timestamp column")

    if "turbine_id" in frame.columns:
        ids = frame["turbine_id"].dropna().unique()
        if turbine_id is None:
            if len(ids) != 1:
                raise ValueError(
                    f"file contains {len(ids)} turbine ids; pass turbine_id or split first"
                )
            turbine_id = str(ids[0])
        else:
            frame = frame[frame["turbine_id"] == turbine_id]
        frame = frame.drop(columns=["turbine_id"])
    elif turbine_id is None:
        raise ValueError("turbine_id required when the schema does not map one")

    n_raw = len(frame)
    ts = pd.to_datetime(frame["timestamp"], errors="coerce", utc=True)
    values = {c: _numeric(frame[c]) for c in frame.columns if c != "timestamp"}
    keep = (~ts.isna()).to_numpy()
    for col in values.values():
        keep &= ~np.isnan(col)
    dropped = int(n_raw - keep.sum())
    if keep.sum() == 0:
        raise ValueError("zero valid rows after dropping malformed ones")

    ts = ts[keep].dt.tz_convert("UTC").dt.tz_localize(None)
    order = np.argsort(ts.to_numpy(), kind="stable")
    dataset = Dataset(
        turbine_id,
        ts.to_numpy()[order].astype("datetime64[s]"),
        {c: col[keep][order] for c, col in values.items()},
    )
    return ParseResult(dataset, dropped)


def _numeric(series: pd.Series) -> np.ndarray:
    # float() is correctly rounded; pandas' fast parser can be off by 1 ulp
    out = np.full(len(series), np.nan)
    for i, cell in enumerate(series.to_numpy(dtype=object)):
        if cell is None:
            continue
        try:
            out[i] = float(cell)
        except (TypeError, ValueError):
            pass
    return out


def _read_text(source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text()
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def aggregate_high_frequency(
    samples,
    turbine_id: str = "",
    window: timedelta = timedelta(minutes=10),
) -> list[ScadaRecord]:
    """Average high-frequency (timestamp, w, d, t) samples into 10-min records.

    Per window: W is the mean wind speed, T the mean temperature, D the
    circular mean direction, sdD the circular standard deviation, and
    TI = sd(w) / mean(w) using the sample (n-1) standard deviation.

    Windows need at least two samples to be emitted (a single sample gives
    no spread estimate); empty windows are skipped. When a window's mean
    wind speed is zero, TI is undefined and the record carries TI=None so
    callers can filter rather than receive a fabricated value.
    """
    if window <= timedelta(0):
        raise ValueError("window must be positive")
    window_s = int(window.total_seconds())

    buckets: dict[int, list[tuple[float, float, float]]] = {}
    for timestamp, w, d, t in samples:
        ts = np.datetime64(timestamp, "s").astype(np.int64)
        buckets.setdefault(int(ts // window_s), []).append((float(w), float(d), float(t)))

    records = []
    for key in sorted(buckets):
        rows = buckets[key]
        if len(rows) < 2:
            continue
        w = np.array([r[0] for r in rows])
        d = np.array([r[1] for r in rows])
        t = np.array([r[2] for r in rows])
        w_mean = float(w.mean())
        ti = float(w.std(ddof=1) / w_mean) if w_mean > 0 else None
        records.append(
            ScadaRecord(
                timestamp=np.datetime64(key * window_s, "s").astype("datetime64[s]").item(),
                turbine_id=turbine_id,
                W=w_mean,
                T=float(t.mean()),
                D=circular_mean_deg(d),
                sdD=circular_std_deg(d),
                TI=ti,
            )
        )
    return records


def partition(dataset: Dataset, periods: PeriodPartition) -> dict[str, Dataset]:
    """Assign each record to the unique period containing its timestamp.

    Returns one Dataset per period label (possibly empty). Records falling
    between periods are excluded; boundaries are half-open [start, end).
    """
    out: dict[str, Dataset] = {}
    for period in periods:
        start = np.datetime64(period.start, "s")
        end = np.datetime64(period.end, "s")
        mask = (dataset.timestamps >= start) & (dataset.timestamps < end)
        if mask.any():
            out[period.label] = dataset.subset(np.flatnonzero(mask), period.label)
        else:
            out[period.label] = empty_like(dataset, period.label)
    return out


CANONICAL_COLUMNS = ("timestamp", "turbine_id", "W", "T", "D", "TI", "sdD", "y", "rho", "S")


def read_dataset(path, schema: dict[str, str] | None = None, turbine_id: str | None = None) -> Dataset:
    """Read one dataset file; with no schema, header names are taken as canonical."""
    if schema is None:
        header = Path(path).read_text().splitlines()[0]
        delimiter = _sniff_delimiter(header)
        names = [c.strip() for c in header.split(delimiter)]
        schema = {c: c for c in names if c in CANONICAL_COLUMNS}
    return parse_scada(path, schema, turbine_id).dataset


def write_dataset(dataset: Dataset, path) -> None:
    """Write a dataset in the canonical comma-separated layout.

    Floats use shortest round-trip formatting so a read-back reproduces
    the values exactly.
    """
    names = [c for c in CANONICAL_COLUMNS if c in dataset.columns]
    lines = [",".join(["timestamp", "turbine_id", *names])]
    stamps = np.datetime_as_string(dataset.timestamps, unit="s")
    for i in range(dataset.n):
        cells = [stamps[i], dataset.turbine_id]
        cells += [repr(float(dataset.columns[c][i])) for c in names]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def load_farm_data(
    data_dir, schema: dict[str, str], pattern: str = "*.csv"
) -> dict[str, Dataset]:
    """Load every turbine file in a directory into unpartitioned Datasets.

    Each file holds one turbine; the turbine id comes from a mapped
    turbine_id column when present, otherwise from the file stem.
    """
    data_dir = Path(data_dir)
    files = sorted(data_dir.glob(pattern))
    if not files:
        raise ValueError(f"no {pattern} files under {data_dir}")
    farm: dict[str, Dataset] = {}
    maps_id = "turbine_id" in schema.values()
    for path in files:
        result = parse_scada(path, schema, turbine_id=None if maps_id else path.stem)
        farm[result.dataset.turbine_id] = result.dataset
    return farm
