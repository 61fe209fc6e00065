"""Core data containers: 10-minute records, per-turbine datasets, period partitions.

A :class:`Dataset` stores one turbine's records for one period in columnar
form (numpy arrays keyed by field name) because every downstream stage --
matching, kNN selection, GP fitting -- consumes covariate matrices.
:class:`ScadaRecord` is the row-level view used at the ingestion boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterator, Sequence

import numpy as np

#: canonical covariate fields; "y" is the power output, never a covariate
COVARIATE_FIELDS = ("W", "T", "D", "TI", "sdD", "rho", "S")

#: covariates that live on the circle (degrees)
CIRCULAR_FIELDS = frozenset({"D"})


@dataclass(frozen=True)
class ScadaRecord:
    """One 10-minute observation: covariates plus (optionally) power output.

    ``TI`` is None when it could not be computed for the window (zero mean
    wind speed); ``y`` is None for aggregated weather-only records.
    """

    timestamp: datetime
    turbine_id: str
    W: float
    T: float
    D: float
    sdD: float
    TI: float | None = None
    y: float | None = None
    rho: float | None = None
    S: float | None = None


def _to_datetime64(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind != "M":
        arr = np.array(
            [np.datetime64(_as_utc_naive(v), "s") for v in values], dtype="datetime64[s]"
        )
    return arr.astype("datetime64[s]")


def _as_utc_naive(value):
    if isinstance(value, datetime) and value.tzinfo is not None:
        return value.astimezone(timezone.utc).replace(tzinfo=None)
    return value


class Dataset:
    """Columnar container for one turbine's records in one period.

    Parameters
    ----------
    turbine_id : str
    timestamps : array-like
        Strictly increasing, stored as ``datetime64[s]`` (UTC).
    columns : dict of str -> array-like
        Covariate columns plus optionally ``"y"``. All columns must share
        the length of ``timestamps`` and contain no NaN.
    period_label : str
        Label of the period the records belong to ("" when unpartitioned).
    """

    def __init__(self, turbine_id: str, timestamps, columns: dict, period_label: str = ""):
        self.turbine_id = str(turbine_id)
        self.period_label = str(period_label)
        self.timestamps = _to_datetime64(timestamps)
        self.columns = {
            name: np.asarray(col, dtype=np.float64) for name, col in columns.items()
        }
        self._validate()

    def _validate(self) -> None:
        n = len(self.timestamps)
        for name, col in self.columns.items():
            if col.ndim != 1 or len(col) != n:
                raise ValueError(f"column {name!r} length {len(col)} != {n} timestamps")
            if np.isnan(col).any():
                raise ValueError(f"column {name!r} contains NaN")
        if n > 1 and not (self.timestamps[1:] > self.timestamps[:-1]).all():
            raise ValueError("timestamps must be strictly increasing")
        if "W" in self.columns and (self.columns["W"] < 0).any():
            raise ValueError("wind speed W must be >= 0")
        if "D" in self.columns:
            d = self.columns["D"]
            if ((d < 0) | (d >= 360.0)).any():
                raise ValueError("direction D must lie in [0, 360)")
        if "TI" in self.columns and (self.columns["TI"] < 0).any():
            raise ValueError("turbulence intensity TI must be >= 0")

    # -- basic introspection -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.timestamps)

    @property
    def covariates(self) -> list[str]:
        """Covariate names present, in canonical order then extras."""
        names = [c for c in COVARIATE_FIELDS if c in self.columns]
        names += [c for c in self.columns if c != "y" and c not in COVARIATE_FIELDS]
        return names

    @property
    def p(self) -> int:
        return len(self.covariates)

    @property
    def y(self) -> np.ndarray:
        if "y" not in self.columns:
            raise KeyError(f"dataset for turbine {self.turbine_id!r} has no power column")
        return self.columns["y"]

    def covariate_matrix(self, names: Sequence[str]) -> np.ndarray:
        """Stack the requested covariates into an (n, p) float64 matrix."""
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise KeyError(f"covariates not in dataset: {missing}")
        if not names:
            raise ValueError("empty covariate list")
        return np.column_stack([self.columns[c] for c in names])

    # -- derived datasets ----------------------------------------------------

    def subset(self, indices, period_label: str | None = None) -> "Dataset":
        """New Dataset from the given row indices (sorted to keep time order)."""
        idx = np.sort(np.asarray(indices, dtype=np.intp))
        return Dataset(
            self.turbine_id,
            self.timestamps[idx],
            {name: col[idx] for name, col in self.columns.items()},
            period_label if period_label is not None else self.period_label,
        )

    def with_column(self, name: str, values) -> "Dataset":
        cols = dict(self.columns)
        cols[name] = np.asarray(values, dtype=np.float64)
        return Dataset(self.turbine_id, self.timestamps, cols, self.period_label)

    def records(self) -> Iterator[ScadaRecord]:
        """Row-level view; absent optional fields come out as None."""
        for i in range(self.n):
            yield ScadaRecord(
                timestamp=self.timestamps[i].astype("datetime64[s]").item(),
                turbine_id=self.turbine_id,
                W=float(self.columns["W"][i]) if "W" in self.columns else 0.0,
                T=float(self.columns["T"][i]) if "T" in self.columns else 0.0,
                D=float(self.columns["D"][i]) if "D" in self.columns else 0.0,
                sdD=float(self.columns["sdD"][i]) if "sdD" in self.columns else 0.0,
                TI=float(self.columns["TI"][i]) if "TI" in self.columns else None,
                y=float(self.columns["y"][i]) if "y" in self.columns else None,
                rho=float(self.columns["rho"][i]) if "rho" in self.columns else None,
                S=float(self.columns["S"][i]) if "S" in self.columns else None,
            )

    @classmethod
    def from_records(
        cls, records: Sequence[ScadaRecord], period_label: str = ""
    ) -> "Dataset":
        if not records:
            raise ValueError("cannot build a Dataset from zero records")
        turbine_id = records[0].turbine_id
        cols: dict[str, list[float]] = {}
        for fname in ("W", "T", "D", "TI", "sdD", "y", "rho", "S"):
            values = [getattr(r, fname) for r in records]
            if all(v is not None for v in values):
                cols[fname] = values
        return cls(turbine_id, [r.timestamp for r in records], cols, period_label)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return (
            f"Dataset(turbine_id={self.turbine_id!r}, period={self.period_label!r}, "
            f"n={self.n}, covariates={self.covariates})"
        )


def concat_datasets(parts: Sequence[Dataset], period_label: str = "") -> Dataset:
    """Concatenate datasets of one turbine; timestamps must stay increasing."""
    if not parts:
        raise ValueError("nothing to concatenate")
    ids = {d.turbine_id for d in parts}
    if len(ids) != 1:
        raise ValueError(f"cannot concatenate datasets of different turbines: {sorted(ids)}")
    names = [c for c in parts[0].columns if all(c in d.columns for d in parts)]
    return Dataset(
        parts[0].turbine_id,
        np.concatenate([d.timestamps for d in parts]),
        {c: np.concatenate([d.columns[c] for d in parts]) for c in names},
        period_label,
    )


def empty_like(dataset: Dataset, period_label: str = "") -> Dataset:
    """Zero-row Dataset with the same turbine and column layout."""
    return Dataset(
        dataset.turbine_id,
        np.array([], dtype="datetime64[s]"),
        {name: np.array([]) for name in dataset.columns},
        period_label,
    )


@dataclass(frozen=True)
class Period:
    label: str
    start: datetime
    end: datetime
    technical_setting: str = ""

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"period {self.label!r}: end must be after start")


@dataclass
class PeriodPartition:
    """Chronologically ordered, non-overlapping half-open intervals [start, end).

    Gaps between consecutive periods are legal; records falling in a gap
    belong to no period.
    """

    periods: list[Period] = field(default_factory=list)

    def __post_init__(self):
        for prev, cur in zip(self.periods, self.periods[1:]):
            if cur.start < prev.end:
                raise ValueError(
                    f"periods {prev.label!r} and {cur.label!r} overlap or are out of order"
                )
        labels = [p.label for p in self.periods]
        if len(set(labels)) != len(labels):
            raise ValueError("period labels must be unique")

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self.periods]

    def __iter__(self):
        return iter(self.periods)

    def __len__(self):
        return len(self.periods)
