"""Scalar performance metrics reduced from a difference curve.

Four families, each in kW and as a percentage of the first curve:
plain average, weather-frequency weighted average, the statistically
significant portion (only what lies outside the confidence band), and the
power-bin scaled variant that reweights by the original data's power
histogram.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .gp import DifferenceCurve, TestGrid


@dataclass
class BinRow:
    """One power bin: its histogram mass and curve averages."""

    bin_index: int  # 1-based
    pi: float  # relative frequency of original power in this bin
    mu: float  # mean f1 over grid points in the bin (nan if none)
    delta: float  # mean (f2 - f1) over grid points in the bin (nan if none)
    n_grid: int


@dataclass
class ComparisonMetrics:
    delta_unweighted: float
    pct_unweighted: float
    delta_weighted: float
    pct_weighted: float
    delta_stat_unweighted: float
    pct_stat_unweighted: float
    delta_stat_weighted: float
    pct_stat_weighted: float
    delta_scaled: float
    pct_scaled: float
    frequency_weights: np.ndarray = field(repr=False)
    bin_table: list[BinRow] = field(repr=False)

    def to_dict(self, include_weights: bool = False) -> dict:
        out = {
            name: getattr(self, name)
            for name in (
                "delta_unweighted",
                "pct_unweighted",
                "delta_weighted",
                "pct_weighted",
                "delta_stat_unweighted",
                "pct_stat_unweighted",
                "delta_stat_weighted",
                "pct_stat_weighted",
                "delta_scaled",
                "pct_scaled",
            )
        }
        out["bin_table"] = [
            {
                "bin": row.bin_index,
                "pi": row.pi,
                "mu": row.mu,
                "delta": row.delta,
                "n_grid": row.n_grid,
            }
            for row in self.bin_table
        ]
        if include_weights:
            out["frequency_weights"] = self.frequency_weights.tolist()
        return out


METRIC_NAMES = (
    "delta_unweighted",
    "pct_unweighted",
    "delta_weighted",
    "pct_weighted",
    "delta_stat_unweighted",
    "pct_stat_unweighted",
    "delta_stat_weighted",
    "pct_stat_weighted",
    "delta_scaled",
    "pct_scaled",
)


def _percent(numerator: float, denominator: float) -> float:
    # undefined percentages surface as nan, never as an exception
    return numerator / denominator * 100.0 if denominator != 0.0 else float("nan")


def delta_unweighted(curve: DifferenceCurve) -> tuple[float, float]:
    """Plain average of the difference curve; percent relative to curve 1."""
    value = float(curve.diff.mean())
    return value, _percent(value, float(curve.f1_hat.mean()))


def frequency_weights(
    original_1: Dataset, original_2: Dataset, grid: TestGrid
) -> np.ndarray:
    """Relative frequency of original weather in each grid point's cell.

    Pools the pre-matching records of both datasets, snaps each record to
    the nearest grid point per axis (records outside the bounds clamp to
    the boundary) and normalizes the counts to sum to one.
    """
    parts = []
    for ds in (original_1, original_2):
        if ds is not None and ds.n:
            parts.append(ds.covariate_matrix(grid.covariates))
    if not parts:
        raise ValueError("no original records to weight by")
    values = np.vstack(parts)

    multi = []
    for l, axis in enumerate(grid.axes):
        if len(axis) > 1:
            step = axis[1] - axis[0]
            idx = np.rint((values[:, l] - axis[0]) / step).astype(np.intp)
        else:
            idx = np.zeros(values.shape[0], dtype=np.intp)
        multi.append(np.clip(idx, 0, len(axis) - 1))
    flat = np.ravel_multi_index(multi, grid.shape)
    counts = np.bincount(flat, minlength=grid.n_test).astype(np.float64)
    return counts / counts.sum()


def delta_weighted(curve: DifferenceCurve, weights: np.ndarray) -> tuple[float, float]:
    """Frequency-weighted average difference; percent against weighted f1."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != curve.diff.shape:
        raise ValueError("weights not aligned with the grid")
    if abs(weights.sum() - 1.0) > 1e-6:
        raise ValueError(f"weights sum to {weights.sum():g}, expected 1")
    value = float(weights @ curve.diff)
    return value, _percent(value, float(weights @ curve.f1_hat))


def _band_excess(curve: DifferenceCurve, mode: str) -> np.ndarray:
    outside_hi = curve.diff > curve.band_upper
    outside_lo = curve.diff < curve.band_lower
    if mode == "excess":
        return np.where(
            outside_hi,
            curve.diff - curve.band_upper,
            np.where(outside_lo, curve.diff - curve.band_lower, 0.0),
        )
    if mode == "full":
        return np.where(outside_hi | outside_lo, curve.diff, 0.0)
    raise ValueError(f"unknown mode {mode!r}; use 'excess' or 'full'")


def delta_statistical(
    curve: DifferenceCurve, weights: np.ndarray | None = None, mode: str = "excess"
) -> tuple[float, float]:
    """Difference accumulated only where the curve leaves the band.

    Default ``mode="excess"`` counts the signed overshoot past the nearer
    band edge (the shaded-area reading); ``mode="full"`` counts the whole
    difference wherever it is outside the band. A curve entirely inside
    the band yields exactly zero.
    """
    contrib = _band_excess(curve, mode)
    if weights is None:
        return float(contrib.mean()), _percent(
            float(contrib.mean()), float(curve.f1_hat.mean())
        )
    weights = np.asarray(weights, dtype=np.float64)
    value = float(weights @ contrib)
    return value, _percent(value, float(weights @ curve.f1_hat))


def _bin_of(values: np.ndarray, width: float, n_bins: int) -> np.ndarray:
    # below-zero power counts toward bin 1, above-rated toward bin K
    return np.clip(np.floor(values / width).astype(np.intp), 0, n_bins - 1)


def delta_scaled(
    curve: DifferenceCurve,
    original_1: Dataset,
    original_2: Dataset,
    rated_power: float,
    n_bins: int = 15,
) -> tuple[float, float, list[BinRow]]:
    """Power-bin scaled difference: bin averages reweighted by the original
    power histogram.

    The power spectrum [0, rated] splits into ``n_bins`` equal bins. Grid
    points are binned by f1; bin frequencies come from the pooled original
    power data of both sides. Bins with no grid points cannot contribute a
    difference, so the histogram is renormalized over the populated bins.
    """
    if rated_power <= 0:
        raise ValueError("rated_power must be positive")
    width = rated_power / n_bins
    grid_bin = _bin_of(curve.f1_hat, width, n_bins)

    y_parts = [ds.y for ds in (original_1, original_2) if ds is not None and ds.n]
    if not y_parts:
        raise ValueError("no original power data for the bin histogram")
    y_bin = _bin_of(np.concatenate(y_parts), width, n_bins)
    pi = np.bincount(y_bin, minlength=n_bins).astype(np.float64)
    pi /= pi.sum()

    mu = np.full(n_bins, np.nan)
    delta = np.full(n_bins, np.nan)
    counts = np.zeros(n_bins, dtype=int)
    for k in range(n_bins):
        in_bin = grid_bin == k
        counts[k] = int(in_bin.sum())
        if counts[k]:
            mu[k] = float(curve.f1_hat[in_bin].mean())
            delta[k] = float(curve.diff[in_bin].mean())

    populated = counts > 0
    if not populated.any():
        raise ValueError("no grid point falls into any power bin")
    mass = pi[populated].sum()
    if mass == 0.0:
        raise ValueError("original power histogram has no mass on populated bins")
    pi_used = pi[populated] / mass
    value = float(pi_used @ delta[populated])
    pct = _percent(value, float(pi_used @ mu[populated]))
    table = [
        BinRow(k + 1, float(pi[k]), float(mu[k]), float(delta[k]), counts[k])
        for k in range(n_bins)
    ]
    return value, pct, table


def control_test_adjust(test: float, control: float) -> float:
    """Net change of the test unit after removing the control unit's drift."""
    return test - control


def compute_metrics(
    curve: DifferenceCurve,
    original_1: Dataset,
    original_2: Dataset,
    rated_power: float,
    n_bins: int = 15,
    stat_mode: str = "excess",
) -> ComparisonMetrics:
    """All metric families for one comparison, sharing one set of weights."""
    weights = frequency_weights(original_1, original_2, curve.grid)
    kw_u, pct_u = delta_unweighted(curve)
    kw_w, pct_w = delta_weighted(curve, weights)
    kw_su, pct_su = delta_statistical(curve, None, stat_mode)
    kw_sw, pct_sw = delta_statistical(curve, weights, stat_mode)
    kw_sc, pct_sc, table = delta_scaled(curve, original_1, original_2, rated_power, n_bins)
    return ComparisonMetrics(
        delta_unweighted=kw_u,
        pct_unweighted=pct_u,
        delta_weighted=kw_w,
        pct_weighted=pct_w,
        delta_stat_unweighted=kw_su,
        pct_stat_unweighted=pct_su,
        delta_stat_weighted=kw_sw,
        pct_stat_weighted=pct_sw,
        delta_scaled=kw_sc,
        pct_scaled=pct_sc,
        frequency_weights=weights,
        bin_table=table,
    )
