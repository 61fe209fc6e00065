"""Threshold-based hierarchical covariate matching between two datasets.

Matching walks the baseline records in timestamp order; for each one it
keeps the candidate records whose covariates all lie within ``varpi``
candidate-set standard deviations, covariate by covariate in importance
order, then consumes the closest survivor (scaled Euclidean distance).
Running the procedure in both directions and unioning the picks makes the
final matched subsets symmetric in the two inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._kernels import match_one_way_indices
from .circular import angular_difference_deg, circular_std_deg
from .dataset import CIRCULAR_FIELDS, Dataset


@dataclass(frozen=True)
class MatchSpec:
    """Matching configuration.

    covariate_order lists covariates from most to least important; varpi
    scales the per-covariate candidate-set standard deviation into the
    matching threshold. Covariates named in circular_covariates use
    angular differences and circular spread.
    """

    covariate_order: tuple[str, ...]
    varpi: float = 0.2
    circular_covariates: frozenset = field(default_factory=lambda: frozenset(CIRCULAR_FIELDS))

    def __post_init__(self):
        object.__setattr__(self, "covariate_order", tuple(self.covariate_order))
        if not self.covariate_order:
            raise ValueError("covariate_order must not be empty")
        if len(set(self.covariate_order)) != len(self.covariate_order):
            raise ValueError("covariate_order contains duplicates")
        if self.varpi <= 0:
            raise ValueError("varpi must be positive")


@dataclass
class MatchResult:
    """Matched subsets plus the pair bookkeeping needed for diagnostics.

    ``pairs`` holds (row in input 1, row in input 2) index pairs. For a
    one-way run input 1 is the baseline; a symmetric result records the
    two underlying one-way runs in ``one_way`` (baseline second input
    first, matching the order the directions are executed in).
    """

    matched_1: Dataset
    matched_2: Dataset
    pairs: list[tuple[int, int]]
    baseline_direction: str  # "1", "2" or "symmetric"
    spec: MatchSpec
    input_1: Dataset
    input_2: Dataset
    thresholds: np.ndarray | None = None  # one-way only: per-covariate threshold
    sigmas: np.ndarray | None = None  # candidate-set spread behind the thresholds
    one_way: tuple["MatchResult", "MatchResult"] | None = None


def _candidate_spread(values: np.ndarray, circular: bool) -> float:
    if values.size < 2:
        return 0.0
    return circular_std_deg(values) if circular else float(values.std(ddof=1))


def match_one_way(baseline: Dataset, candidate: Dataset, spec: MatchSpec) -> MatchResult:
    """Match every baseline record against the candidate pool (one direction).

    Thresholds use the spread of the full candidate set, fixed up front;
    each candidate is consumed at most once. Baseline records with an
    empty surviving subgroup stay unmatched.
    """
    if candidate.n < 1:
        raise ValueError("candidate dataset is empty")
    order = list(spec.covariate_order)
    base_x = baseline.covariate_matrix(order)
    cand_x = candidate.covariate_matrix(order)
    circular = np.array([c in spec.circular_covariates for c in order], dtype=np.uint8)

    sigmas = np.array(
        [
            _candidate_spread(cand_x[:, l], bool(circular[l]))
            for l in range(len(order))
        ]
    )
    degenerate = [order[l] for l in range(len(order)) if not (sigmas[l] > 0) or not np.isfinite(sigmas[l])]
    if degenerate:
        warnings.warn(
            f"zero or undefined spread for {degenerate} in candidate set; "
            "threshold degenerates to exact match",
            RuntimeWarning,
            stacklevel=2,
        )
    finite = np.isfinite(sigmas) & (sigmas > 0)
    thresholds = np.where(finite, spec.varpi * sigmas, 0.0)
    inv_scale = np.where(finite, 1.0 / np.where(finite, sigmas, 1.0), 0.0)

    hit = match_one_way_indices(base_x, cand_x, thresholds, inv_scale, circular)
    pairs = [(j, int(i)) for j, i in enumerate(hit) if i >= 0]
    return MatchResult(
        matched_1=baseline.subset([j for j, _ in pairs]) if pairs else _empty(baseline),
        matched_2=candidate.subset([i for _, i in pairs]) if pairs else _empty(candidate),
        pairs=pairs,
        baseline_direction="1",
        spec=spec,
        input_1=baseline,
        input_2=candidate,
        thresholds=thresholds,
        sigmas=sigmas,
    )


def match_two_way(d1: Dataset, d2: Dataset, spec: MatchSpec) -> MatchResult:
    """Symmetric matching: union of both one-way directions, de-duplicated.

    The matched subsets are identical (as record sets) when the arguments
    are swapped.
    """
    with_d2_baseline = match_one_way(d2, d1, spec)
    with_d1_baseline = match_one_way(d1, d2, spec)

    idx_1 = sorted(
        {i for _, i in with_d2_baseline.pairs} | {j for j, _ in with_d1_baseline.pairs}
    )
    idx_2 = sorted(
        {j for j, _ in with_d2_baseline.pairs} | {i for _, i in with_d1_baseline.pairs}
    )
    pairs = sorted(
        {(i, j) for j, i in with_d2_baseline.pairs}
        | {(j, i) for j, i in with_d1_baseline.pairs}
    )
    return MatchResult(
        matched_1=d1.subset(idx_1) if idx_1 else _empty(d1),
        matched_2=d2.subset(idx_2) if idx_2 else _empty(d2),
        pairs=pairs,
        baseline_direction="symmetric",
        spec=spec,
        input_1=d1,
        input_2=d2,
        one_way=(with_d2_baseline, with_d1_baseline),
    )


def _empty(dataset: Dataset) -> Dataset:
    from .dataset import empty_like

    return empty_like(dataset, dataset.period_label)


def verify_threshold_certificate(result: MatchResult) -> None:
    """Assert every matched pair satisfies the threshold rule exactly.

    For symmetric results, each direction is checked against its own
    candidate-set thresholds. Raises AssertionError on the first violated
    pair; silent when all pairs certify.
    """
    if result.one_way is not None:
        for one in result.one_way:
            verify_threshold_certificate(one)
        return
    order = list(result.spec.covariate_order)
    base_x = result.input_1.covariate_matrix(order)
    cand_x = result.input_2.covariate_matrix(order)
    for j, i in result.pairs:
        for l, cov in enumerate(order):
            if cov in result.spec.circular_covariates:
                diff = float(angular_difference_deg(cand_x[i, l], base_x[j, l]))
            else:
                diff = abs(cand_x[i, l] - base_x[j, l])
            thr = result.thresholds[l]
            if thr == 0.0:
                assert diff == 0.0, f"pair ({j},{i}) violates exact match on {cov}"
            else:
                assert diff < thr, (
                    f"pair ({j},{i}) violates threshold on {cov}: {diff} >= {thr}"
                )


@dataclass
class MatchingDiagnostics:
    """Per-covariate two-sample KS statistics before/after matching."""

    ks_before: dict[str, float]
    ks_after: dict[str, float]
    retention_1: float
    retention_2: float

    def to_dict(self) -> dict:
        return {
            "ks_before": self.ks_before,
            "ks_after": self.ks_after,
            "retention_1": self.retention_1,
            "retention_2": self.retention_2,
        }


def matching_diagnostics(
    before_1: Dataset, before_2: Dataset, result: MatchResult
) -> MatchingDiagnostics:
    """Quantify how much matching pulled the covariate distributions together."""
    ks_before: dict[str, float] = {}
    ks_after: dict[str, float] = {}
    for cov in result.spec.covariate_order:
        ks_before[cov] = float(
            stats.ks_2samp(before_1.columns[cov], before_2.columns[cov]).statistic
        )
        if result.matched_1.n and result.matched_2.n:
            ks_after[cov] = float(
                stats.ks_2samp(
                    result.matched_1.columns[cov], result.matched_2.columns[cov]
                ).statistic
            )
        else:
            ks_after[cov] = float("nan")
    return MatchingDiagnostics(
        ks_before=ks_before,
        ks_after=ks_after,
        retention_1=result.matched_1.n / before_1.n if before_1.n else 0.0,
        retention_2=result.matched_2.n / before_2.n if before_2.n else 0.0,
    )
