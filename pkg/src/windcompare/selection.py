"""Covariate subset selection by cross-validated kNN regression.

Covariates are ranked with greedy stepwise selection (forward or backward)
under 10-fold cross-validated RMSE, reported as a percentage of rated
power. The kNN scan runs on the compiled kernel when available.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import knn_indices
from .dataset import Dataset


@dataclass
class SelectionResult:
    """Outcome of a stepwise selection run.

    ``ordered_covariates`` ranks every candidate from most to least
    important; ``best_subset`` is the prefix at which the stepwise search
    stopped improving; ``rmse_path[i]`` is the CV RMSE (% of rated power)
    of the first i+1 covariates in ranked order.
    """

    ordered_covariates: list[str]
    best_subset: list[str]
    rmse_path: list[float]
    k_neighbors: int
    folds: int

    def to_dict(self) -> dict:
        return {
            "ordered_covariates": self.ordered_covariates,
            "best_subset": self.best_subset,
            "rmse_path": self.rmse_path,
            "k_neighbors": self.k_neighbors,
            "folds": self.folds,
        }


def _scale_factors(train: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # z-score by sample (n-1) sd; a zero-spread covariate gets weight 0 so
    # it cannot dominate (or contribute to) the distance
    mean = train.mean(axis=0)
    sd = train.std(axis=0, ddof=1) if train.shape[0] > 1 else np.zeros(train.shape[1])
    inv = np.where(sd > 0, 1.0 / np.where(sd > 0, sd, 1.0), 0.0)
    return mean, inv


def knn_predict(
    train: Dataset, covariates: Sequence[str], query, k: int
) -> float:
    """Mean power over the k training rows nearest to the query point.

    Distances are Euclidean after z-scoring each covariate by the training
    mean and sample standard deviation. Ties break toward the earlier
    training row.
    """
    x = train.covariate_matrix(covariates)
    if not 1 <= k <= x.shape[0]:
        raise ValueError(f"k={k} outside [1, {x.shape[0]}]")
    query = np.asarray(query, dtype=np.float64).reshape(1, -1)
    if query.shape[1] != x.shape[1]:
        raise ValueError(f"query has {query.shape[1]} values for {x.shape[1]} covariates")
    mean, inv = _scale_factors(x)
    idx = knn_indices((x - mean) * inv, (query - mean) * inv, k)
    return float(train.y[idx[0]].mean())


def cv_rmse(
    dataset: Dataset,
    covariates: Sequence[str],
    k: int,
    rated_power: float,
    folds: int = 10,
    seed: int = 0,
) -> float:
    """k-fold cross-validated kNN RMSE as a percentage of rated power.

    Fold assignment is a seeded shuffle of the canonical (timestamp) row
    order, so permuted input files produce identical folds and the result
    is deterministic given the seed.
    """
    if rated_power <= 0:
        raise ValueError("rated_power must be positive")
    n = dataset.n
    if n < folds:
        raise ValueError(f"n={n} smaller than folds={folds}")
    x = dataset.covariate_matrix(covariates)
    y = dataset.y

    rng = np.random.default_rng(seed)
    fold_id = np.empty(n, dtype=np.intp)
    fold_id[rng.permutation(n)] = np.arange(n) % folds

    sq_err = np.empty(n)
    for f in range(folds):
        test = fold_id == f
        x_tr, y_tr, x_te = x[~test], y[~test], x[test]
        if k > x_tr.shape[0]:
            raise ValueError(f"k={k} exceeds training-fold size {x_tr.shape[0]}")
        mean, inv = _scale_factors(x_tr)
        idx = knn_indices((x_tr - mean) * inv, (x_te - mean) * inv, k)
        sq_err[test] = (y_tr[idx].mean(axis=1) - y[test]) ** 2
    return float(np.sqrt(sq_err.mean()) / rated_power * 100.0)


def forward_select(
    dataset: Dataset,
    candidates: Sequence[str],
    k: int,
    rated_power: float,
    folds: int = 10,
    seed: int = 0,
) -> SelectionResult:
    """Greedy forward stepwise selection.

    At each step the candidate giving the lowest CV RMSE joins the model.
    The best subset ends just before the first addition that fails to
    strictly reduce the RMSE; ranking continues over all candidates so the
    full importance order is reported.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidate covariates")
    ordered: list[str] = []
    path: list[float] = []
    stop: int | None = None
    remaining = list(candidates)
    while remaining:
        scores = [
            cv_rmse(dataset, ordered + [c], k, rated_power, folds, seed) for c in remaining
        ]
        best = int(np.argmin(scores))
        if stop is None and path and scores[best] >= path[-1]:
            stop = len(ordered)
        ordered.append(remaining.pop(best))
        path.append(scores[best])
    if stop is None:
        stop = len(ordered)
    return SelectionResult(ordered, ordered[:stop], path, k, folds)


def backward_select(
    dataset: Dataset,
    candidates: Sequence[str],
    k: int,
    rated_power: float,
    folds: int = 10,
    seed: int = 0,
) -> SelectionResult:
    """Greedy backward elimination, mirroring :func:`forward_select`.

    Repeatedly drops the covariate whose removal lowers the CV RMSE the
    most; the best subset is the set held when no removal strictly reduces
    it. Elimination continues down to one covariate so the result carries
    the same full ranking and per-size RMSE path as the forward variant.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidate covariates")
    current = list(candidates)
    rmse_by_size = {len(current): cv_rmse(dataset, current, k, rated_power, folds, seed)}
    removed: list[str] = []
    best_size: int | None = None
    while len(current) > 1:
        scores = [
            cv_rmse(dataset, [c for c in current if c != r], k, rated_power, folds, seed)
            for r in current
        ]
        drop = int(np.argmin(scores))
        if best_size is None and scores[drop] >= rmse_by_size[len(current)]:
            best_size = len(current)
        removed.append(current.pop(drop))
        rmse_by_size[len(current)] = scores[drop]
    if best_size is None:
        best_size = 1
    ordered = current + removed[::-1]  # survivor first, then reverse removal order
    path = [rmse_by_size[size] for size in range(1, len(ordered) + 1)]
    return SelectionResult(ordered, ordered[:best_size], path, k, folds)


def select_farm_subset(
    farm: dict[str, Dataset],
    candidates: Sequence[str],
    k: int,
    rated_power: float,
    folds: int = 10,
    seed: int = 0,
    representatives: Sequence[str] | None = None,
) -> SelectionResult:
    """Farm-level covariate subset, computed once and reused for all pairs.

    With ``representatives`` given, selection runs on those turbines only
    (the cheap strategy); otherwise on every turbine. Per-turbine best
    subsets are merged by union, ordered by mean selection rank.
    """
    ids = list(representatives) if representatives else sorted(farm)
    missing = [t for t in ids if t not in farm]
    if missing:
        raise ValueError(f"representative turbines not in farm data: {missing}")
    results = {
        t: forward_select(farm[t], candidates, k, rated_power, folds, seed) for t in ids
    }
    if len(ids) == 1:
        return results[ids[0]]

    union: set[str] = set()
    for res in results.values():
        union.update(res.best_subset)
    ranks = {
        c: float(np.mean([res.ordered_covariates.index(c) for res in results.values()]))
        for c in union
    }
    ordered_union = sorted(union, key=lambda c: (ranks[c], c))
    base = results[ids[0]]
    full_order = ordered_union + [
        c for c in base.ordered_covariates if c not in ordered_union
    ]
    path = [float(np.mean([res.rmse_path[i] for res in results.values()]))
            for i in range(len(full_order))]
    return SelectionResult(full_order, ordered_union, path, k, folds)
