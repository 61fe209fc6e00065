"""Pure-numpy implementations of the hot kernels.

Semantics contract shared with the compiled twin in ``_core.pyx``:

* distances accumulate squared per-covariate terms in covariate order,
* k-nearest ties break toward the lower training row index,
* greedy matching scans baseline rows in the given order, consuming at
  most one candidate per row, preferring the lowest candidate index on
  exact distance ties.

Both backends perform the identical float64 operations in the identical
order, so their integer outputs agree bit-for-bit.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 256  # query rows per distance block, bounds peak memory


def knn_indices(train: np.ndarray, query: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest training rows for each query row.

    Squared Euclidean distance on the given (already scaled) coordinates.
    Returns an (m, k) int64 array ordered by (distance, train row index).
    """
    train = np.ascontiguousarray(train, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    m = query.shape[0]
    out = np.empty((m, k), dtype=np.int64)
    for start in range(0, m, _CHUNK):
        q = query[start : start + _CHUNK]
        acc = np.zeros((q.shape[0], train.shape[0]))
        for l in range(train.shape[1]):
            diff = q[:, l : l + 1] - train[:, l][None, :]
            acc += diff * diff
        out[start : start + _CHUNK] = np.argsort(acc, axis=1, kind="stable")[:, :k]
    return out


def match_one_way_indices(
    base: np.ndarray,
    cand: np.ndarray,
    thresholds: np.ndarray,
    inv_scale: np.ndarray,
    circular: np.ndarray,
) -> np.ndarray:
    """Greedy hierarchical matching of baseline rows against a candidate pool.

    For each baseline row (in array order) the surviving candidates are
    those not yet consumed whose per-covariate absolute difference is below
    ``thresholds`` (equality required where a threshold is exactly 0, the
    degenerate zero-spread case). Among survivors the closest in scaled
    Euclidean distance is consumed. Returns one candidate index per
    baseline row, -1 where the subgroup came up empty.
    """
    base = np.ascontiguousarray(base, dtype=np.float64)
    cand = np.ascontiguousarray(cand, dtype=np.float64)
    nb, p = base.shape
    nc = cand.shape[0]
    consumed = np.zeros(nc, dtype=bool)
    out = np.full(nb, -1, dtype=np.int64)

    for j in range(nb):
        ok = ~consumed
        if not ok.any():
            break
        for l in range(p):
            diff = np.abs(cand[:, l] - base[j, l])
            if circular[l]:
                diff = np.minimum(diff, 360.0 - diff)
            ok &= (diff == 0.0) if thresholds[l] == 0.0 else (diff < thresholds[l])
        rows = np.flatnonzero(ok)
        if rows.size == 0:
            continue
        acc = np.zeros(rows.size)
        for l in range(p):
            diff = np.abs(cand[rows, l] - base[j, l])
            if circular[l]:
                diff = np.minimum(diff, 360.0 - diff)
            term = diff * inv_scale[l]
            acc += term * term
        best = rows[int(np.argmin(acc))]
        out[j] = best
        consumed[best] = True
    return out
