"""Gaussian-process power-curve models and functional curve comparison.

Both matched datasets are modeled as zero-mean GPs sharing one squared-
exponential ARD kernel and one noise variance, estimated by maximizing
the log marginal likelihood of the pooled matched data. Predictions on a
dense regular grid give the difference curve; a pointwise normal band at
level 1-alpha around zero supports the equal-curves hypothesis test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize, stats

from .dataset import Dataset


class GpFitError(RuntimeError):
    """Raised when factorization or hyperparameter optimization fails."""


@dataclass(frozen=True)
class Kernel:
    """Squared-exponential kernel with one lengthscale per covariate."""

    lengthscales: np.ndarray  # same units as the covariates
    signal_variance: float  # kW^2

    def __post_init__(self):
        object.__setattr__(
            self, "lengthscales", np.atleast_1d(np.asarray(self.lengthscales, dtype=np.float64))
        )
        if not (self.lengthscales > 0).all():
            raise ValueError("lengthscales must be positive")
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be positive")

    def __call__(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Cross-covariance matrix between the rows of x1 and x2."""
        sq = np.zeros((x1.shape[0], x2.shape[0]))
        for l, ell in enumerate(self.lengthscales):
            diff = (x1[:, l : l + 1] - x2[None, :, l]) / ell
            sq += diff * diff
        return self.signal_variance * np.exp(-0.5 * sq)


@dataclass
class GpModel:
    """Fitted GP regression model for one matched dataset."""

    kernel: Kernel
    noise_variance: float
    covariates: list[str]
    train_inputs: np.ndarray  # (n, p)
    train_outputs: np.ndarray  # centered power, kW
    mean_offset: float
    chol_lower: np.ndarray
    alpha: np.ndarray  # (K + noise I)^-1 (y - offset)
    jitter: float

    @property
    def n(self) -> int:
        return self.train_inputs.shape[0]


@dataclass
class TestGrid:
    """Regular lattice over the intersection of two covariate supports."""

    __test__ = False  # not a pytest class, despite the name

    covariates: list[str]
    axes: list[np.ndarray]
    points: np.ndarray  # (n_test, p), row-major over the axes

    @property
    def n_test(self) -> int:
        return self.points.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def steps(self) -> list[float]:
        return [float(a[1] - a[0]) if len(a) > 1 else 0.0 for a in self.axes]


@dataclass
class DifferenceCurve:
    """Predicted power curves on the grid and their difference with a band."""

    grid: TestGrid
    f1_hat: np.ndarray
    f2_hat: np.ndarray
    diff: np.ndarray  # f2_hat - f1_hat
    band_lower: np.ndarray
    band_upper: np.ndarray
    alpha: float

    def __post_init__(self):
        n = self.grid.n_test
        for name in ("f1_hat", "f2_hat", "diff", "band_lower", "band_upper"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length != n_test={n}")
        if not (self.band_lower <= self.band_upper).all():
            raise ValueError("band_lower must not exceed band_upper")


@dataclass
class HypothesisTest:
    """Outcome of the equal-curves test on a difference curve."""

    reject: bool
    rejection_indices: np.ndarray  # grid indices where diff exits the band
    region: dict[str, tuple[float, float]]  # covariate -> (min, max) over rejections


# -- factorization ----------------------------------------------------------

_JITTER_START = 1e-8
_JITTER_MAX = 1e-2


def _cholesky_with_jitter(a: np.ndarray, signal_variance: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter on failure."""
    try:
        return linalg.cholesky(a, lower=True), 0.0
    except linalg.LinAlgError:
        pass
    jitter = _JITTER_START * signal_variance
    eye = np.eye(a.shape[0])
    while jitter <= _JITTER_MAX * signal_variance * (1 + 1e-12):
        try:
            return linalg.cholesky(a + jitter * eye, lower=True), jitter
        except linalg.LinAlgError:
            jitter *= 10.0
    raise GpFitError(
        f"Cholesky failed up to jitter {_JITTER_MAX:g} * signal_variance; "
        "training data may contain duplicated inputs with conflicting power"
    )


def _thin_indices(x: np.ndarray, cap: int, bins_per_axis: int = 16) -> np.ndarray:
    """Deterministic stratified thinning to at most ``cap`` rows.

    Rows are assigned to cells of a coarse lattice over the covariate
    ranges; cells are drained round-robin in row order, which preserves
    coverage of sparse corners better than uniform striding.
    """
    n = x.shape[0]
    if n <= cap:
        return np.arange(n)
    cells = np.zeros(n, dtype=np.int64)
    for l in range(x.shape[1]):
        lo, hi = x[:, l].min(), x[:, l].max()
        if hi > lo:
            b = np.minimum((x[:, l] - lo) / (hi - lo) * bins_per_axis, bins_per_axis - 1)
        else:
            b = np.zeros(n)
        cells = cells * bins_per_axis + b.astype(np.int64)
    order = np.lexsort((np.arange(n), cells))
    # rank within cell, computed on the cell-sorted order
    sorted_cells = cells[order]
    starts = np.flatnonzero(np.r_[True, sorted_cells[1:] != sorted_cells[:-1]])
    rank = np.arange(n) - np.repeat(starts, np.diff(np.r_[starts, n]))
    pick = np.lexsort((order, sorted_cells, rank))[:cap]
    return np.sort(order[pick])


# -- marginal likelihood ----------------------------------------------------


def log_marginal_likelihood(
    x: np.ndarray, y_centered: np.ndarray, log_params: np.ndarray
) -> tuple[float, np.ndarray]:
    """Log marginal likelihood and its gradient in log-parameter space.

    ``log_params`` is [log lengthscale_1..p, log signal_variance,
    log noise_variance]. The gradient uses the standard trace identity
    d/dtheta = 0.5 tr((alpha alpha^T - A^-1) dA/dtheta) with A the noisy
    kernel matrix.
    """
    n, p = x.shape
    ell = np.exp(log_params[:p])
    sv = float(np.exp(log_params[p]))
    nv = float(np.exp(log_params[p + 1]))

    scaled_sq = np.empty((p, n, n))
    total = np.zeros((n, n))
    for l in range(p):
        diff = (x[:, l : l + 1] - x[None, :, l]) / ell[l]
        scaled_sq[l] = diff * diff
        total += scaled_sq[l]
    k = sv * np.exp(-0.5 * total)
    a = k + nv * np.eye(n)

    chol, jitter = _cholesky_with_jitter(a, sv)
    alpha = linalg.cho_solve((chol, True), y_centered)
    lml = (
        -0.5 * float(y_centered @ alpha)
        - float(np.log(np.diag(chol)).sum())
        - 0.5 * n * np.log(2.0 * np.pi)
    )

    a_inv = linalg.cho_solve((chol, True), np.eye(n))
    m = np.outer(alpha, alpha) - a_inv
    grad = np.empty(p + 2)
    for l in range(p):
        grad[l] = 0.5 * float((m * (k * scaled_sq[l])).sum())
    grad[p] = 0.5 * float((m * k).sum())
    grad[p + 1] = 0.5 * nv * float(np.trace(m))
    return lml, grad


def pooled_mean(d1: Dataset, d2: Dataset) -> float:
    """Mean power of the two datasets pooled, the shared centering offset."""
    return float(np.concatenate([d1.y, d2.y]).mean())


def fit_hyperparameters(
    d1: Dataset,
    d2: Dataset,
    covariates: list[str],
    seed: int = 0,
    n_starts: int = 3,
    fit_cap: int = 512,
) -> tuple[Kernel, float]:
    """Estimate the shared kernel and noise variance on the pooled data.

    Runs L-BFGS-B on the negative log marginal likelihood from ``n_starts``
    points (a data-driven start plus seeded perturbations). Data beyond
    ``fit_cap`` rows are thinned deterministically first; the estimate is
    reproducible given the seed.
    """
    if d1.n == 0 or d2.n == 0:
        raise ValueError("matched datasets must be non-empty")
    x = np.vstack([d1.covariate_matrix(covariates), d2.covariate_matrix(covariates)])
    y = np.concatenate([d1.y, d2.y])
    y = y - y.mean()
    keep = _thin_indices(x, fit_cap)
    x, y = x[keep], y[keep]
    n, p = x.shape

    ranges = np.array([max(x[:, l].max() - x[:, l].min(), 1e-12) for l in range(p)])
    var_y = max(float(y.var()), 1e-8)
    start = np.log(np.r_[ranges / 4.0, var_y, 0.1 * var_y])
    bounds = (
        [(np.log(1e-3 * r), np.log(1e2 * r)) for r in ranges]
        + [(np.log(1e-10 * var_y), np.log(1e4 * var_y))]
        + [(np.log(1e-8 * var_y), np.log(1e4 * var_y))]
    )

    rng = np.random.default_rng(seed)
    starts = [start] + [
        start + rng.normal(0.0, 0.7, size=p + 2) for _ in range(n_starts - 1)
    ]
    starts = [np.clip(s, [b[0] for b in bounds], [b[1] for b in bounds]) for s in starts]

    def objective(theta):
        lml, grad = log_marginal_likelihood(x, y, theta)
        return -lml, -grad

    best = None
    for theta0 in starts:
        try:
            res = optimize.minimize(
                objective,
                theta0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": 150},
            )
        except GpFitError:
            continue
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise GpFitError("hyperparameter optimization failed on every start")

    theta = best.x
    return Kernel(np.exp(theta[:p]), float(np.exp(theta[p]))), float(np.exp(theta[p + 1]))


def fit_gp(
    dataset: Dataset,
    covariates: list[str],
    kernel: Kernel,
    noise_variance: float,
    mean_offset: float | None = None,
    data_cap: int = 2500,
) -> GpModel:
    """Condition a GP with the given hyperparameters on one dataset.

    ``mean_offset`` should be the pooled mean when two models will be
    compared (both must revert to the same level away from data); it
    defaults to the dataset's own mean. Datasets beyond ``data_cap`` rows
    are thinned deterministically.
    """
    if not noise_variance > 0 or not np.isfinite(noise_variance):
        raise ValueError("noise_variance must be positive and finite")
    x = dataset.covariate_matrix(covariates)
    if x.shape[1] != len(kernel.lengthscales):
        raise ValueError("kernel dimensionality does not match covariates")
    keep = _thin_indices(x, data_cap)
    x = x[keep]
    y = dataset.y[keep]
    offset = float(y.mean()) if mean_offset is None else float(mean_offset)
    y_centered = y - offset

    a = kernel(x, x) + noise_variance * np.eye(x.shape[0])
    chol, jitter = _cholesky_with_jitter(a, kernel.signal_variance)
    alpha = linalg.cho_solve((chol, True), y_centered)
    return GpModel(
        kernel=kernel,
        noise_variance=noise_variance,
        covariates=list(covariates),
        train_inputs=x,
        train_outputs=y_centered,
        mean_offset=offset,
        chol_lower=chol,
        alpha=alpha,
        jitter=jitter,
    )


def gp_predict(model: GpModel, grid) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and pointwise variance on the grid points.

    Accepts a TestGrid or a raw (m, p) array. Variance is the noise-free
    posterior k(x,x) - r^T (K + noise I)^-1 r, floored at zero against
    roundoff.
    """
    pts = grid.points if isinstance(grid, TestGrid) else np.atleast_2d(grid)
    if pts.shape[1] != len(model.covariates):
        raise ValueError("grid dimensionality does not match model covariates")
    mean = np.empty(pts.shape[0])
    var = np.empty(pts.shape[0])
    sv = model.kernel.signal_variance
    for s in range(0, pts.shape[0], 8192):
        chunk = pts[s : s + 8192]
        r = model.kernel(model.train_inputs, chunk)  # (n, m)
        mean[s : s + 8192] = r.T @ model.alpha + model.mean_offset
        v = linalg.solve_triangular(model.chol_lower, r, lower=True)
        var[s : s + 8192] = sv - (v * v).sum(axis=0)
    if var.min() < -1e-6 * sv:
        raise GpFitError(f"posterior variance {var.min():g} below roundoff floor")
    return mean, np.maximum(var, 0.0)


def build_test_grid(
    d1: Dataset, d2: Dataset, covariates: list[str], resolution: int | list[int] = 50
) -> TestGrid:
    """Regular lattice over the intersection of the two covariate supports."""
    if d1.n == 0 or d2.n == 0:
        raise ValueError("both datasets must be non-empty")
    res = [resolution] * len(covariates) if isinstance(resolution, int) else list(resolution)
    if len(res) != len(covariates):
        raise ValueError("one resolution per covariate required")
    axes = []
    for cov, r in zip(covariates, res):
        lo = max(d1.columns[cov].min(), d2.columns[cov].min())
        hi = min(d1.columns[cov].max(), d2.columns[cov].max())
        if not hi > lo:
            raise ValueError(
                f"empty or zero-width support intersection for {cov!r} "
                f"([{lo:g}, {hi:g}]); matching likely failed upstream"
            )
        if r < 2:
            raise ValueError("resolution must be at least 2 per axis")
        axes.append(np.linspace(lo, hi, r))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.reshape(-1) for m in mesh])
    return TestGrid(list(covariates), axes, points)


def difference_band(
    m1: GpModel, m2: GpModel, grid: TestGrid, alpha: float = 0.05
) -> DifferenceCurve:
    """Difference curve f2 - f1 with a pointwise null band.

    Under the equal-curves null the band is centered at zero with width
    z_{1-alpha/2} * sqrt(var1 + var2), treating the two posteriors as
    independent given the shared hyperparameters.
    """
    if m1.covariates != m2.covariates:
        raise ValueError("models were fit on different covariates")
    if not np.allclose(m1.kernel.lengthscales, m2.kernel.lengthscales) or not np.isclose(
        m1.kernel.signal_variance, m2.kernel.signal_variance
    ):
        raise ValueError("models must share kernel hyperparameters")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    f1, v1 = gp_predict(m1, grid)
    f2, v2 = gp_predict(m2, grid)
    half = stats.norm.ppf(1.0 - alpha / 2.0) * np.sqrt(v1 + v2)
    return DifferenceCurve(
        grid=grid,
        f1_hat=f1,
        f2_hat=f2,
        diff=f2 - f1,
        band_lower=-half,
        band_upper=half,
        alpha=alpha,
    )


def hypothesis_test(curve: DifferenceCurve) -> HypothesisTest:
    """Test the equal-curves null: reject iff the difference exits the band.

    The rejection region is reported both as grid indices and as the
    per-covariate value range spanned by the rejected points.
    """
    outside = (curve.diff > curve.band_upper) | (curve.diff < curve.band_lower)
    idx = np.flatnonzero(outside)
    region = {}
    if idx.size:
        pts = curve.grid.points[idx]
        region = {
            cov: (float(pts[:, l].min()), float(pts[:, l].max()))
            for l, cov in enumerate(curve.grid.covariates)
        }
    return HypothesisTest(reject=bool(idx.size), rejection_indices=idx, region=region)
