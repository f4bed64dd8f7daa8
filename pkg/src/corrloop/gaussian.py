"""Gaussian model core: datasets, parameters, fitting, sampling, densities.

Values are immutable once constructed (arrays are frozen), so they can be
shared freely across threads. All randomness flows through an explicitly
passed numpy Generator.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    CholeskyFailureError,
    DimensionMismatchError,
    EmptyOrSingletonError,
)

_LOG_2PI = math.log(2.0 * math.pi)

# Relative tolerances for validating covariance structure.
_SYM_RTOL = 1e-12
_PSD_RTOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """A finite set of points in R^d, stored as an (n, d) float64 array.

    n may be zero; d must be at least one. Entries must be finite.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise DimensionMismatchError(
                f"points must be a 2-d array of shape (n, d), got ndim={pts.ndim}"
            )
        if pts.shape[1] < 1:
            raise DimensionMismatchError("point dimension must be at least 1")
        if pts.size and not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", _freeze(pts))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def concat_datasets(datasets: list[Dataset]) -> Dataset:
    """Concatenate datasets of equal dimension, preserving order."""
    if not datasets:
        raise EmptyOrSingletonError("nothing to concatenate")
    d = datasets[0].dim
    for ds in datasets[1:]:
        if ds.dim != d:
            raise DimensionMismatchError(f"dims differ: {ds.dim} vs {d}")
    return Dataset(np.concatenate([ds.points for ds in datasets], axis=0))


@dataclass(frozen=True)
class GaussianParams:
    """Mean vector and covariance matrix of a Gaussian on R^d.

    The covariance must be symmetric (within 1e-12 relative tolerance) and
    positive semidefinite at floating precision. Positive definiteness is
    only required by the operations that factor it.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1:
            raise DimensionMismatchError("mean must be a vector")
        d = mean.shape[0]
        if d < 1:
            raise DimensionMismatchError("dimension must be at least 1")
        if cov.shape != (d, d):
            raise DimensionMismatchError(
                f"cov shape {cov.shape} does not match dimension {d}"
            )
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise ValueError("parameters must be finite")
        scale = max(1.0, float(np.abs(cov).max()))
        if float(np.abs(cov - cov.T).max()) > _SYM_RTOL * scale:
            raise ValueError("cov must be symmetric within 1e-12 relative tolerance")
        w = np.linalg.eigvalsh(cov)
        if float(w.min()) < -_PSD_RTOL * scale:
            raise ValueError("cov must be positive semidefinite")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "cov", _freeze(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_gaussian(data: Dataset, cov_floor: float = 1e-9) -> GaussianParams:
    """Maximum-likelihood Gaussian fit with an unconditional diagonal floor.

    Uses the n-divisor covariance estimate. cov_floor * I is always added,
    which keeps refits on degenerate point sets factorizable.

    Raises EmptyOrSingletonError for fewer than two points.
    """
    if cov_floor < 0 or not math.isfinite(cov_floor):
        raise ValueError("cov_floor must be finite and nonnegative")
    n = len(data)
    if n < 2:
        raise EmptyOrSingletonError(f"need at least 2 points to fit, got {n}")
    pts = data.points
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / n
    cov = (cov + cov.T) / 2.0  # exact symmetry regardless of BLAS summation order
    cov = cov + cov_floor * np.eye(data.dim)
    return GaussianParams(mean=mean, cov=cov)


def _cholesky(params: GaussianParams) -> np.ndarray:
    try:
        return np.linalg.cholesky(params.cov)
    except np.linalg.LinAlgError as e:
        raise CholeskyFailureError(
            "covariance is not positive definite at working precision"
        ) from e


def sample_gaussian(params: GaussianParams, m: int, rng: np.random.Generator) -> Dataset:
    """Draw m iid points, via mean + L z with L the Cholesky factor.

    Identical (params, m, seed) gives bit-identical output.
    """
    if m < 1:
        raise ValueError(f"sample count must be at least 1, got {m}")
    L = _cholesky(params)
    z = rng.standard_normal((m, params.dim))
    return Dataset(params.mean + z @ L.T)


def log_pdf(params: GaussianParams, x: np.ndarray) -> float:
    """Log density of the Gaussian at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.dim,):
        raise DimensionMismatchError(
            f"point shape {x.shape} does not match dimension {params.dim}"
        )
    return float(log_pdf_batch(params, x[None, :])[0])


def log_pdf_batch(params: GaussianParams, points: np.ndarray) -> np.ndarray:
    """Log density at each row of an (n, d) array. Returns shape (n,)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != params.dim:
        raise DimensionMismatchError(
            f"points shape {pts.shape} does not match dimension {params.dim}"
        )
    L = _cholesky(params)
    # Solve L y = (x - mean)^T for all points at once.
    y = solve_triangular(L, (pts - params.mean).T, lower=True)
    log_det = 2.0 * float(np.log(np.diag(L)).sum())
    maha = np.einsum("ij,ij->j", y, y)
    return -0.5 * (params.dim * _LOG_2PI + log_det + maha)


def to_param_vector(params: GaussianParams) -> np.ndarray:
    """Flatten to a vector of length d + d*d: mean first, then cov row-major."""
    return np.concatenate([params.mean, params.cov.reshape(-1)])


def from_param_vector(vec: np.ndarray, dim: int) -> GaussianParams:
    """Inverse of to_param_vector."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (dim + dim * dim,):
        raise DimensionMismatchError(
            f"vector length {vec.shape} does not match dimension {dim}"
        )
    return GaussianParams(mean=vec[:dim], cov=vec[dim:].reshape(dim, dim))
