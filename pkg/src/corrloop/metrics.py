"""Distances between Gaussian laws, point sets, and parameter vectors."""

import numpy as np

from .assignment import match_points
from .errors import DimensionMismatchError, EigFailureError, SizeMismatchError
from .gaussian import Dataset, GaussianParams, to_param_vector


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    # Symmetric square root via eigendecomposition; eigenvalues are
    # clamped at zero so roundoff-negative values cannot poison the sqrt.
    try:
        w, v = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as e:
        raise EigFailureError("eigendecomposition failed") from e
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def gaussian_w2(p: GaussianParams, q: GaussianParams) -> float:
    """Exact 2-Wasserstein distance between two Gaussians.

    sqrt(|mu_p - mu_q|^2 + tr(S_p + S_q - 2 (S_p^1/2 S_q S_p^1/2)^1/2)).
    The trace term equals min over orthogonal U of |S_p^1/2 - S_q^1/2 U|_F^2
    (U the polar factor of S_q^1/2 S_p^1/2) and is evaluated in that
    aligned form: it is nonnegative by construction and free of the
    cancellation that would otherwise dominate near p = q.
    """
    if p.dim != q.dim:
        raise DimensionMismatchError(f"dims differ: {p.dim} vs {q.dim}")
    root_p = _sqrtm_psd(p.cov)
    root_q = _sqrtm_psd(q.cov)
    try:
        u, _, vt = np.linalg.svd(root_q @ root_p)
    except np.linalg.LinAlgError as e:
        raise EigFailureError("singular value decomposition failed") from e
    aligned = root_p - root_q @ (u @ vt)
    trace_term = float(np.einsum("ij,ij->", aligned, aligned))
    mean_term = float(np.dot(p.mean - q.mean, p.mean - q.mean))
    return float(np.sqrt(mean_term + trace_term))


def empirical_w2(a: Dataset, b: Dataset) -> float:
    """Empirical 2-Wasserstein distance between equal-size point sets.

    Exact: sqrt of the mean squared distance under the minimum
    squared-cost bijective matching.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dims differ: {a.dim} vs {b.dim}")
    if len(a) != len(b):
        raise SizeMismatchError(f"sizes differ: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise SizeMismatchError("point sets must be nonempty")
    perm = match_points(a.points, b.points, squared=True)
    diffs = a.points - b.points[perm]
    return float(np.sqrt(np.einsum("ij,ij->i", diffs, diffs).mean()))


def param_distance(p: GaussianParams, q: GaussianParams) -> float:
    """Euclidean distance between flattened parameter vectors."""
    if p.dim != q.dim:
        raise DimensionMismatchError(f"dims differ: {p.dim} vs {q.dim}")
    return float(np.linalg.norm(to_param_vector(p) - to_param_vector(q)))
