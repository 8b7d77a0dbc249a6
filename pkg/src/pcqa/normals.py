"""Per-point surface normal estimation via neighborhood PCA."""

from __future__ import annotations

import warnings

import numpy as np

from .cloud import PointCloud
from .neighbors import NeighborIndex

DEFAULT_NORMAL_K = 10


def normal_vectors(cloud: PointCloud, k: int = DEFAULT_NORMAL_K) -> tuple[np.ndarray, np.ndarray]:
    """Estimate unit normals for every point; returns (normals, degenerate mask).

    The normal at a point is the eigenvector of smallest eigenvalue of the
    covariance of its k nearest neighbors (self excluded, centered at the
    neighborhood mean).  Sign carries no meaning and is canonicalized so the
    largest-magnitude component is positive.  A neighborhood of coincident
    points has no defined normal; those points get (0, 0, 1) and are flagged
    in the returned mask.
    """
    if k < 3:
        raise ValueError(f"normal estimation needs k >= 3, got {k}")
    n = len(cloud)
    if n < k + 1:
        raise ValueError(f"cloud of {n} points is too small for normal estimation with k={k}")

    idx, _ = NeighborIndex(cloud).self_excluded_neighbors(k)
    neighbors = cloud.points[idx]  # (N, k, 3)
    centered = neighbors - neighbors.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k

    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending eigenvalues
    normals = eigvecs[:, :, 0].copy()
    degenerate = eigvals[:, 2] <= 0.0  # all-coincident neighborhoods have zero covariance
    normals[degenerate] = (0.0, 0.0, 1.0)

    norms = np.linalg.norm(normals, axis=1)
    normals /= norms[:, None]
    # deterministic sign: flip so the largest-|component| entry is positive
    lead = np.take_along_axis(normals, np.abs(normals).argmax(axis=1)[:, None], axis=1)[:, 0]
    normals[lead < 0.0] *= -1.0
    return normals, degenerate


def estimate_normals(cloud: PointCloud, k: int = DEFAULT_NORMAL_K) -> PointCloud:
    """Return a copy of the cloud with PCA-estimated unit normals attached.

    Warns when any neighborhood is degenerate (coincident points); the
    affected points carry the placeholder normal (0, 0, 1).  Use
    ``normal_vectors`` to obtain the per-point degeneracy mask.
    """
    normals, degenerate = normal_vectors(cloud, k=k)
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} of {len(cloud)} points have degenerate "
            "(coincident) neighborhoods; their normals were set to (0, 0, 1)",
            RuntimeWarning,
            stacklevel=2,
        )
    return cloud.with_normals(normals)
