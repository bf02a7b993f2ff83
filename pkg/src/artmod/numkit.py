"""Deterministic numeric primitives: cosine similarity, exact PCA, k-means.

Embeddings are plain 1-D float arrays and data matrices are
``(n_points, dim)``. Every operation here is a pure function of its inputs
(plus an explicit seed where one is taken), so the module is safe to use
from multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PcaModel",
    "as_embedding",
    "cosine_similarity",
    "kmeans",
    "pca_fit_project",
]


def as_embedding(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 vector.

    Parameters
    ----------
    values : array_like
        One-dimensional numeric data.
    dim : int, optional
        Required length; a mismatch raises.

    Raises
    ------
    ValueError
        If the input is not 1-D, is empty, contains NaN/Inf, or has a
        length other than ``dim``.
    """
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {vec.shape}")
    if vec.size == 0:
        raise ValueError("empty vector")
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector contains non-finite entries")
    if dim is not None and vec.size != dim:
        raise ValueError(f"vector has length {vec.size}, expected {dim}")
    return vec


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, clipped to [-1, 1].

    Symmetric in its arguments and invariant to positive rescaling of
    either one. Raises ``ValueError`` on dimension mismatch or on a
    zero-norm input (which signals a degenerate embedding upstream).
    """
    va = as_embedding(a)
    vb = as_embedding(b)
    if va.size != vb.size:
        raise ValueError(f"dimension mismatch: {va.size} vs {vb.size}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm vector has no direction")
    return float(np.clip(float(va @ vb) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus orthonormal principal directions.

    ``components`` has shape ``(out_dims, dim)`` with unit-norm rows,
    mutually orthogonal within 1e-6; ``explained_variance`` holds the
    matching covariance eigenvalues, nonincreasing.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def project(self, data) -> np.ndarray:
        """Center ``data`` and project it onto the principal directions."""
        return (np.asarray(data, dtype=np.float64) - self.mean) @ self.components.T

    def reconstruct(self, projected) -> np.ndarray:
        """Invert :meth:`project`; exact only when all components were kept."""
        return np.asarray(projected, dtype=np.float64) @ self.components + self.mean


def pca_fit_project(data, out_dims: int) -> tuple[PcaModel, np.ndarray]:
    """Fit PCA by SVD of the centered data matrix and project the data.

    The sign of each component is fixed so that its entry of largest
    absolute value is positive, which makes the decomposition (and hence
    the projection) deterministic.

    Parameters
    ----------
    data : array_like, shape (n_points, dim)
        At least ``out_dims + 1`` points, not all identical.
    out_dims : int
        Number of principal directions to keep, in ``[1, dim]``.

    Returns
    -------
    (PcaModel, ndarray)
        The fitted model and the ``(n_points, out_dims)`` projection.
    """
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"expected 2-D data, got shape {matrix.shape}")
    n, dim = matrix.shape
    if not np.all(np.isfinite(matrix)):
        raise ValueError("data contains non-finite entries")
    if not 1 <= out_dims <= dim:
        raise ValueError(f"out_dims must be in [1, {dim}], got {out_dims}")
    if n < out_dims + 1:
        raise ValueError(
            f"need at least {out_dims + 1} points for {out_dims} components, got {n}"
        )
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    if np.abs(centered).max() <= 1e-12 * max(1.0, float(np.abs(matrix).max())):
        raise ValueError("degenerate data: all points are identical")
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:out_dims].copy()
    for row in components:
        peak = int(np.argmax(np.abs(row)))
        if row[peak] < 0:
            row *= -1.0
    explained = (singular[:out_dims] ** 2) / (n - 1)
    model = PcaModel(mean=mean, components=components, explained_variance=explained)
    return model, centered @ components.T


def kmeans(
    data,
    k: int,
    seed: int,
    restarts: int = 10,
    max_iter: int = 300,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Cluster the rows of ``data`` into ``k`` groups with Lloyd iterations.

    Runs ``restarts`` independent D²-weighted probabilistic seedings (the
    greedy farthest-point-style scheme) off a single PCG64 stream and keeps
    the run with the lowest inertia, so the result is deterministic for a
    fixed seed.

    Returns
    -------
    (assignments, centroids, inertia)
        Integer cluster index per row, the ``(k, dim)`` centroid matrix,
        and the total squared distance of rows to their centroids.
    """
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"expected 2-D data, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("data contains non-finite entries")
    n = matrix.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    for _ in range(restarts):
        centers = _seed_centers(matrix, k, rng)
        assign, centers, inertia, _ = _lloyd(matrix, centers, max_iter)
        if best is None or inertia < best[2]:
            best = (assign, centers, inertia)
    assert best is not None
    return best


def _seed_centers(matrix: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D²-weighted center seeding; falls back to uniform when all D² are 0."""
    n = matrix.shape[0]
    first = int(rng.integers(n))
    chosen = [first]
    d2 = ((matrix - matrix[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((matrix - matrix[nxt]) ** 2).sum(axis=1))
    return matrix[chosen].copy()


def _lloyd(
    matrix: np.ndarray,
    centers: np.ndarray,
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    """One Lloyd run from given centers.

    Returns (assignments, centers, inertia, history) where history is the
    inertia recorded after each assignment step; it is nonincreasing.
    """
    n = matrix.shape[0]
    rows = np.arange(n)
    history: list[float] = []
    previous: np.ndarray | None = None
    assign = np.zeros(n, dtype=np.intp)
    for _ in range(max_iter):
        d2 = ((matrix[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        history.append(float(d2[rows, assign].sum()))
        if previous is not None and np.array_equal(assign, previous):
            break
        previous = assign
        for j in range(centers.shape[0]):
            members = assign == j
            if members.any():
                centers[j] = matrix[members].mean(axis=0)
            else:
                # dead center: restart it at the point currently worst served
                centers[j] = matrix[int(d2[rows, assign].argmax())]
    d2 = ((matrix[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    inertia = float(d2[rows, assign].sum())
    return assign, centers, inertia, history
