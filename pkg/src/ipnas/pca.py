"""Top-2 principal components by power iteration with deflation.

Used to project recorded particle positions into two dimensions for the
fitness-surface and trajectory exports.  The iteration re-orthogonalizes
the iterate against already-found components every step, so the second
component stays orthogonal to the first even when the residual spectrum is
numerically zero (points on a line).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError

TOLERANCE = 1e-9
MAX_ITERATIONS = 10_000


def power_iteration(matrix, found, rng, tol=TOLERANCE, max_iter=MAX_ITERATIONS):
    """Dominant eigenpair of a symmetric matrix, orthogonal to ``found`` rows."""
    n = matrix.shape[0]
    v = rng.standard_normal(n)
    if found.size:
        v -= found.T @ (found @ v)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        v = np.zeros(n)
        v[0] = 1.0
    else:
        v /= norm
    for _ in range(max_iter):
        w = matrix @ v
        if found.size:
            w -= found.T @ (found @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break  # residual space is exactly null; keep the current basis vector
        w /= norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    eigenvalue = float(v @ matrix @ v)
    return eigenvalue, v


def _orthonormal_complement(found: np.ndarray, n: int) -> np.ndarray:
    """A deterministic unit vector orthogonal to the rows of ``found``."""
    for basis_index in range(n):
        v = np.zeros(n)
        v[basis_index] = 1.0
        v -= found.T @ (found @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise DegenerateError("no orthogonal direction left")


@dataclass
class PcaResult:
    components: np.ndarray  # (2, n_features), orthonormal rows
    eigenvalues: np.ndarray  # (2,)
    mean: np.ndarray
    projected: np.ndarray  # (n_points, 2)
    explained_variance_ratio: float


def pca_top2(points: np.ndarray, seed: int = 0) -> PcaResult:
    """Project points onto their top-2 covariance eigenvectors.

    Raises DegenerateError when the centered points carry no variance at
    all (for example, all points identical).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise DegenerateError(f"need at least 2 points, got shape {points.shape}")
    mean = points.mean(axis=0)
    centered = points - mean
    cov = centered.T @ centered / (points.shape[0] - 1)
    total_variance = float(np.trace(cov))
    scale = max(1.0, float(np.abs(points).max()) ** 2)
    if total_variance <= 1e-12 * scale:
        raise DegenerateError("covariance has rank 0: all points coincide")

    rng = np.random.default_rng(seed)
    components = np.zeros((0, points.shape[1]))
    eigenvalues = []
    for _ in range(2):
        eigenvalue, vector = power_iteration(cov, components, rng)
        if eigenvalue <= 1e-12 * total_variance:
            # Exhausted spectrum (e.g. rank-1 data); any orthogonal unit
            # direction completes the basis with zero projected variance.
            vector = _orthonormal_complement(components, points.shape[1])
            eigenvalue = max(float(vector @ cov @ vector), 0.0)
        components = np.vstack([components, vector])
        eigenvalues.append(eigenvalue)

    projected = centered @ components.T
    ratio = float(sum(eigenvalues) / total_variance)
    return PcaResult(
        components=components,
        eigenvalues=np.array(eigenvalues),
        mean=mean,
        projected=projected,
        explained_variance_ratio=ratio,
    )
