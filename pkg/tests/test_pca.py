"""PCA tests: oracle equivalence with a dense eigensolver, degenerate cases."""

import numpy as np
import pytest

from ipnas.errors import DegenerateError
from ipnas.pca import pca_top2


def dense_oracle(points):
    """Full symmetric eigendecomposition of the covariance."""
    centered = points - points.mean(axis=0)
    cov = centered.T @ centered / (points.shape[0] - 1)
    eigenvalues = np.linalg.eigh(cov)[0]
    return np.sort(eigenvalues)[::-1], float(np.trace(cov))


def test_random_points_match_dense_eigensolver():
    rng = np.random.default_rng(0)
    points = rng.standard_normal((500, 18)) @ rng.standard_normal((18, 18))
    result = pca_top2(points)
    eigenvalues, total = dense_oracle(points)
    expected_ratio = (eigenvalues[0] + eigenvalues[1]) / total
    assert abs(result.explained_variance_ratio - expected_ratio) < 1e-6
    np.testing.assert_allclose(result.eigenvalues, eigenvalues[:2], rtol=1e-6)


def test_components_are_orthonormal():
    rng = np.random.default_rng(1)
    points = rng.standard_normal((120, 6))
    result = pca_top2(points)
    gram = result.components @ result.components.T
    np.testing.assert_allclose(gram, np.eye(2), atol=1e-8)


def test_projection_matches_centered_dot():
    rng = np.random.default_rng(2)
    points = rng.standard_normal((60, 5))
    result = pca_top2(points)
    centered = points - result.mean
    np.testing.assert_allclose(result.projected, centered @ result.components.T)


def test_points_on_a_line_have_vanishing_second_component():
    rng = np.random.default_rng(3)
    direction = rng.standard_normal(18)
    direction /= np.linalg.norm(direction)
    scales = rng.uniform(-5, 5, size=50)
    points = 2.0 + np.outer(scales, direction)
    result = pca_top2(points)
    assert np.abs(result.projected[:, 1]).max() < 1e-6
    # pc1 carries all the variance.
    assert result.explained_variance_ratio > 1.0 - 1e-9


def test_duplicate_points_degenerate():
    points = np.tile(np.arange(6.0), (10, 1))
    with pytest.raises(DegenerateError):
        pca_top2(points)


def test_single_point_rejected():
    with pytest.raises(DegenerateError):
        pca_top2(np.zeros((1, 4)))


def test_isotropic_plane_explained_variance():
    # Two equal eigenvalues: any basis of the plane is fine, the ratio is not.
    rng = np.random.default_rng(4)
    plane = rng.standard_normal((400, 2))
    points = np.zeros((400, 7))
    points[:, 0] = plane[:, 0]
    points[:, 3] = plane[:, 1]
    result = pca_top2(points)
    eigenvalues, total = dense_oracle(points)
    expected = (eigenvalues[0] + eigenvalues[1]) / total
    assert abs(result.explained_variance_ratio - expected) < 1e-6
    assert expected > 1.0 - 1e-12


def test_deterministic_given_same_input():
    rng = np.random.default_rng(5)
    points = rng.standard_normal((80, 9))
    a = pca_top2(points)
    b = pca_top2(points)
    assert np.array_equal(a.projected, b.projected)
    assert np.array_equal(a.components, b.components)
