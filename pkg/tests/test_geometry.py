import numpy as np
import pytest

from src.complex import build_rips
from src.errors import DegenerateInputError, InputValidationError
from src.geometry import (
    PointCloud,
    check_distance_matrix,
    coordinate_filter,
    eccentricity_filter,
    external_filter,
    graph_geodesic_distances,
    pairwise_distances,
    pca_filter,
)


def test_pairwise_distances_small_cases():
    d = pairwise_distances(PointCloud(points=np.array([[0.0, 0.0], [3.0, 4.0]])))
    assert d[0, 1] == pytest.approx(5.0)
    assert pairwise_distances(PointCloud(points=np.array([[1.0, 2.0]]))).tolist() == [[0.0]]


def test_pairwise_distances_match_double_loop(rng):
    pts = rng.normal(size=(5, 3))
    d = pairwise_distances(PointCloud(points=pts))
    for i in range(5):
        for j in range(5):
            assert d[i, j] == pytest.approx(np.sqrt(np.sum((pts[i] - pts[j]) ** 2)), abs=1e-12)


def test_generated_metric_is_symmetric_and_triangular(rng):
    d = pairwise_distances(PointCloud(points=rng.normal(size=(20, 3))))
    assert np.allclose(d, d.T, atol=1e-9)
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-9)


def test_explicit_metric_takes_precedence():
    pts = np.array([[0.0], [1.0]])
    d = np.array([[0.0, 7.0], [7.0, 0.0]])
    assert PointCloud(points=pts, distances=d).metric()[0, 1] == 7.0


@pytest.mark.parametrize(
    "bad",
    [
        np.array([[0.0, 1.0], [2.0, 0.0]]),
        np.array([[1.0, 1.0], [1.0, 0.0]]),
        np.array([[0.0, -1.0], [-1.0, 0.0]]),
        np.zeros((2, 3)),
    ],
)
def test_check_distance_matrix_rejects(bad):
    with pytest.raises(InputValidationError):
        check_distance_matrix(bad)


def test_mismatched_metric_size_is_rejected():
    with pytest.raises(InputValidationError):
        PointCloud(points=np.zeros((3, 2)), distances=np.zeros((2, 2)))


def test_coordinate_filter():
    cloud = PointCloud(points=np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    assert coordinate_filter(cloud, 2).values[0] == 3.0
    assert coordinate_filter(cloud, 0).values.tolist() == [1.0, 4.0]
    with pytest.raises(InputValidationError):
        coordinate_filter(cloud, 3)


def test_coordinate_filter_on_circle(circle_cloud):
    v = coordinate_filter(circle_cloud, 1).values
    assert v.min() >= -1.0 and v.max() <= 1.0


def test_pca_filter_collinear_points():
    t = np.array([-2.0, -0.5, 0.0, 1.0, 3.0])
    pts = np.stack([t, t], axis=1)
    v = pca_filter(PointCloud(points=pts)).values
    # projection onto (1, 1) / sqrt(2) of the centered points
    expected = (t - t.mean()) * np.sqrt(2)
    assert np.allclose(v, expected)


def test_pca_filter_axis_aligned_cloud(rng):
    pts = rng.normal(size=(400, 2)) * np.array([2.0, 1.0])
    v = pca_filter(PointCloud(points=pts), 0).values
    x = pts[:, 0] - pts[:, 0].mean()
    c = np.corrcoef(v, x)[0, 1]
    assert abs(c) > 0.95


def test_pca_filter_degenerate():
    with pytest.raises(DegenerateInputError):
        pca_filter(PointCloud(points=np.ones((5, 3))))


def test_pca_filter_rotation_invariant_up_to_sign(rng):
    pts = rng.normal(size=(50, 3)) * np.array([3.0, 1.5, 0.5])
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    a = pca_filter(PointCloud(points=pts)).values
    b = pca_filter(PointCloud(points=pts @ q.T)).values
    assert np.allclose(a, b, atol=1e-6) or np.allclose(a, -b, atol=1e-6)


def test_eccentricity_two_points():
    d = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert eccentricity_filter(d, p=1).values.tolist() == pytest.approx([1.0, 1.0])


def test_eccentricity_large_p_approaches_row_maximum(rng):
    d = pairwise_distances(PointCloud(points=rng.uniform(0, 10, size=(10, 2))))
    v = eccentricity_filter(d, p=100).values
    top = d.max(axis=1)
    assert np.all(v <= top + 1e-9)
    assert np.all(v >= top * (1 / 10) ** (1 / 100) - 1e-9)


def test_eccentricity_does_not_overflow():
    d = pairwise_distances(PointCloud(points=np.array([[0.0], [1e3], [3e3]])))
    assert np.isfinite(eccentricity_filter(d, p=100).values).all()


def test_eccentricity_identical_points():
    assert eccentricity_filter(np.zeros((4, 4)), p=100).values.tolist() == [0.0] * 4


def test_eccentricity_permutation_equivariant(rng):
    d = pairwise_distances(PointCloud(points=rng.normal(size=(12, 2))))
    perm = rng.permutation(12)
    a = eccentricity_filter(d, 3).values
    b = eccentricity_filter(d[np.ix_(perm, perm)], 3).values
    assert np.allclose(a[perm], b)


def test_eccentricity_rejects_small_p():
    with pytest.raises(InputValidationError):
        eccentricity_filter(np.zeros((2, 2)), p=0.5)


def test_graph_geodesic_distances_on_path():
    pts = np.array([[0.0], [1.0], [2.0], [10.0]])
    d = pairwise_distances(PointCloud(points=pts))
    g = graph_geodesic_distances(build_rips(d, 0.5, max_dim=1), d)
    assert g[0, 2] == pytest.approx(2.0)
    assert np.isinf(g[0, 3])


def test_external_filter_rejects_non_finite():
    with pytest.raises(InputValidationError):
        external_filter([0.0, np.nan])


def test_pca_filter_second_component_matches_covariance_eigenvector(rng):
    pts = rng.normal(size=(80, 3)) * np.array([4.0, 2.0, 0.5])
    centered = pts - pts.mean(axis=0)
    _, vecs = np.linalg.eigh(np.cov(centered.T))
    expected = centered @ vecs[:, -2]
    v = pca_filter(PointCloud(points=pts), 1).values
    assert np.allclose(v, expected, atol=1e-8) or np.allclose(v, -expected, atol=1e-8)


def test_pca_filter_needs_more_points_than_the_component():
    with pytest.raises(DegenerateInputError):
        pca_filter(PointCloud(points=np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])), 2)
