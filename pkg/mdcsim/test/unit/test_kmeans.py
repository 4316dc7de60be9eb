import unittest

import numpy as np
import pytest

from mdcsim.core.exceptions import InfeasibleKError
from mdcsim.core.exceptions import InvalidParameterError
from mdcsim.services.placement.kmeans import weighted_kmeans


class TestWeightedKMeans(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(21)
        blobs = [rng.normal(center, 30.0, size=(60, 2)) for center in ((200, 200), (800, 300), (500, 800))]
        self.points = np.vstack(blobs)
        self.weights = rng.integers(1, 10, size=len(self.points)).astype(float)

    def test_inertia_never_increases(self):
        result = weighted_kmeans(self.points, self.weights, k=3, seed=5)
        history = np.asarray(result.inertia_history)
        self.assertTrue(np.all(history[1:] <= history[:-1] * (1 + 1e-9) + 1e-12))
        self.assertGreaterEqual(result.n_iter, 1)

    def test_every_point_is_assigned_to_its_nearest_centroid(self):
        result = weighted_kmeans(self.points, self.weights, k=3, seed=5)
        d = ((self.points[:, None, :] - result.centroids[None, :, :]) ** 2).sum(axis=2)
        np.testing.assert_array_equal(result.labels, d.argmin(axis=1))

    def test_recovers_separated_blobs(self):
        result = weighted_kmeans(self.points, self.weights, k=3, seed=5)
        found = sorted(map(tuple, np.round(result.centroids, -2)))
        self.assertEqual(found, [(200.0, 200.0), (500.0, 800.0), (800.0, 300.0)])

    def test_same_seed_same_centroids(self):
        a = weighted_kmeans(self.points, self.weights, k=3, seed=8)
        b = weighted_kmeans(self.points, self.weights, k=3, seed=8)
        np.testing.assert_array_equal(a.centroids, b.centroids)

    def test_single_cluster_is_the_weighted_mean(self):
        result = weighted_kmeans(self.points, self.weights, k=1, seed=0)
        expected = (self.points * self.weights[:, None]).sum(axis=0) / self.weights.sum()
        np.testing.assert_allclose(result.centroids[0], expected, rtol=0, atol=1e-9)


def test_zero_weight_points_are_ignored():
    points = np.array([[0.0, 0.0], [10.0, 0.0], [1000.0, 1000.0]])
    result = weighted_kmeans(points, [1.0, 1.0, 0.0], k=1, seed=0)
    np.testing.assert_allclose(result.centroids[0], [5.0, 0.0])
    assert result.labels.tolist() == [0, 0, -1]


def test_k_equal_to_point_count_puts_a_centroid_on_each_point():
    points = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    result = weighted_kmeans(points, [1.0, 2.0, 3.0], k=3, seed=1)
    assert sorted(map(tuple, result.centroids)) == [(0.0, 0.0), (0.0, 10.0), (10.0, 0.0)]
    assert result.inertia == pytest.approx(0.0)


def test_infeasible_k():
    with pytest.raises(InfeasibleKError):
        weighted_kmeans(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), [1.0, 0.0, 1.0], k=3, seed=0)


@pytest.mark.parametrize("weights,k", [([1.0, -1.0], 1), ([1.0, 1.0], 0), ([1.0], 1)])
def test_invalid_arguments(weights, k):
    with pytest.raises(InvalidParameterError):
        weighted_kmeans(np.array([[0.0, 0.0], [1.0, 1.0]]), weights, k=k, seed=0)
